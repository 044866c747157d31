// Copyright 2026 The Cropforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Stage 2: group rollouts, rewards, group-relative advantages, and the
// clipped surrogate update with a KL penalty toward the SFT policy.

#ifndef CROPFORGE_GRPO_HPP_
#define CROPFORGE_GRPO_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cropforge/policy.hpp"
#include "cropforge/sft.hpp"
#include "cropforge/world.hpp"

namespace cropforge {

enum class RewardMode { kLoglik, kAccuracy };
enum class AccuracyMetric { kVqa, kAnls };

std::string reward_mode_name(RewardMode mode);
RewardMode parse_reward_mode(const std::string& name);
std::string metric_name(AccuracyMetric metric);
AccuracyMetric parse_metric(const std::string& name);

inline constexpr double kLoglikValidityBonus = 1.0;
inline constexpr double kAccuracyValidityBonus = 0.25;

struct GrpoConfig {
  int group_size = 6;
  double temperature = 0.8;
  double beta = 0.01;
  double clip_eps = 0.2;
  double lr = 5e-6;
  double lr_scale = 2000;
  double max_grad_norm = 0.1;
  int batch = 16;
  int epochs = 1;
  // Caps the number of updates when positive.
  int max_steps = 0;
  RewardMode reward_mode = RewardMode::kLoglik;
  AccuracyMetric accuracy_metric = AccuracyMetric::kVqa;
  std::uint64_t seed = 42;
  std::string optimizer = "adam";
  double weight_decay = 0.3;

  double base_lr() const { return lr * lr_scale; }
  void check() const;
};

double answer_metric(AccuracyMetric metric, const std::string& pred, const AnswerSet& gts);

struct RewardBreakdown {
  bool valid = false;
  double task = 0.0;
  double bonus = 0.0;
  double total = 0.0;
  double readability = 0.0;
  // Oracle answer; filled in accuracy mode only.
  std::string answer;
};

// Invalid boxes are scored on the full image alone and get no bonus.
RewardBreakdown reward_breakdown(const Coords& coords, const Query& query,
                                 const Scene& scene, RewardMode mode,
                                 AccuracyMetric metric, const OracleConfig& oracle);
double compute_reward(const Coords& coords, const Query& query, const Scene& scene,
                      const GrpoConfig& cfg, const OracleConfig& oracle);

// (r - mean) / population std; all zeros when std < 1e-12.
std::vector<double> normalize_advantages(std::span<const double> rewards);

struct RolloutGroup {
  int query_id = 0;
  std::vector<BoxSample> samples;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::vector<double> ref_logprobs;
};

struct GrpoLossParts {
  double loss = 0.0;
  double surrogate = 0.0;
  double kl = 0.0;
};

// Loss for one group against d(loss)/d(logits); the group shares features.
GrpoLossParts grpo_logit_loss(const Logits& logits, const Logits& ref_logits,
                              const RolloutGroup& group, const GrpoConfig& cfg,
                              Logits* grad);

struct GrpoLoss {
  GrpoLossParts parts;
  PolicyParams grads;
};
GrpoLoss grpo_loss(const PolicyParams& params, const PolicyParams& ref_params,
                   const RolloutGroup& group, std::span<const double> features,
                   const GrpoConfig& cfg);

struct GrpoLogRow {
  int step = 0;
  double mean_reward = 0.0;
  double mean_advantage_abs = 0.0;
  double frac_valid = 0.0;
  double kl = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
};

struct GrpoResult {
  PolicyParams params;
  std::vector<GrpoLogRow> log;
};

// Called once per group, in deterministic order, before each update.
using RolloutSink = std::function<void(int step, const RolloutGroup&)>;

// params_sft doubles as the frozen KL reference. One update per batch.
GrpoResult train_grpo(const PolicyParams& params_sft, const std::vector<Query>& queries,
                      const Dataset& data, const GrpoConfig& cfg,
                      const OracleConfig& oracle, int feature_grid,
                      const RolloutSink& sink = {});

std::string grpo_log_csv(const std::vector<GrpoLogRow>& log);
std::string rollout_to_json(int step, const RolloutGroup& group);

}  // namespace cropforge

#endif  // CROPFORGE_GRPO_HPP_
