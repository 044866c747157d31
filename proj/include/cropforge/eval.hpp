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

#ifndef CROPFORGE_EVAL_HPP_
#define CROPFORGE_EVAL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cropforge/bbox.hpp"
#include "cropforge/grpo.hpp"
#include "cropforge/policy.hpp"
#include "cropforge/world.hpp"

namespace cropforge {

struct EvalConfig {
  double temperature = 0.8;
  bool greedy = true;
  std::uint64_t seed = 42;
  RewardMode reward_mode = RewardMode::kLoglik;
  AccuracyMetric metric = AccuracyMetric::kVqa;
};

// Box-quality means are taken over valid predictions only and are absent
// when no prediction was valid.
struct EvalReport {
  int n_queries = 0;
  int n_valid = 0;
  double mean_reward = 0.0;
  double mean_metric = 0.0;
  double mean_readability = 0.0;
  std::optional<double> mean_iou;
  std::optional<double> mean_recall;
  std::optional<double> full_recall_rate;
  std::optional<double> mean_rel_size;
  double frac_valid = 0.0;
};

// One evaluated query; the rollout dump is a JSONL of these.
struct EvalRecord {
  int query_id = 0;
  Coords coords{};
  bool valid = false;
  double reward = 0.0;
  std::string answer;
  double metric = 0.0;
  double readability = 0.0;
  std::optional<BoxQuality> quality;
};

struct EvalResult {
  EvalReport report;
  std::vector<EvalRecord> records;
};

EvalResult evaluate_policy(const PolicyParams& params, const std::vector<Query>& queries,
                           const Dataset& data, const OracleConfig& oracle,
                           const EvalConfig& cfg, int feature_grid);

// Predictions supplied directly, e.g. from a fixed or hand-built policy.
EvalResult evaluate_boxes(const std::vector<Coords>& boxes,
                          const std::vector<Query>& queries, const Dataset& data,
                          const OracleConfig& oracle, const EvalConfig& cfg);

EvalReport aggregate(const std::vector<EvalRecord>& records);

std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);
std::string record_to_json(const EvalRecord& record);

struct SweepRow {
  double factor = 1.0;
  double mean_metric = 0.0;
  double mean_reward = 0.0;
};

// Crops are the ground-truth boxes scaled in area by each factor, always
// shown together with the full image unless the oracle disables it.
std::vector<SweepRow> expansion_sweep(const std::vector<Query>& queries,
                                      const Dataset& data, const OracleConfig& oracle,
                                      const std::vector<double>& factors,
                                      const EvalConfig& cfg);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace cropforge

#endif  // CROPFORGE_EVAL_HPP_
