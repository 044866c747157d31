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

#include "cropforge/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cropforge/error.hpp"
#include "cropforge/metrics.hpp"
#include "cropforge/parallel.hpp"
#include "cropforge/rng.hpp"
#include "json.hpp"

namespace cropforge {

std::string reward_mode_name(RewardMode mode) {
  return mode == RewardMode::kLoglik ? "loglik" : "accuracy";
}

RewardMode parse_reward_mode(const std::string& name) {
  if (name == "loglik") return RewardMode::kLoglik;
  if (name == "accuracy") return RewardMode::kAccuracy;
  throw Error(ErrorKind::kConfigError, "unknown reward mode '" + name + "'");
}

std::string metric_name(AccuracyMetric metric) {
  return metric == AccuracyMetric::kVqa ? "vqa" : "anls";
}

AccuracyMetric parse_metric(const std::string& name) {
  if (name == "vqa") return AccuracyMetric::kVqa;
  if (name == "anls") return AccuracyMetric::kAnls;
  throw Error(ErrorKind::kConfigError, "unknown accuracy metric '" + name + "'");
}

void GrpoConfig::check() const {
  auto bad = [](const char* what) { return Error(ErrorKind::kConfigError, what); };
  if (group_size < 2) throw bad("grpo.group_size must be >= 2");
  if (!(temperature > 0)) throw bad("grpo.temperature must be positive");
  if (!(beta >= 0)) throw bad("grpo.beta must be >= 0");
  if (!(clip_eps > 0)) throw bad("grpo.clip_eps must be positive");
  if (!(lr > 0) || !(lr_scale > 0)) throw bad("grpo.lr and grpo.lr_scale must be positive");
  if (!(max_grad_norm > 0)) throw bad("grpo.max_grad_norm must be positive");
  if (batch < 1) throw bad("grpo.batch must be >= 1");
  if (epochs < 1) throw bad("grpo.epochs must be >= 1");
  if (max_steps < 0) throw bad("grpo.max_steps must be >= 0");
  parse_optimizer(optimizer);
}

double answer_metric(AccuracyMetric metric, const std::string& pred, const AnswerSet& gts) {
  return metric == AccuracyMetric::kVqa ? vqa_accuracy(pred, gts) : anls(pred, gts);
}

RewardBreakdown reward_breakdown(const Coords& coords, const Query& query,
                                 const Scene& scene, RewardMode mode,
                                 AccuracyMetric metric, const OracleConfig& oracle) {
  const BoxPct box{coords[0], coords[1], coords[2], coords[3]};
  RewardBreakdown r;
  r.valid = validate(box);
  const Crop crop = r.valid ? Crop(box) : std::nullopt;
  r.readability = readability(scene, query, crop, oracle);
  if (mode == RewardMode::kLoglik) {
    r.task = loglik_from_readability(r.readability, most_common_answer(query.gts), oracle);
    r.bonus = r.valid ? kLoglikValidityBonus : 0.0;
  } else {
    r.answer = oracle_answer(scene, query, crop, oracle);
    r.task = answer_metric(metric, r.answer, query.gts);
    r.bonus = r.valid ? kAccuracyValidityBonus : 0.0;
  }
  r.total = r.task + r.bonus;
  return r;
}

double compute_reward(const Coords& coords, const Query& query, const Scene& scene,
                      const GrpoConfig& cfg, const OracleConfig& oracle) {
  return reward_breakdown(coords, query, scene, cfg.reward_mode, cfg.accuracy_metric,
                          oracle)
      .total;
}

std::vector<double> normalize_advantages(std::span<const double> rewards) {
  const std::size_t g = rewards.size();
  if (g < 2) throw Error(ErrorKind::kGroupTooSmall, "group needs at least 2 rewards");
  // Offsets from the first reward: an exact shift of the group cancels here
  // instead of leaking rounding into the mean.
  std::vector<double> d(g);
  for (std::size_t i = 0; i < g; ++i) d[i] = rewards[i] - rewards[0];
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(g));
  std::vector<double> adv(g, 0.0);
  if (!(sd >= 1e-12)) return adv;
  for (std::size_t i = 0; i < g; ++i) adv[i] = (d[i] - mean) / sd;
  return adv;
}

GrpoLossParts grpo_logit_loss(const Logits& logits, const Logits& ref_logits,
                              const RolloutGroup& group, const GrpoConfig& cfg,
                              Logits* grad) {
  const std::size_t g = group.samples.size();
  if (g == 0 || group.advantages.size() != g) {
    throw Error(ErrorKind::kShapeMismatch, "group advantages do not match samples");
  }
  GrpoLossParts parts;
  if (grad) grad->fill(0.0);
  const double inv_g = 1.0 / static_cast<double>(g);
  for (std::size_t i = 0; i < g; ++i) {
    const BoxSample& s = group.samples[i];
    const double adv = group.advantages[i];
    const double lp = logprob_from_logits(logits, s.coords, cfg.temperature).total;
    const double ratio = std::exp(lp - s.logprob_old);
    const double unclipped = ratio * adv;
    const double clipped =
        std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
    parts.surrogate -= inv_g * std::min(unclipped, clipped);
    if (grad && unclipped <= clipped && adv != 0.0) {
      const Logits dlp = logprob_grad_logits(logits, s.coords, cfg.temperature);
      const double c = -inv_g * ratio * adv;
      for (int k = 0; k < kLogits; ++k) (*grad)[k] += c * dlp[k];
    }
  }
  parts.kl = kl_from_logits(logits, ref_logits, cfg.temperature);
  if (grad && cfg.beta > 0.0) {
    const Logits dkl = kl_grad_logits(logits, ref_logits, cfg.temperature);
    for (int k = 0; k < kLogits; ++k) (*grad)[k] += cfg.beta * dkl[k];
  }
  parts.loss = parts.surrogate + cfg.beta * parts.kl;
  return parts;
}

GrpoLoss grpo_loss(const PolicyParams& params, const PolicyParams& ref_params,
                   const RolloutGroup& group, std::span<const double> features,
                   const GrpoConfig& cfg) {
  if (!params.same_shape(ref_params)) {
    throw Error(ErrorKind::kShapeMismatch, "policy and reference shapes differ");
  }
  const ForwardPass pass = forward_pass(params, features);
  const Logits ref_logits = forward(ref_params, features);
  Logits g{};
  GrpoLoss out{grpo_logit_loss(pass.logits, ref_logits, group, cfg, &g),
               params.zeros_like()};
  backward_into(params, features, pass, g, 1.0, out.grads);
  return out;
}

namespace {

struct GroupWork {
  RolloutGroup group;
  ForwardPass pass;
  Logits logit_grads{};
  double kl = 0.0;
  int n_valid = 0;
};

}  // namespace

GrpoResult train_grpo(const PolicyParams& params_sft, const std::vector<Query>& queries,
                      const Dataset& data, const GrpoConfig& cfg,
                      const OracleConfig& oracle, int feature_grid,
                      const RolloutSink& sink) {
  cfg.check();
  if (queries.empty()) throw Error(ErrorKind::kEmptyDataset, "no queries for GRPO");
  const PolicyParams& ref = params_sft;
  GrpoResult result{params_sft, {}};
  PolicyParams& params = result.params;

  const std::size_t n = queries.size();
  std::vector<std::vector<double>> feats(n);
  std::vector<Logits> ref_logits(n);
  parallel_for(n, [&](std::size_t i) {
    feats[i] = features(data.scene(queries[i].scene_id), queries[i], feature_grid);
    ref_logits[i] = forward(ref, feats[i]);
  });

  const int per_epoch = static_cast<int>((n + cfg.batch - 1) / cfg.batch);
  int total = per_epoch * cfg.epochs;
  if (cfg.max_steps > 0) total = std::min(total, cfg.max_steps);

  std::vector<std::size_t> order(n);
  Optimizer opt(parse_optimizer(cfg.optimizer), params, cfg.weight_decay);
  int step = 0;
  for (int epoch = 0; step < total; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(cfg.seed, {0x5eedULL, static_cast<std::uint64_t>(epoch)}));
    shuffle_rng.shuffle(order);
    for (int b = 0; b < per_epoch && step < total; ++b, ++step) {
      const std::size_t lo = static_cast<std::size_t>(b) * cfg.batch;
      const std::size_t hi = std::min(n, lo + cfg.batch);
      const std::size_t m = hi - lo;
      std::vector<GroupWork> work(m);
      parallel_for(m, [&](std::size_t j) {
        const std::size_t qi = order[lo + j];
        const Query& q = queries[qi];
        const Scene& scene = data.scene(q.scene_id);
        GroupWork& w = work[j];
        w.pass = forward_pass(params, feats[qi]);
        w.group.query_id = q.query_id;
        for (int i = 0; i < cfg.group_size; ++i) {
          Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(step),
                                         static_cast<std::uint64_t>(q.query_id),
                                         static_cast<std::uint64_t>(i)}));
          BoxSample s = sample_from_logits(w.pass.logits, cfg.temperature, rng);
          const RewardBreakdown r = reward_breakdown(s.coords, q, scene, cfg.reward_mode,
                                                     cfg.accuracy_metric, oracle);
          w.n_valid += r.valid ? 1 : 0;
          w.group.rewards.push_back(r.total);
          w.group.ref_logprobs.push_back(
              logprob_from_logits(ref_logits[qi], s.coords, cfg.temperature).total);
          w.group.samples.push_back(s);
        }
        w.group.advantages = normalize_advantages(w.group.rewards);
        w.kl = grpo_logit_loss(w.pass.logits, ref_logits[qi], w.group, cfg,
                               &w.logit_grads)
                   .kl;
      });

      PolicyParams grad = params.zeros_like();
      GrpoLogRow row;
      row.step = step;
      const double inv_m = 1.0 / static_cast<double>(m);
      double n_valid = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const GroupWork& w = work[j];
        if (sink) sink(step, w.group);
        backward_into(params, feats[order[lo + j]], w.pass, w.logit_grads, inv_m, grad);
        for (std::size_t i = 0; i < w.group.rewards.size(); ++i) {
          row.mean_reward += w.group.rewards[i];
          row.mean_advantage_abs += std::abs(w.group.advantages[i]);
        }
        n_valid += w.n_valid;
        row.kl += w.kl * inv_m;
      }
      const double samples = static_cast<double>(m) * cfg.group_size;
      row.mean_reward /= samples;
      row.mean_advantage_abs /= samples;
      row.frac_valid = n_valid / samples;
      row.grad_norm = clip_grad_norm(grad, cfg.max_grad_norm);
      row.lr = cosine_lr(cfg.base_lr(), step, total);
      opt.step(params, grad, row.lr);
      result.log.push_back(row);
    }
  }
  return result;
}

std::string grpo_log_csv(const std::vector<GrpoLogRow>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "step,mean_reward,mean_advantage_abs,frac_valid,kl,lr,grad_norm\n";
  for (const auto& r : log) {
    os << r.step << ',' << r.mean_reward << ',' << r.mean_advantage_abs << ','
       << r.frac_valid << ',' << r.kl << ',' << r.lr << ',' << r.grad_norm << '\n';
  }
  return os.str();
}

std::string rollout_to_json(int step, const RolloutGroup& group) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : group.samples) {
    samples.push_back({{"coords", s.coords},
                       {"logprob_old", s.logprob_old},
                       {"per_head_logprob_old", s.per_head_logprob_old}});
  }
  nlohmann::json j{{"step", step},
                   {"query_id", group.query_id},
                   {"samples", samples},
                   {"rewards", group.rewards},
                   {"advantages", group.advantages},
                   {"ref_logprobs", group.ref_logprobs}};
  return j.dump();
}

}  // namespace cropforge
