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

// Stage 1: seed-box construction and supervised fine-tuning.

#ifndef CROPFORGE_SFT_HPP_
#define CROPFORGE_SFT_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cropforge/bbox.hpp"
#include "cropforge/optim.hpp"
#include "cropforge/policy.hpp"
#include "cropforge/world.hpp"

namespace cropforge {

enum class SeedMode { kExternal, kSearch };

std::string seed_mode_name(SeedMode mode);
SeedMode parse_seed_mode(const std::string& name);

struct SeedExample {
  int query_id = 0;
  BoxPct box;
  SeedMode provenance = SeedMode::kSearch;
};

struct SeedOptions {
  SeedMode mode = SeedMode::kSearch;
  std::string external_path;
  int grid_n = 5;
  std::uint64_t seed = 42;
};

// Supplies the outward noise for one query in search mode.
using NoiseFn = std::function<BoxNoise(const Query&)>;

// External mode loads boxes from a seed file and expands each one by the
// factor for its relative area. Search mode takes the best grid crop per
// query and perturbs it outward. Without a NoiseFn, noise for query q is
// drawn from Rng(derive_seed(options.seed, {q.query_id})).
std::vector<SeedExample> build_seed_dataset(const Dataset& data,
                                            const std::vector<Query>& queries,
                                            const SeedOptions& options,
                                            const OracleConfig& oracle,
                                            const NoiseFn& noise = {});

void write_seeds(const std::string& path, const std::vector<SeedExample>& seeds);
// Provenance defaults to "external" when absent.
std::vector<SeedExample> read_seeds(const std::string& path);

struct LossAndGrad {
  double loss = 0.0;
  PolicyParams grads;
};

// Cross-entropy on logits at temperature 1, averaged over the four heads.
double sft_logit_loss(const Logits& logits, const Coords& target, Logits* grad);
LossAndGrad sft_loss(const PolicyParams& params, std::span<const double> features,
                     const Coords& target);

struct SftConfig {
  double lr = 5e-5;
  // Multiplier taking the reference learning rate to this model's scale.
  double lr_scale = 2000;
  int batch = 16;
  int epochs = 1;
  double max_grad_norm = 1.0;
  std::uint64_t seed = 42;
  std::string optimizer = "adam";
  double weight_decay = 0.3;

  double base_lr() const { return lr * lr_scale; }
  void check() const;
};

struct TrainExample {
  std::vector<double> features;
  Coords target{};
};

struct SftLogRow {
  int step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
};

struct SftResult {
  PolicyParams params;
  std::vector<SftLogRow> log;
};

SftResult train_sft(const PolicyParams& init, const std::vector<TrainExample>& data,
                    const SftConfig& config);

std::string sft_log_csv(const std::vector<SftLogRow>& log);

}  // namespace cropforge

#endif  // CROPFORGE_SFT_HPP_
