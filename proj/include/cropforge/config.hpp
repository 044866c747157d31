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

// Run configuration: one JSON document holding every stage's settings,
// with dotted-path overrides applied on top.

#ifndef CROPFORGE_CONFIG_HPP_
#define CROPFORGE_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "cropforge/eval.hpp"
#include "cropforge/grpo.hpp"
#include "cropforge/sft.hpp"
#include "cropforge/world.hpp"

namespace cropforge {

struct WorldConfig {
  SceneSpec spec;
  int n_scenes = 200;
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
};

struct PolicyConfig {
  int hidden = 64;
  int feature_grid = 8;
  std::uint64_t init_seed = 42;

  int feature_dim() const { return 2 * feature_grid * feature_grid; }
};

enum class EvalSplit { kHeldout, kTrain, kAll };

struct EvalSettings {
  EvalConfig eval;
  EvalSplit split = EvalSplit::kHeldout;
};

struct PathsConfig {
  std::string scenes = "data/scenes.jsonl";
  std::string queries = "data/queries.jsonl";
  std::string seeds = "data/seeds.jsonl";
  std::string checkpoints = "runs";
  std::string reports = "runs";
};

struct RunConfig {
  WorldConfig world;
  OracleConfig oracle;
  PolicyConfig policy;
  SeedOptions seeds;
  SftConfig sft;
  GrpoConfig grpo;
  EvalSettings eval;
  std::vector<double> sweep_factors{0.25, 0.5, 1.0, 2.0, 4.0};
  PathsConfig paths;
  unsigned threads = 0;

  // Throws ConfigError naming the offending field.
  void check() const;
};

// Canonical JSON of a config (every field, fixed key order).
std::string config_to_json(const RunConfig& cfg, int indent = -1);

// Builds a config from defaults, an optional JSON document (unknown keys are
// rejected), "a.b.c=value" overrides, and the CROPFORGE_SEED variable, which
// replaces every stage seed. Values in overrides parse as JSON when they can
// and as strings otherwise.
RunConfig load_config(const std::string& json_text,
                      const std::vector<std::string>& overrides = {},
                      bool use_env = true);
RunConfig load_config_file(const std::string& path,
                           const std::vector<std::string>& overrides = {},
                           bool use_env = true);

}  // namespace cropforge

#endif  // CROPFORGE_CONFIG_HPP_
