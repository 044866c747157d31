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

// Pipeline stages behind the command-line tool. Each stage reads its inputs
// from files, writes its artifacts, and logs the effective config first.

#ifndef CROPFORGE_PIPELINE_HPP_
#define CROPFORGE_PIPELINE_HPP_

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cropforge/config.hpp"
#include "cropforge/eval.hpp"
#include "cropforge/policy.hpp"
#include "cropforge/search.hpp"
#include "cropforge/sft.hpp"
#include "cropforge/world.hpp"

namespace cropforge {

// Creates parent directories as needed; FileError on failure.
void write_text_file(const std::string& path, const std::string& text);

// "<stem>.log.csv" next to a checkpoint path.
std::string log_path_for(const std::string& checkpoint_path);

std::vector<Query> select_queries(const Dataset& data, double train_fraction,
                                  EvalSplit split);

std::vector<TrainExample> sft_examples(const Dataset& data,
                                       const std::vector<SeedExample>& seeds,
                                       int feature_grid);

void log_config(std::ostream& log, const std::string& command, const RunConfig& cfg);

Dataset run_gen_data(const RunConfig& cfg, std::ostream& log);

// Seeds cover the train split only.
std::vector<SeedExample> run_seed_sft(const RunConfig& cfg, std::ostream& log);

Checkpoint run_sft(const RunConfig& cfg, std::ostream& log, const std::string& out_path);

// rollouts_path, when set, receives one JSON line per rollout group.
Checkpoint run_grpo(const RunConfig& cfg, std::ostream& log, const std::string& in_path,
                    const std::string& out_path,
                    const std::optional<std::string>& rollouts_path = std::nullopt);

// Writes <out_prefix>.json and <out_prefix>.csv; dump_path, when set,
// receives one record per query.
EvalResult run_eval(const RunConfig& cfg, std::ostream& log, const std::string& checkpoint,
                    const std::string& out_prefix,
                    const std::optional<std::string>& dump_path = std::nullopt);

CropChoice run_search(const RunConfig& cfg, std::ostream& log, int query_id, int grid_n);

std::vector<SweepRow> run_sweep(const RunConfig& cfg, std::ostream& log,
                                const std::string& out_path);

}  // namespace cropforge

#endif  // CROPFORGE_PIPELINE_HPP_
