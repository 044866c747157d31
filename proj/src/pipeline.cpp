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

#include "cropforge/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cropforge/error.hpp"
#include "cropforge/grpo.hpp"

namespace cropforge {
namespace {

namespace fs = std::filesystem;

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw Error(ErrorKind::kFileError, "cannot create directory " + parent.string());
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void write_text_file(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kFileError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::kFileError, "write failed: " + path);
}

std::string log_path_for(const std::string& checkpoint_path) {
  fs::path p(checkpoint_path);
  p.replace_extension(".log.csv");
  return p.string();
}

std::vector<Query> select_queries(const Dataset& data, double train_fraction,
                                  EvalSplit split) {
  if (split == EvalSplit::kAll) return data.queries;
  Split s = split_by_scene(data, train_fraction);
  return split == EvalSplit::kTrain ? std::move(s.train) : std::move(s.heldout);
}

std::vector<TrainExample> sft_examples(const Dataset& data,
                                       const std::vector<SeedExample>& seeds,
                                       int feature_grid) {
  std::vector<TrainExample> out;
  out.reserve(seeds.size());
  for (const auto& s : seeds) {
    const Query& q = data.query(s.query_id);
    out.push_back({features(data.scene(q.scene_id), q, feature_grid),
                   Coords{s.box.x1, s.box.y1, s.box.x2, s.box.y2}});
  }
  return out;
}

void log_config(std::ostream& log, const std::string& command, const RunConfig& cfg) {
  log << "[" << command << "] config " << config_to_json(cfg) << '\n';
}

Dataset run_gen_data(const RunConfig& cfg, std::ostream& log) {
  log_config(log, "gen-data", cfg);
  Dataset data = gen_dataset(cfg.world.spec, cfg.world.seed, cfg.world.n_scenes);
  ensure_parent(cfg.paths.scenes);
  ensure_parent(cfg.paths.queries);
  write_scenes(cfg.paths.scenes, data.scenes);
  write_queries(cfg.paths.queries, data.queries);
  log << "[gen-data] wrote " << data.scenes.size() << " scenes to " << cfg.paths.scenes
      << " and " << data.queries.size() << " queries to " << cfg.paths.queries << '\n';
  return data;
}

std::vector<SeedExample> run_seed_sft(const RunConfig& cfg, std::ostream& log) {
  log_config(log, "seed-sft", cfg);
  const Dataset data = load_dataset(cfg.paths.scenes, cfg.paths.queries);
  const auto train = select_queries(data, cfg.world.train_fraction, EvalSplit::kTrain);
  if (train.empty()) throw Error(ErrorKind::kEmptyDataset, "train split is empty");
  auto seeds = build_seed_dataset(data, train, cfg.seeds, cfg.oracle);
  ensure_parent(cfg.paths.seeds);
  write_seeds(cfg.paths.seeds, seeds);
  log << "[seed-sft] mode " << seed_mode_name(cfg.seeds.mode) << ", wrote " << seeds.size()
      << " seeds to " << cfg.paths.seeds << '\n';
  return seeds;
}

Checkpoint run_sft(const RunConfig& cfg, std::ostream& log, const std::string& out_path) {
  log_config(log, "sft", cfg);
  const Dataset data = load_dataset(cfg.paths.scenes, cfg.paths.queries);
  const auto seeds = read_seeds(cfg.paths.seeds);
  const auto examples = sft_examples(data, seeds, cfg.policy.feature_grid);
  const PolicyParams init =
      init_policy(cfg.policy.init_seed, cfg.policy.feature_dim(), cfg.policy.hidden);
  SftResult res = train_sft(init, examples, cfg.sft);
  Checkpoint ckpt{std::move(res.params),
                  TrainerState{"sft", static_cast<int>(res.log.size()), cfg.sft.seed}};
  ensure_parent(out_path);
  save_checkpoint(out_path, ckpt);
  write_text_file(log_path_for(out_path), sft_log_csv(res.log));
  log << "[sft] " << res.log.size() << " steps on " << examples.size() << " examples";
  if (!res.log.empty()) log << ", final loss " << fmt(res.log.back().loss);
  log << "; wrote " << out_path << '\n';
  return ckpt;
}

Checkpoint run_grpo(const RunConfig& cfg, std::ostream& log, const std::string& in_path,
                    const std::string& out_path,
                    const std::optional<std::string>& rollouts_path) {
  log_config(log, "grpo", cfg);
  const Checkpoint init = load_checkpoint(in_path);
  if (init.params.feature_dim != cfg.policy.feature_dim()) {
    throw Error(ErrorKind::kShapeMismatch,
                "checkpoint feature_dim " + std::to_string(init.params.feature_dim) +
                    " does not match policy.feature_grid");
  }
  const Dataset data = load_dataset(cfg.paths.scenes, cfg.paths.queries);
  const auto train = select_queries(data, cfg.world.train_fraction, EvalSplit::kTrain);

  std::ofstream rollouts;
  RolloutSink sink;
  if (rollouts_path) {
    ensure_parent(*rollouts_path);
    rollouts.open(*rollouts_path, std::ios::binary | std::ios::trunc);
    if (!rollouts) throw Error(ErrorKind::kFileError, "cannot write " + *rollouts_path);
    sink = [&rollouts](int step, const RolloutGroup& g) {
      rollouts << rollout_to_json(step, g) << '\n';
    };
  }
  GrpoResult res =
      train_grpo(init.params, train, data, cfg.grpo, cfg.oracle, cfg.policy.feature_grid, sink);
  if (rollouts_path && !rollouts) {
    throw Error(ErrorKind::kFileError, "write failed: " + *rollouts_path);
  }
  Checkpoint ckpt{std::move(res.params),
                  TrainerState{"grpo", static_cast<int>(res.log.size()), cfg.grpo.seed}};
  ensure_parent(out_path);
  save_checkpoint(out_path, ckpt);
  write_text_file(log_path_for(out_path), grpo_log_csv(res.log));
  log << "[grpo] " << res.log.size() << " steps, reward mode "
      << reward_mode_name(cfg.grpo.reward_mode);
  if (!res.log.empty()) {
    log << ", final mean reward " << fmt(res.log.back().mean_reward) << ", kl "
        << fmt(res.log.back().kl);
  }
  log << "; wrote " << out_path << '\n';
  return ckpt;
}

EvalResult run_eval(const RunConfig& cfg, std::ostream& log, const std::string& checkpoint,
                    const std::string& out_prefix,
                    const std::optional<std::string>& dump_path) {
  log_config(log, "eval", cfg);
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  if (ckpt.params.feature_dim != cfg.policy.feature_dim()) {
    throw Error(ErrorKind::kShapeMismatch,
                "checkpoint feature_dim " + std::to_string(ckpt.params.feature_dim) +
                    " does not match policy.feature_grid");
  }
  const Dataset data = load_dataset(cfg.paths.scenes, cfg.paths.queries);
  const auto queries = select_queries(data, cfg.world.train_fraction, cfg.eval.split);
  EvalResult res = evaluate_policy(ckpt.params, queries, data, cfg.oracle, cfg.eval.eval,
                                   cfg.policy.feature_grid);
  write_text_file(out_prefix + ".json", report_to_json(res.report) + "\n");
  write_text_file(out_prefix + ".csv", report_to_csv(res.report));
  if (dump_path) {
    std::string text;
    for (const auto& r : res.records) text += record_to_json(r) + "\n";
    write_text_file(*dump_path, text);
  }
  log << "[eval] " << res.report.n_queries << " queries, mean_reward "
      << fmt(res.report.mean_reward) << ", mean_metric " << fmt(res.report.mean_metric)
      << ", frac_valid " << fmt(res.report.frac_valid) << "; wrote " << out_prefix
      << ".json\n";
  return res;
}

CropChoice run_search(const RunConfig& cfg, std::ostream& log, int query_id, int grid_n) {
  log_config(log, "search", cfg);
  const Dataset data = load_dataset(cfg.paths.scenes, cfg.paths.queries);
  const Query& q = data.query(query_id);
  return best_crop_by_ll(data.scene(q.scene_id), q, grid_n, cfg.oracle);
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, std::ostream& log,
                                const std::string& out_path) {
  log_config(log, "sweep", cfg);
  const Dataset data = load_dataset(cfg.paths.scenes, cfg.paths.queries);
  const auto queries = select_queries(data, cfg.world.train_fraction, cfg.eval.split);
  auto rows = expansion_sweep(queries, data, cfg.oracle, cfg.sweep_factors, cfg.eval.eval);
  write_text_file(out_path, sweep_to_csv(rows));
  log << "[sweep] " << rows.size() << " factors over " << queries.size()
      << " queries; wrote " << out_path << '\n';
  return rows;
}

}  // namespace cropforge
