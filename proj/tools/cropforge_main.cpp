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

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cropforge/bbox.hpp"
#include "cropforge/config.hpp"
#include "cropforge/error.hpp"
#include "cropforge/parallel.hpp"
#include "cropforge/pipeline.hpp"

namespace {

using namespace cropforge;

std::string join(const std::string& dir, const std::string& name) {
  return dir.empty() ? name : dir + "/" + name;
}

std::string format_ll(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cropforge: crop-selection policy training on a synthetic VQA world"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<unsigned> threads;
  app.add_option("--config", config_path, "JSON run config");
  app.add_option("--set", sets, "Override a config field, e.g. --set grpo.beta=0.02")
      ->allow_extra_args(false);
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores)");

  auto* gen = app.add_subcommand("gen-data", "Generate scenes and queries");
  std::optional<std::string> gen_scenes, gen_queries;
  gen->add_option("--scenes", gen_scenes, "Scene JSONL output");
  gen->add_option("--queries", gen_queries, "Query JSONL output");

  auto* seed = app.add_subcommand("seed-sft", "Build the SFT seed boxes");
  std::optional<std::string> seed_mode, seed_in, seed_out;
  std::optional<int> seed_grid;
  seed->add_option("--mode", seed_mode, "search or external")
      ->check(CLI::IsMember({"search", "external"}));
  seed->add_option("--in", seed_in, "External seed file (external mode)");
  seed->add_option("--grid", seed_grid, "Grid size N for search mode");
  seed->add_option("--out", seed_out, "Seed JSONL output");

  auto* sft = app.add_subcommand("sft", "Supervised fine-tuning on seed boxes");
  std::optional<std::string> sft_seeds, sft_out;
  sft->add_option("--seeds", sft_seeds, "Seed JSONL input");
  sft->add_option("--out", sft_out, "Checkpoint output");

  auto* grpo = app.add_subcommand("grpo", "GRPO training from an SFT checkpoint");
  std::optional<std::string> grpo_in, grpo_out, grpo_rollouts;
  grpo->add_option("--in", grpo_in, "Input checkpoint");
  grpo->add_option("--out", grpo_out, "Checkpoint output");
  grpo->add_option("--rollouts", grpo_rollouts, "Optional rollout JSONL dump");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::optional<std::string> ev_ckpt, ev_out, ev_dump;
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint to evaluate");
  ev->add_option("--out", ev_out, "Report prefix; writes <prefix>.json and <prefix>.csv");
  ev->add_option("--dump", ev_dump, "Optional per-query JSONL dump");

  auto* search = app.add_subcommand("search", "Best grid crop for one query");
  int search_query = 0;
  std::optional<int> search_grid;
  search->add_option("--query-id", search_query, "Query id")->required();
  search->add_option("--grid", search_grid, "Grid size N");

  auto* sweep = app.add_subcommand("sweep", "Expansion-factor sweep over GT boxes");
  std::optional<std::vector<double>> sweep_factors;
  std::optional<std::string> sweep_out;
  sweep->add_option("--factors", sweep_factors, "Area factors")->delimiter(',');
  sweep->add_option("--out", sweep_out, "Sweep CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg = config_path.empty() ? load_config("", sets)
                                        : load_config_file(config_path, sets);
    if (threads) cfg.threads = *threads;
    if (gen_scenes) cfg.paths.scenes = *gen_scenes;
    if (gen_queries) cfg.paths.queries = *gen_queries;
    if (seed_mode) cfg.seeds.mode = parse_seed_mode(*seed_mode);
    if (seed_in) cfg.seeds.external_path = *seed_in;
    if (seed_grid) cfg.seeds.grid_n = *seed_grid;
    if (seed_out) cfg.paths.seeds = *seed_out;
    if (sft_seeds) cfg.paths.seeds = *sft_seeds;
    if (sweep_factors) cfg.sweep_factors = *sweep_factors;
    cfg.check();
    set_max_threads(cfg.threads);

    std::ostream& log = std::cerr;
    const std::string& ck = cfg.paths.checkpoints;
    const std::string& rp = cfg.paths.reports;
    if (*gen) {
      run_gen_data(cfg, log);
    } else if (*seed) {
      run_seed_sft(cfg, log);
    } else if (*sft) {
      run_sft(cfg, log, sft_out.value_or(join(ck, "sft.json")));
    } else if (*grpo) {
      run_grpo(cfg, log, grpo_in.value_or(join(ck, "sft.json")),
               grpo_out.value_or(join(ck, "grpo.json")), grpo_rollouts);
    } else if (*ev) {
      run_eval(cfg, log, ev_ckpt.value_or(join(ck, "grpo.json")),
               ev_out.value_or(join(rp, "eval")), ev_dump);
    } else if (*search) {
      const CropChoice c =
          run_search(cfg, log, search_query, search_grid.value_or(cfg.seeds.grid_n));
      std::cout << format_box(c.box) << ' ' << format_ll(c.ll) << '\n';
    } else if (*sweep) {
      run_sweep(cfg, log, sweep_out.value_or(join(rp, "sweep.csv")));
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    std::cerr << "error: " << error_kind_name(e.kind()) << ": " << msg << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
