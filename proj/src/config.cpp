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

#include "cropforge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cropforge/error.hpp"
#include "json.hpp"

namespace cropforge {
namespace {

using nlohmann::json;

Error config_error(const std::string& path, const std::string& why) {
  return Error(ErrorKind::kConfigError, "field '" + path + "': " + why);
}

json to_json(const RunConfig& c) {
  const SceneSpec& w = c.world.spec;
  return json{
      {"world",
       {{"n_scenes", c.world.n_scenes},
        {"train_fraction", c.world.train_fraction},
        {"seed", c.world.seed},
        {"width_min", w.width_min},
        {"width_max", w.width_max},
        {"height_min", w.height_min},
        {"height_max", w.height_max},
        {"regions_min", w.regions_min},
        {"regions_max", w.regions_max},
        {"side_min", w.side_min},
        {"side_max", w.side_max},
        {"distractors", w.distractors},
        {"vocabulary", w.vocabulary}}},
      {"oracle",
       {{"input_resolution", c.oracle.input_resolution},
        {"p0", c.oracle.p0},
        {"p1", c.oracle.p1},
        {"p_min", c.oracle.p_min},
        {"p_max", c.oracle.p_max},
        {"answer_threshold", c.oracle.answer_threshold},
        {"use_full_image", c.oracle.use_full_image}}},
      {"policy",
       {{"hidden", c.policy.hidden},
        {"feature_grid", c.policy.feature_grid},
        {"init_seed", c.policy.init_seed}}},
      {"seeds",
       {{"mode", seed_mode_name(c.seeds.mode)},
        {"external_path", c.seeds.external_path},
        {"grid_n", c.seeds.grid_n},
        {"seed", c.seeds.seed}}},
      {"sft",
       {{"lr", c.sft.lr},
        {"lr_scale", c.sft.lr_scale},
        {"batch", c.sft.batch},
        {"epochs", c.sft.epochs},
        {"max_grad_norm", c.sft.max_grad_norm},
        {"seed", c.sft.seed},
        {"optimizer", c.sft.optimizer},
        {"weight_decay", c.sft.weight_decay}}},
      {"grpo",
       {{"group_size", c.grpo.group_size},
        {"temperature", c.grpo.temperature},
        {"beta", c.grpo.beta},
        {"clip_eps", c.grpo.clip_eps},
        {"lr", c.grpo.lr},
        {"lr_scale", c.grpo.lr_scale},
        {"max_grad_norm", c.grpo.max_grad_norm},
        {"batch", c.grpo.batch},
        {"epochs", c.grpo.epochs},
        {"max_steps", c.grpo.max_steps},
        {"reward_mode", reward_mode_name(c.grpo.reward_mode)},
        {"accuracy_metric", metric_name(c.grpo.accuracy_metric)},
        {"seed", c.grpo.seed},
        {"optimizer", c.grpo.optimizer},
        {"weight_decay", c.grpo.weight_decay}}},
      {"eval",
       {{"temperature", c.eval.eval.temperature},
        {"greedy", c.eval.eval.greedy},
        {"seed", c.eval.eval.seed},
        {"reward_mode", reward_mode_name(c.eval.eval.reward_mode)},
        {"metric", metric_name(c.eval.eval.metric)},
        {"split", c.eval.split == EvalSplit::kHeldout ? "heldout"
                  : c.eval.split == EvalSplit::kTrain ? "train"
                                                       : "all"}}},
      {"sweep", {{"factors", c.sweep_factors}}},
      {"paths",
       {{"scenes", c.paths.scenes},
        {"queries", c.paths.queries},
        {"seeds", c.paths.seeds},
        {"checkpoints", c.paths.checkpoints},
        {"reports", c.paths.reports}}},
      {"threads", c.threads}};
}

void overlay(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) {
    throw config_error(path.empty() ? "<root>" : path, "expected an object");
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw config_error(key, "unknown field");
    json& target = base[it.key()];
    if (target.is_object()) {
      overlay(target, it.value(), key);
    } else {
      target = it.value();
    }
  }
}

void apply_override(json& base, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorKind::kConfigError,
                "override '" + assignment + "' is not of the form key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json* node = &base;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (!node->is_object() || !node->contains(key)) {
      throw config_error(path, "unknown field");
    }
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) throw config_error(path, "cannot override a section");
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;
  *node = value;
}

template <typename T>
T get(const json& root, const std::string& path) {
  const json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    node = &node->at(path.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if constexpr (std::is_same_v<T, bool>) {
    if (!node->is_boolean()) throw config_error(path, "expected true or false");
  } else if constexpr (std::is_integral_v<T>) {
    if (!node->is_number_integer()) throw config_error(path, "expected an integer");
    if (std::is_unsigned_v<T> && node->get<long long>() < 0 &&
        !node->is_number_unsigned()) {
      throw config_error(path, "expected a nonnegative integer");
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!node->is_number()) throw config_error(path, "expected a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!node->is_string()) throw config_error(path, "expected a string");
  }
  try {
    return node->get<T>();
  } catch (const json::exception& e) {
    throw config_error(path, e.what());
  }
}

template <typename Fn>
auto checked(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw config_error(path, e.what());
  }
}

RunConfig from_json(const json& j) {
  RunConfig c;
  SceneSpec& w = c.world.spec;
  c.world.n_scenes = get<int>(j, "world.n_scenes");
  c.world.train_fraction = get<double>(j, "world.train_fraction");
  c.world.seed = get<std::uint64_t>(j, "world.seed");
  w.width_min = get<int>(j, "world.width_min");
  w.width_max = get<int>(j, "world.width_max");
  w.height_min = get<int>(j, "world.height_min");
  w.height_max = get<int>(j, "world.height_max");
  w.regions_min = get<int>(j, "world.regions_min");
  w.regions_max = get<int>(j, "world.regions_max");
  w.side_min = get<double>(j, "world.side_min");
  w.side_max = get<double>(j, "world.side_max");
  w.distractors = get<int>(j, "world.distractors");
  w.vocabulary = get<std::vector<std::string>>(j, "world.vocabulary");

  c.oracle.input_resolution = get<int>(j, "oracle.input_resolution");
  c.oracle.p0 = get<double>(j, "oracle.p0");
  c.oracle.p1 = get<double>(j, "oracle.p1");
  c.oracle.p_min = get<double>(j, "oracle.p_min");
  c.oracle.p_max = get<double>(j, "oracle.p_max");
  c.oracle.answer_threshold = get<double>(j, "oracle.answer_threshold");
  c.oracle.use_full_image = get<bool>(j, "oracle.use_full_image");

  c.policy.hidden = get<int>(j, "policy.hidden");
  c.policy.feature_grid = get<int>(j, "policy.feature_grid");
  c.policy.init_seed = get<std::uint64_t>(j, "policy.init_seed");

  c.seeds.mode = checked("seeds.mode",
                         [&] { return parse_seed_mode(get<std::string>(j, "seeds.mode")); });
  c.seeds.external_path = get<std::string>(j, "seeds.external_path");
  c.seeds.grid_n = get<int>(j, "seeds.grid_n");
  c.seeds.seed = get<std::uint64_t>(j, "seeds.seed");

  c.sft.lr = get<double>(j, "sft.lr");
  c.sft.lr_scale = get<double>(j, "sft.lr_scale");
  c.sft.batch = get<int>(j, "sft.batch");
  c.sft.epochs = get<int>(j, "sft.epochs");
  c.sft.max_grad_norm = get<double>(j, "sft.max_grad_norm");
  c.sft.seed = get<std::uint64_t>(j, "sft.seed");
  c.sft.optimizer = get<std::string>(j, "sft.optimizer");
  c.sft.weight_decay = get<double>(j, "sft.weight_decay");

  c.grpo.group_size = get<int>(j, "grpo.group_size");
  c.grpo.temperature = get<double>(j, "grpo.temperature");
  c.grpo.beta = get<double>(j, "grpo.beta");
  c.grpo.clip_eps = get<double>(j, "grpo.clip_eps");
  c.grpo.lr = get<double>(j, "grpo.lr");
  c.grpo.lr_scale = get<double>(j, "grpo.lr_scale");
  c.grpo.max_grad_norm = get<double>(j, "grpo.max_grad_norm");
  c.grpo.batch = get<int>(j, "grpo.batch");
  c.grpo.epochs = get<int>(j, "grpo.epochs");
  c.grpo.max_steps = get<int>(j, "grpo.max_steps");
  c.grpo.reward_mode = checked("grpo.reward_mode", [&] {
    return parse_reward_mode(get<std::string>(j, "grpo.reward_mode"));
  });
  c.grpo.accuracy_metric = checked("grpo.accuracy_metric", [&] {
    return parse_metric(get<std::string>(j, "grpo.accuracy_metric"));
  });
  c.grpo.seed = get<std::uint64_t>(j, "grpo.seed");
  c.grpo.optimizer = get<std::string>(j, "grpo.optimizer");
  c.grpo.weight_decay = get<double>(j, "grpo.weight_decay");

  c.eval.eval.temperature = get<double>(j, "eval.temperature");
  c.eval.eval.greedy = get<bool>(j, "eval.greedy");
  c.eval.eval.seed = get<std::uint64_t>(j, "eval.seed");
  c.eval.eval.reward_mode = checked("eval.reward_mode", [&] {
    return parse_reward_mode(get<std::string>(j, "eval.reward_mode"));
  });
  c.eval.eval.metric = checked("eval.metric", [&] {
    return parse_metric(get<std::string>(j, "eval.metric"));
  });
  const std::string split = get<std::string>(j, "eval.split");
  if (split == "heldout") {
    c.eval.split = EvalSplit::kHeldout;
  } else if (split == "train") {
    c.eval.split = EvalSplit::kTrain;
  } else if (split == "all") {
    c.eval.split = EvalSplit::kAll;
  } else {
    throw config_error("eval.split", "expected heldout, train, or all");
  }

  c.sweep_factors = get<std::vector<double>>(j, "sweep.factors");

  c.paths.scenes = get<std::string>(j, "paths.scenes");
  c.paths.queries = get<std::string>(j, "paths.queries");
  c.paths.seeds = get<std::string>(j, "paths.seeds");
  c.paths.checkpoints = get<std::string>(j, "paths.checkpoints");
  c.paths.reports = get<std::string>(j, "paths.reports");
  c.threads = get<unsigned>(j, "threads");
  return c;
}

}  // namespace

void RunConfig::check() const {
  world.spec.check();
  if (world.n_scenes < 1) throw config_error("world.n_scenes", "must be >= 1");
  if (!(world.train_fraction >= 0.0 && world.train_fraction <= 1.0)) {
    throw config_error("world.train_fraction", "must lie in [0, 1]");
  }
  oracle.check();
  if (policy.hidden < 1) throw config_error("policy.hidden", "must be >= 1");
  if (policy.feature_grid < 2) throw config_error("policy.feature_grid", "must be >= 2");
  if (seeds.grid_n < 1 || seeds.grid_n > 20) {
    throw config_error("seeds.grid_n", "must lie in 1..20");
  }
  sft.check();
  if (sft.weight_decay < 0) throw config_error("sft.weight_decay", "must be >= 0");
  grpo.check();
  if (grpo.weight_decay < 0) throw config_error("grpo.weight_decay", "must be >= 0");
  if (!(eval.eval.temperature > 0)) throw config_error("eval.temperature", "must be positive");
  for (double f : sweep_factors) {
    if (!(f > 0)) throw config_error("sweep.factors", "factors must be positive");
  }
}

std::string config_to_json(const RunConfig& cfg, int indent) {
  return to_json(cfg).dump(indent);
}

RunConfig load_config(const std::string& json_text,
                      const std::vector<std::string>& overrides, bool use_env) {
  json merged = to_json(RunConfig{});
  if (json_text.find_first_not_of(" \t\r\n") != std::string::npos) {
    json user;
    try {
      user = json::parse(json_text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::kConfigError, std::string("config is not valid JSON: ") + e.what());
    }
    overlay(merged, user, "");
  }
  for (const auto& o : overrides) apply_override(merged, o);
  if (use_env) {
    if (const char* env = std::getenv("CROPFORGE_SEED"); env != nullptr && *env) {
      char* end = nullptr;
      const unsigned long long seed = std::strtoull(env, &end, 10);
      if (end == env || *end != '\0') {
        throw Error(ErrorKind::kConfigError, "CROPFORGE_SEED must be a nonnegative integer");
      }
      for (const char* p : {"world", "seeds", "sft", "grpo", "eval"}) merged[p]["seed"] = seed;
      merged["policy"]["init_seed"] = seed;
    }
  }
  RunConfig cfg = from_json(merged);
  cfg.check();
  return cfg;
}

RunConfig load_config_file(const std::string& path,
                           const std::vector<std::string>& overrides, bool use_env) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kFileError, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config(ss.str(), overrides, use_env);
}

}  // namespace cropforge
