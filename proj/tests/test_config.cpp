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

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cropforge/config.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace cropforge {
namespace {

using testing::expect_error;

RunConfig load(const std::string& text, const std::vector<std::string>& sets = {}) {
  return load_config(text, sets, /*use_env=*/false);
}

TEST(Config, DefaultsMirrorTheReferenceHyperparameters) {
  const RunConfig c = load("");
  EXPECT_EQ(c.grpo.group_size, 6);
  EXPECT_DOUBLE_EQ(c.grpo.temperature, 0.8);
  EXPECT_DOUBLE_EQ(c.grpo.beta, 0.01);
  EXPECT_EQ(c.grpo.batch, 16);
  EXPECT_EQ(c.sft.batch, 16);
  EXPECT_DOUBLE_EQ(c.sft.lr, 5e-5);
  EXPECT_DOUBLE_EQ(c.grpo.lr, 5e-6);
  EXPECT_DOUBLE_EQ(c.sft.max_grad_norm, 1.0);
  EXPECT_DOUBLE_EQ(c.grpo.max_grad_norm, 0.1);
  EXPECT_EQ(c.sft.epochs, 1);
  EXPECT_EQ(c.grpo.epochs, 1);
  EXPECT_EQ(c.world.n_scenes, 200);
  EXPECT_EQ(c.oracle.input_resolution, 512);
  EXPECT_EQ(c.seeds.grid_n, 5);
  EXPECT_EQ(config_to_json(c), config_to_json(RunConfig{}));
}

TEST(Config, JsonAndOverridesLayer) {
  const RunConfig c = load(R"({"grpo": {"beta": 0.05, "reward_mode": "accuracy"},
                                "world": {"n_scenes": 12}})",
                           {"grpo.beta=0.07", "eval.split=all", "paths.scenes=x/y.jsonl",
                            "oracle.use_full_image=false"});
  EXPECT_DOUBLE_EQ(c.grpo.beta, 0.07);
  EXPECT_EQ(c.grpo.reward_mode, RewardMode::kAccuracy);
  EXPECT_EQ(c.world.n_scenes, 12);
  EXPECT_EQ(c.eval.split, EvalSplit::kAll);
  EXPECT_EQ(c.paths.scenes, "x/y.jsonl");
  EXPECT_FALSE(c.oracle.use_full_image);
}

TEST(Config, CanonicalJsonRoundTrips) {
  const RunConfig c = load("", {"sft.epochs=3", "sweep.factors=[0.5,3]"});
  EXPECT_EQ(config_to_json(load(config_to_json(c, 2))), config_to_json(c));
}

TEST(Config, ErrorsNameTheField) {
  auto message = [](const std::string& text, const std::vector<std::string>& sets) {
    try {
      load(text, sets);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfigError);
      return std::string(e.what());
    }
    ADD_FAILURE() << "no error";
    return std::string();
  };
  EXPECT_NE(message(R"({"grpo": {"betta": 1}})", {}).find("grpo.betta"), std::string::npos);
  EXPECT_NE(message("", {"sft.batch=\"many\""}).find("sft.batch"), std::string::npos);
  EXPECT_NE(message("", {"grpo.group_size=1"}).find("group_size"), std::string::npos);
  EXPECT_NE(message("", {"eval.split=test"}).find("eval.split"), std::string::npos);
  EXPECT_NE(message("", {"nope"}).find("nope"), std::string::npos);
  EXPECT_NE(message("{", {}).find("JSON"), std::string::npos);
  EXPECT_NE(message("", {"world.seed=-3"}).find("world.seed"), std::string::npos);
}

TEST(Config, SeedEnvironmentVariable) {
  ::setenv("CROPFORGE_SEED", "7", 1);
  const RunConfig c = load_config("", {}, true);
  ::unsetenv("CROPFORGE_SEED");
  EXPECT_EQ(c.world.seed, 7u);
  EXPECT_EQ(c.sft.seed, 7u);
  EXPECT_EQ(c.grpo.seed, 7u);
  EXPECT_EQ(c.eval.eval.seed, 7u);
  EXPECT_EQ(c.seeds.seed, 7u);
  EXPECT_EQ(c.policy.init_seed, 7u);
  ::setenv("CROPFORGE_SEED", "abc", 1);
  expect_error(ErrorKind::kConfigError, [] { load_config("", {}, true); });
  ::unsetenv("CROPFORGE_SEED");
}

TEST(Config, FileLoading) {
  const auto dir = testing::scratch_dir("config_file");
  {
    std::ofstream(dir / "c.json") << R"({"threads": 2})";
  }
  EXPECT_EQ(load_config_file((dir / "c.json").string(), {}, false).threads, 2u);
  expect_error(ErrorKind::kFileError,
               [&] { load_config_file((dir / "missing.json").string(), {}, false); });
}

}  // namespace
}  // namespace cropforge
