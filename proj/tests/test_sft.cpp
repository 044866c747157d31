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

#include <algorithm>
#include <cmath>

#include "cropforge/optim.hpp"
#include "cropforge/parallel.hpp"
#include "cropforge/search.hpp"
#include "cropforge/sft.hpp"
#include "test_util.hpp"

namespace cropforge {
namespace {

using testing::benchmark;
using testing::expect_error;
using testing::numeric_grad;
using testing::random_features;
using testing::relative_error;

std::vector<Query> first_queries(std::size_t n) {
  const auto& q = benchmark().queries;
  return {q.begin(), q.begin() + static_cast<std::ptrdiff_t>(n)};
}

TEST(SeedDataset, ZeroNoiseGivesRawArgmaxCrops) {
  const auto queries = first_queries(30);
  const OracleConfig oracle;
  SeedOptions opt;
  const auto seeds = build_seed_dataset(benchmark(), queries, opt, oracle,
                                        [](const Query&) { return BoxNoise{}; });
  const auto grid = enumerate_grid_crops(5).crops;
  ASSERT_EQ(seeds.size(), queries.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const Query& q = queries[i];
    EXPECT_EQ(seeds[i].query_id, q.query_id);
    EXPECT_EQ(seeds[i].provenance, SeedMode::kSearch);
    EXPECT_EQ(seeds[i].box, best_crop_by_ll(benchmark().scene(q.scene_id), q, 5, oracle).box);
    EXPECT_NE(std::find(grid.begin(), grid.end(), seeds[i].box), grid.end());
  }
}

TEST(SeedDataset, SearchModeNoiseOnlyGrowsTheCrop) {
  const auto queries = first_queries(60);
  const OracleConfig oracle;
  const auto raw = build_seed_dataset(benchmark(), queries, {}, oracle,
                                      [](const Query&) { return BoxNoise{}; });
  const auto noisy = build_seed_dataset(benchmark(), queries, {}, oracle);
  EXPECT_EQ(noisy.size(), raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    EXPECT_LE(noisy[i].box.x1, raw[i].box.x1);
    EXPECT_LE(noisy[i].box.y1, raw[i].box.y1);
    EXPECT_GE(noisy[i].box.x2, raw[i].box.x2);
    EXPECT_GE(noisy[i].box.y2, raw[i].box.y2);
    EXPECT_GE(noisy[i].box.x1, raw[i].box.x1 - 20);
    EXPECT_LE(noisy[i].box.x2, raw[i].box.x2 + 20);
  }
  // Thread count does not change the draws.
  set_max_threads(1);
  const auto serial = build_seed_dataset(benchmark(), queries, {}, oracle);
  set_max_threads(0);
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_EQ(serial[i].box, noisy[i].box);
}

TEST(SeedDataset, ExternalSeedsAreExpandedByAreaBand) {
  const auto dir = testing::scratch_dir("sft_external");
  const auto queries = first_queries(3);
  // Relative areas 0.1%, 0.5% and 10%: factors 45, 4 and 1.
  const std::vector<SeedExample> raw{{queries[0].query_id, {10, 10, 11, 20}, SeedMode::kExternal},
                                     {queries[1].query_id, {40, 40, 45, 50}, SeedMode::kExternal},
                                     {queries[2].query_id, {0, 0, 10, 100}, SeedMode::kExternal}};
  const std::string path = (dir / "ext.jsonl").string();
  write_seeds(path, raw);
  SeedOptions opt;
  opt.mode = SeedMode::kExternal;
  opt.external_path = path;
  const auto seeds = build_seed_dataset(benchmark(), queries, opt, OracleConfig{});
  ASSERT_EQ(seeds.size(), 3u);
  EXPECT_EQ(seeds[0].box, expand_box(raw[0].box, 45));
  EXPECT_EQ(seeds[1].box, expand_box(raw[1].box, 4));
  EXPECT_EQ(seeds[2].box, raw[2].box);
  EXPECT_EQ(seeds[0].provenance, SeedMode::kExternal);
}

TEST(SeedDataset, FileRoundTrip) {
  const auto dir = testing::scratch_dir("sft_seeds");
  const std::vector<SeedExample> seeds{{3, {1, 2, 30, 40}, SeedMode::kSearch},
                                       {9, {0, 0, 100, 100}, SeedMode::kExternal}};
  write_seeds((dir / "s.jsonl").string(), seeds);
  const auto back = read_seeds((dir / "s.jsonl").string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].box, seeds[0].box);
  EXPECT_EQ(back[1].query_id, 9);
  EXPECT_EQ(back[1].provenance, SeedMode::kExternal);
  expect_error(ErrorKind::kFileError, [&] { read_seeds((dir / "none.jsonl").string()); });
}

TEST(SftLoss, UniformPolicyCostsLog101) {
  Logits grad;
  EXPECT_NEAR(sft_logit_loss(Logits{}, {10, 20, 30, 40}, &grad), std::log(101.0), 1e-12);
  const PolicyParams zero = PolicyParams::zeros(8, 4);
  EXPECT_NEAR(sft_loss(zero, std::vector<double>(8, 0.5), {0, 0, 1, 1}).loss,
              std::log(101.0), 1e-12);
}

TEST(SftLoss, ConfidentCorrectLogitsCostNothing) {
  const Coords target{10, 20, 30, 40};
  Logits z{};
  for (int h = 0; h < kHeads; ++h) z[h * kBins + target[h]] = 60.0;
  Logits grad;
  EXPECT_LT(sft_logit_loss(z, target, &grad), 1e-20);
  for (double g : grad) EXPECT_LT(std::abs(g), 1e-20);
}

TEST(SftLoss, GradientMatchesFiniteDifferences) {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    PolicyParams p = init_policy(rng.next_u64(), 24, 12);
    for (double& b : p.b2) b = rng.uniform(-1, 1);
    const auto f = random_features(rng, 24, 0.5);
    Coords target;
    for (int& c : target) c = static_cast<int>(rng.uniform_int(0, 100));
    const LossAndGrad lg = sft_loss(p, f, target);
    auto loss = [&](const PolicyParams& q) { return sft_loss(q, f, target).loss; };
    for (int k = 0; k < 20; ++k) {
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, p.size() - 1));
      EXPECT_LT(relative_error(lg.grads.at(i), numeric_grad(loss, p, i)), 1e-4);
    }
  }
}

std::vector<TrainExample> small_dataset(int n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainExample> data;
  for (int i = 0; i < n; ++i) {
    TrainExample ex{random_features(rng, dim, 0.3), {}};
    const int x1 = static_cast<int>(rng.uniform_int(0, 60));
    const int y1 = static_cast<int>(rng.uniform_int(0, 60));
    ex.target = {x1, y1, x1 + static_cast<int>(rng.uniform_int(5, 39)),
                 y1 + static_cast<int>(rng.uniform_int(5, 39))};
    data.push_back(ex);
  }
  return data;
}

TEST(TrainSft, LossDecreasesOnSmallDataset) {
  const auto data = small_dataset(10, 32, 42);
  SftConfig cfg;
  cfg.epochs = 50;
  // Without decay, so the loss has nothing to trade against.
  cfg.weight_decay = 0.0;
  const SftResult res = train_sft(init_policy(42, 32, 16), data, cfg);
  ASSERT_EQ(res.log.size(), 50u);
  for (std::size_t i = 1; i < res.log.size(); ++i) {
    EXPECT_LT(res.log[i].loss, res.log[i - 1].loss) << "step " << i;
  }
  EXPECT_LT(res.log.back().lr, 1e-3 * res.log.front().lr);
  EXPECT_DOUBLE_EQ(res.log.front().lr, cfg.base_lr());
}

TEST(TrainSft, ConvergesOnASingleExample) {
  const auto data = small_dataset(1, 32, 7);
  SftConfig cfg;
  cfg.epochs = 300;
  const SftResult res = train_sft(init_policy(1, 32, 16), data, cfg);
  const Logits z = forward(res.params, data[0].features);
  Rng rng(1);
  EXPECT_EQ(sample_from_logits(z, 1e-6, rng).coords, data[0].target);
}

TEST(TrainSft, DeterministicAcrossThreadCounts) {
  const auto data = small_dataset(40, 32, 3);
  SftConfig cfg;
  cfg.epochs = 3;
  set_max_threads(1);
  const SftResult a = train_sft(init_policy(5, 32, 16), data, cfg);
  set_max_threads(4);
  const SftResult b = train_sft(init_policy(5, 32, 16), data, cfg);
  set_max_threads(0);
  EXPECT_EQ(checkpoint_to_json({a.params, {}}), checkpoint_to_json({b.params, {}}));
  EXPECT_EQ(sft_log_csv(a.log), sft_log_csv(b.log));
  expect_error(ErrorKind::kEmptyDataset, [&] { train_sft(a.params, {}, cfg); });
}

TEST(ClipGradNorm, NeverIncreasesAndKeepsDirection) {
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    PolicyParams g = PolicyParams::zeros(6, 5);
    for (std::size_t i = 0; i < g.size(); ++i) g.at(i) = rng.uniform(-2, 2);
    const PolicyParams before = g;
    const double max_norm = rng.uniform(0.05, 30.0);
    const double pre = clip_grad_norm(g, max_norm);
    EXPECT_NEAR(pre, before.norm(), 1e-12);
    EXPECT_LE(g.norm(), max_norm + 1e-9);
    EXPECT_LE(g.norm(), before.norm() + 1e-12);
    const double cos = g.dot(before) / (g.norm() * before.norm());
    EXPECT_NEAR(cos, 1.0, 1e-12);
  }
}

TEST(CosineLr, Endpoints) {
  EXPECT_DOUBLE_EQ(cosine_lr(0.1, 0, 30), 0.1);
  EXPECT_NEAR(cosine_lr(0.1, 29, 30), 0.0, 1e-18);
  EXPECT_NEAR(cosine_lr(0.1, 15, 31), 0.05, 1e-15);
  EXPECT_DOUBLE_EQ(cosine_lr(0.1, 0, 1), 0.1);
}

TEST(SftConfig, Validation) {
  SftConfig cfg;
  cfg.batch = 0;
  expect_error(ErrorKind::kConfigError, [&] { cfg.check(); });
  cfg = SftConfig{};
  cfg.optimizer = "lion";
  expect_error(ErrorKind::kConfigError, [&] { cfg.check(); });
}

}  // namespace
}  // namespace cropforge
