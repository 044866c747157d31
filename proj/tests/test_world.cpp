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

#include <cmath>
#include <numeric>
#include <set>

#include "cropforge/rng.hpp"
#include "cropforge/world.hpp"
#include "test_util.hpp"

namespace cropforge {
namespace {

using testing::benchmark;
using testing::expect_error;
using testing::make_query;
using testing::make_scene;

TEST(GenScene, DeterministicPerSeed) {
  const SceneSpec spec;
  const auto a = gen_scene(spec, 123, 4, 12);
  const auto b = gen_scene(spec, 123, 4, 12);
  EXPECT_EQ(scene_to_json(a.scene), scene_to_json(b.scene));
  ASSERT_EQ(a.queries.size(), b.queries.size());
  for (std::size_t i = 0; i < a.queries.size(); ++i) {
    EXPECT_EQ(query_to_json(a.queries[i]), query_to_json(b.queries[i]));
  }
  EXPECT_NE(scene_to_json(a.scene), scene_to_json(gen_scene(spec, 124, 4, 12).scene));
}

TEST(GenScene, OneRegionOneQuery) {
  SceneSpec spec;
  spec.regions_min = spec.regions_max = 1;
  const auto b = gen_scene(spec, 1);
  ASSERT_EQ(b.scene.regions.size(), 1u);
  ASSERT_EQ(b.queries.size(), 1u);
  EXPECT_EQ(b.queries[0].target_region_id, b.scene.regions[0].id);
}

TEST(GenScene, DistractorsAreNeverQueried) {
  SceneSpec spec;
  spec.regions_min = spec.regions_max = 2;
  spec.distractors = 3;
  const auto b = gen_scene(spec, 5);
  EXPECT_EQ(b.scene.regions.size(), 5u);
  EXPECT_EQ(b.queries.size(), 2u);
}

TEST(GenScene, SideBoundsGiveAreaBounds) {
  SceneSpec spec;
  spec.side_min = 0.01;
  spec.side_max = 0.02;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto b = gen_scene(spec, seed);
    for (const auto& r : b.scene.regions) {
      const double rel = static_cast<double>(r.rect.area()) /
                         (static_cast<double>(b.scene.width_px) * b.scene.height_px);
      EXPECT_GE(rel, 1e-4 - 1e-12);
      EXPECT_LE(rel, 4e-4 + 1e-12);
    }
  }
}

TEST(GenDataset, BenchmarkShape) {
  const Dataset& data = benchmark();
  EXPECT_EQ(data.scenes.size(), 200u);
  EXPECT_EQ(data.queries.size(), 600u);
  for (const auto& s : data.scenes) {
    EXPECT_EQ(s.width_px, 2048);
    EXPECT_EQ(s.height_px, 2048);
    std::set<std::string> answers;
    for (std::size_t i = 0; i < s.regions.size(); ++i) {
      const PixelRect& a = s.regions[i].rect;
      EXPECT_GE(a.x, 0);
      EXPECT_GE(a.y, 0);
      EXPECT_LE(a.x + a.w, s.width_px);
      EXPECT_LE(a.y + a.h, s.height_px);
      answers.insert(s.regions[i].answer);
      for (std::size_t j = i + 1; j < s.regions.size(); ++j) {
        const PixelRect& b = s.regions[j].rect;
        const bool disjoint = a.x + a.w <= b.x || b.x + b.w <= a.x ||
                              a.y + a.h <= b.y || b.y + b.h <= a.y;
        EXPECT_TRUE(disjoint);
      }
    }
    EXPECT_EQ(answers.size(), s.regions.size());
  }
}

TEST(Split, EightyTwentyByScene) {
  const Split s = split_by_scene(benchmark(), 0.8);
  EXPECT_EQ(s.train.size(), 480u);
  EXPECT_EQ(s.heldout.size(), 120u);
  for (const auto& q : s.train) EXPECT_LT(q.scene_id, 160);
  for (const auto& q : s.heldout) EXPECT_GE(q.scene_id, 160);
}

TEST(Scene, UnknownRegion) {
  const Scene s = make_scene(100, 100, {{{0, 0, 10, 10}, "a"}});
  expect_error(ErrorKind::kUnknownRegion, [&] { s.region(7); });
}

TEST(RenderedMinSide, Examples) {
  const OracleConfig cfg;
  const Scene s = make_scene(2048, 2048, {{{100, 100, 64, 64}, "red"}});
  EXPECT_DOUBLE_EQ(rendered_min_side(s, std::nullopt, 0, cfg), 16.0);
  // 1% of 6400 px is exactly 64 px, so a one-percent crop is the region.
  const Scene t = make_scene(6400, 6400, {{{640, 640, 64, 64}, "red"}});
  EXPECT_DOUBLE_EQ(rendered_min_side(t, BoxPct{10, 10, 11, 11}, 0, cfg), 512.0);
  EXPECT_DOUBLE_EQ(rendered_min_side(t, BoxPct{50, 50, 60, 60}, 0, cfg), 0.0);
}

TEST(Legibility, Ramp) {
  const OracleConfig cfg;
  EXPECT_DOUBLE_EQ(legibility(8.0, cfg), 0.0);
  EXPECT_DOUBLE_EQ(legibility(20.0, cfg), 0.5);
  EXPECT_DOUBLE_EQ(legibility(32.0, cfg), 1.0);
  EXPECT_DOUBLE_EQ(legibility(500.0, cfg), 1.0);
  EXPECT_DOUBLE_EQ(legibility(0.0, cfg), 0.0);
}

TEST(Readability, Examples) {
  OracleConfig cfg;
  const Scene s = make_scene(6400, 6400, {{{640, 640, 64, 64}, "red"}});
  const Query q = make_query(s, 0);
  EXPECT_DOUBLE_EQ(readability(s, q, BoxPct{10, 10, 11, 11}, cfg), 1.0);
  EXPECT_DOUBLE_EQ(readability(s, q, std::nullopt, cfg), 0.0);
  cfg.use_full_image = false;
  EXPECT_DOUBLE_EQ(readability(s, q, BoxPct{50, 50, 60, 60}, cfg), 0.0);
}

TEST(Readability, CoverageScalesTheCropTerm) {
  const OracleConfig cfg;
  // 10% x 1% region; a crop over 3 of its 10 percent columns covers 30%.
  const Scene s = make_scene(10000, 10000, {{{1000, 1000, 1000, 100}, "red"}});
  const Query q = make_query(s, 0);
  EXPECT_NEAR(readability(s, q, BoxPct{10, 10, 13, 11}, cfg), 0.3, 1e-15);
}

TEST(Readability, FullImageNeverHurts) {
  const Dataset& data = benchmark();
  OracleConfig with, without;
  without.use_full_image = false;
  Rng rng(8);
  for (int i = 0; i < 600; ++i) {
    const Query& q = data.queries[i];
    const Scene& s = data.scene(q.scene_id);
    const int x1 = static_cast<int>(rng.uniform_int(0, 99));
    const int y1 = static_cast<int>(rng.uniform_int(0, 99));
    const BoxPct crop{x1, y1, static_cast<int>(rng.uniform_int(x1 + 1, 100)),
                      static_cast<int>(rng.uniform_int(y1 + 1, 100))};
    const double a = readability(s, q, crop, with);
    const double b = readability(s, q, crop, without);
    EXPECT_GE(a, b);
    EXPECT_GE(a, readability(s, q, std::nullopt, with));
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(Loglik, ClosedForm) {
  const OracleConfig cfg;
  EXPECT_NEAR(loglik_from_readability(1.0, "red", cfg), 3 * std::log(0.98), 1e-15);
  EXPECT_NEAR(loglik_from_readability(1.0, "red", cfg), -0.0606, 1e-4);
  EXPECT_NEAR(loglik_from_readability(0.0, "red", cfg), -11.736, 1e-3);
  for (double r = 0.0; r < 1.0; r += 0.01) {
    EXPECT_LT(loglik_from_readability(r, "harbor", cfg),
              loglik_from_readability(r + 0.01, "harbor", cfg));
  }
}

TEST(Loglik, GroundTruthCropAttainsTheMaximum) {
  const Dataset& data = benchmark();
  const OracleConfig cfg;
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const Query& q = data.queries[static_cast<std::size_t>(i) * 6];
    const Scene& s = data.scene(q.scene_id);
    const double best = oracle_loglik(s, q, target_box(s, q), cfg);
    EXPECT_DOUBLE_EQ(readability(s, q, target_box(s, q), cfg), 1.0);
    for (int k = 0; k < 50; ++k) {
      const int x1 = static_cast<int>(rng.uniform_int(0, 99));
      const int y1 = static_cast<int>(rng.uniform_int(0, 99));
      const BoxPct crop{x1, y1, static_cast<int>(rng.uniform_int(x1 + 1, 100)),
                        static_cast<int>(rng.uniform_int(y1 + 1, 100))};
      EXPECT_LE(oracle_loglik(s, q, crop, cfg), best);
    }
  }
}

TEST(OracleAnswer, Rules) {
  const OracleConfig cfg;
  const Scene lone = make_scene(6400, 6400, {{{640, 640, 64, 64}, "red"}});
  const Query lq = make_query(lone, 0);
  EXPECT_EQ(oracle_answer(lone, lq, BoxPct{10, 10, 11, 11}, cfg), "red");
  EXPECT_EQ(oracle_answer(lone, lq, std::nullopt, cfg), kUnreadable);
  EXPECT_EQ(oracle_answer(lone, lq, BoxPct{50, 50, 60, 60}, cfg), kUnreadable);

  const Scene s = make_scene(10000, 10000,
                             {{{1000, 1000, 1000, 100}, "red"},
                              {{8000, 8000, 100, 100}, "blue"},
                              {{5000, 5000, 100, 100}, "green"}});
  const Query q = make_query(s, 0);
  ASSERT_NEAR(readability(s, q, BoxPct{10, 10, 13, 11}, cfg), 0.3, 1e-15);
  EXPECT_EQ(oracle_answer(s, q, BoxPct{10, 10, 13, 11}, cfg), "green");
  EXPECT_EQ(oracle_answer(s, q, BoxPct{79, 79, 82, 82}, cfg), "blue");
}

TEST(Features, SingleCellTarget) {
  const Scene s = make_scene(800, 800, {{{200, 300, 100, 100}, "red"}});
  const auto f = features(s, make_query(s, 0), 8);
  ASSERT_EQ(f.size(), 128u);
  for (int i = 0; i < 64; ++i) EXPECT_EQ(f[i], i == 3 * 8 + 2 ? 1.0 : 0.0);
  for (int i = 64; i < 128; ++i) EXPECT_EQ(f[i], 0.0);
  expect_error(ErrorKind::kInvalidArgument, [&] { features(s, make_query(s, 0), 1); });
}

TEST(Features, TargetChannelConservesArea) {
  const Dataset& data = benchmark();
  for (const Query& q : data.queries) {
    const Scene& s = data.scene(q.scene_id);
    for (int grid : {2, 5, 8, 13}) {
      const auto f = features(s, q, grid);
      const auto cells = static_cast<std::ptrdiff_t>(grid * grid);
      const double target = std::accumulate(f.begin(), f.begin() + cells, 0.0);
      const double others = std::accumulate(f.begin() + cells, f.end(), 0.0);
      // Channel 1 spreads the target's unit mass over the cells it touches.
      EXPECT_NEAR(target, 1.0, 1e-9);
      EXPECT_LE(others, static_cast<double>(s.regions.size() - 1) + 1e-9);
      for (double v : f) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST(Jsonl, RoundTrip) {
  const auto dir = testing::scratch_dir("world_jsonl");
  const Dataset& data = benchmark();
  const std::string sp = (dir / "s.jsonl").string(), qp = (dir / "q.jsonl").string();
  write_scenes(sp, data.scenes);
  write_queries(qp, data.queries);
  const Dataset back = load_dataset(sp, qp);
  ASSERT_EQ(back.scenes.size(), data.scenes.size());
  ASSERT_EQ(back.queries.size(), data.queries.size());
  for (std::size_t i = 0; i < data.scenes.size(); ++i) {
    EXPECT_EQ(scene_to_json(back.scenes[i]), scene_to_json(data.scenes[i]));
  }
  for (std::size_t i = 0; i < data.queries.size(); ++i) {
    EXPECT_EQ(query_to_json(back.queries[i]), query_to_json(data.queries[i]));
  }
  expect_error(ErrorKind::kFileError,
               [&] { read_scenes((dir / "missing.jsonl").string()); });
}

}  // namespace
}  // namespace cropforge
