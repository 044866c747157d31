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

// Shared fixtures for the unit tests.

#ifndef CROPFORGE_TESTS_TEST_UTIL_HPP_
#define CROPFORGE_TESTS_TEST_UTIL_HPP_

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cropforge/error.hpp"
#include "cropforge/policy.hpp"
#include "cropforge/world.hpp"

namespace cropforge::testing {

// Scene with regions numbered 0, 1, ... in the given order.
inline Scene make_scene(int width, int height,
                        const std::vector<std::pair<PixelRect, std::string>>& regions) {
  Scene s;
  s.width_px = width;
  s.height_px = height;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    s.regions.push_back({static_cast<int>(i), regions[i].first, regions[i].second});
  }
  return s;
}

inline Query make_query(const Scene& scene, int region_id, int query_id = 0) {
  const std::string& a = scene.region(region_id).answer;
  return {query_id, scene.scene_id, region_id, "What is written here?", {a, a, a}};
}

// The pinned benchmark: seed 42, 200 scenes, default spec.
inline const Dataset& benchmark() {
  static const Dataset data = gen_dataset(SceneSpec{}, 42, 200);
  return data;
}

inline void expect_error(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << error_kind_name(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cropforge_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// |a - n| / max(|a|, |n|), with a floor so that two exact zeros agree.
inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
  return std::abs(analytic - numeric) / scale;
}

// Central difference of loss at flat parameter index i.
inline double numeric_grad(const std::function<double(const PolicyParams&)>& loss,
                           const PolicyParams& params, std::size_t i, double h = 1e-4) {
  PolicyParams p = params;
  const double orig = p.at(i);
  p.at(i) = orig + h;
  const double up = loss(p);
  p.at(i) = orig - h;
  const double down = loss(p);
  return (up - down) / (2 * h);
}

// Random features in [0, 1] with roughly the given fraction of nonzeros.
template <typename RngT>
std::vector<double> random_features(RngT& rng, int dim, double density = 0.3) {
  std::vector<double> f(static_cast<std::size_t>(dim), 0.0);
  for (double& v : f) {
    if (rng.uniform() < density) v = rng.uniform();
  }
  return f;
}

}  // namespace cropforge::testing

#endif  // CROPFORGE_TESTS_TEST_UTIL_HPP_
