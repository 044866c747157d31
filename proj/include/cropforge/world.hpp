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

// Synthetic VQA scenes and the closed-form reward oracle that scores crops
// by how legible the target region becomes once a view is fit into the
// reward model's input resolution.

#ifndef CROPFORGE_WORLD_HPP_
#define CROPFORGE_WORLD_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cropforge/bbox.hpp"
#include "cropforge/metrics.hpp"

namespace cropforge {

struct Region {
  int id = 0;
  PixelRect rect;
  std::string answer;
};

struct Scene {
  int scene_id = 0;
  int width_px = 0;
  int height_px = 0;
  std::vector<Region> regions;
  std::uint64_t seed = 0;

  // Throws UnknownRegion.
  const Region& region(int id) const;
};

struct Query {
  int query_id = 0;
  int scene_id = 0;
  int target_region_id = 0;
  std::string question;
  AnswerSet gts;
};

struct OracleConfig {
  int input_resolution = 512;
  double p0 = 8.0;
  double p1 = 32.0;
  double p_min = 0.02;
  double p_max = 0.98;
  double answer_threshold = 0.5;
  bool use_full_image = true;

  // Throws ConfigError when an invariant is violated.
  void check() const;
};

struct SceneSpec {
  int width_min = 2048;
  int width_max = 2048;
  int height_min = 2048;
  int height_max = 2048;
  // Queried regions per scene.
  int regions_min = 3;
  int regions_max = 3;
  // Region side lengths as fractions of the canvas side.
  double side_min = 0.01;
  double side_max = 0.04;
  // Extra regions that are never the target of a query.
  int distractors = 0;
  std::vector<std::string> vocabulary = default_vocabulary();

  static std::vector<std::string> default_vocabulary();
  void check() const;
};

struct SceneBundle {
  Scene scene;
  std::vector<Query> queries;
};

// Deterministic in (spec, seed). Query ids are first_query_id, +1, ...
SceneBundle gen_scene(const SceneSpec& spec, std::uint64_t seed,
                      int scene_id = 0, int first_query_id = 0);

struct Dataset {
  std::vector<Scene> scenes;
  std::vector<Query> queries;

  const Scene& scene(int scene_id) const;
  const Query& query(int query_id) const;
  void reindex();

 private:
  std::map<int, std::size_t> scene_index_;
  std::map<int, std::size_t> query_index_;
};

// n_scenes scenes, scene k seeded with derive_seed(seed, {k}).
Dataset gen_dataset(const SceneSpec& spec, std::uint64_t seed, int n_scenes);

// Scenes with id < floor(train_fraction * n) are train, the rest held out.
struct Split {
  std::vector<Query> train;
  std::vector<Query> heldout;
};
Split split_by_scene(const Dataset& data, double train_fraction);

using Crop = std::optional<BoxPct>;

// Smaller side of region ∩ view after the view is fit into R x R with the
// longer side scaled to R. No view means the whole image.
double rendered_min_side(const Scene& scene, const Crop& view, int region_id,
                         const OracleConfig& cfg);

double legibility(double rendered_px, const OracleConfig& cfg);

double readability(const Scene& scene, const Query& query, const Crop& crop,
                   const OracleConfig& cfg);

// T * log(p_min + (p_max - p_min) * readability), T = answer length in
// characters after normalization.
double loglik_from_readability(double readability, const std::string& answer,
                               const OracleConfig& cfg);
double oracle_loglik(const Scene& scene, const Query& query, const Crop& crop,
                     const OracleConfig& cfg);

inline constexpr const char* kUnreadable = "unreadable";

std::string oracle_answer(const Scene& scene, const Query& query,
                          const Crop& crop, const OracleConfig& cfg);

// 2 * grid^2 values, cells row-major. Channel 1 holds, per cell, the
// fraction of the target region's area inside that cell (so it sums to 1);
// channel 2 holds the same for every other region, summed and clamped to 1.
std::vector<double> features(const Scene& scene, const Query& query, int grid);

// Ground-truth percent box of the query's target region.
BoxPct target_box(const Scene& scene, const Query& query);

// Line-delimited JSON persistence.
void write_scenes(const std::string& path, const std::vector<Scene>& scenes);
std::vector<Scene> read_scenes(const std::string& path);
void write_queries(const std::string& path, const std::vector<Query>& queries);
std::vector<Query> read_queries(const std::string& path);
Dataset load_dataset(const std::string& scenes_path,
                     const std::string& queries_path);

std::string scene_to_json(const Scene& scene);
std::string query_to_json(const Query& query);

}  // namespace cropforge

#endif  // CROPFORGE_WORLD_HPP_
