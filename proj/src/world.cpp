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

#include "cropforge/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "cropforge/error.hpp"
#include "cropforge/rng.hpp"
#include "json.hpp"

namespace cropforge {
namespace {

using nlohmann::json;

constexpr int kMaxPlacementTries = 1000;

long long overlap_area(const PixelRect& a, const PixelRect& b) {
  const long long w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const long long h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  return (w > 0 && h > 0) ? w * h : 0;
}

PixelRect intersect(const PixelRect& a, const PixelRect& b) {
  const int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.x + a.w, b.x + b.w);
  const int y1 = std::min(a.y + a.h, b.y + b.h);
  if (x1 <= x0 || y1 <= y0) return PixelRect{x0, y0, 0, 0};
  return PixelRect{x0, y0, x1 - x0, y1 - y0};
}

PixelRect view_rect(const Scene& scene, const Crop& view) {
  if (!view) return PixelRect{0, 0, scene.width_px, scene.height_px};
  return to_pixels(*view, scene.width_px, scene.height_px);
}

int side_px(double frac, int canvas, double lo, double hi) {
  const int min_px = std::max(1, static_cast<int>(std::ceil(lo * canvas - 1e-9)));
  const int max_px = std::max(min_px, static_cast<int>(std::floor(hi * canvas + 1e-9)));
  return std::clamp(static_cast<int>(std::lround(frac * canvas)), min_px, max_px);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kFileError, "cannot write " + path);
  return out;
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kFileError, "cannot read " + path);
  std::vector<json> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kFileError,
                  path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

template <typename T>
T field(const json& j, const char* name, const std::string& where) {
  if (!j.contains(name)) {
    throw Error(ErrorKind::kFileError, where + ": missing field '" + name + "'");
  }
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFileError,
                where + ": bad field '" + name + "': " + e.what());
  }
}

}  // namespace

const Region& Scene::region(int id) const {
  for (const auto& r : regions) {
    if (r.id == id) return r;
  }
  throw Error(ErrorKind::kUnknownRegion,
              "scene " + std::to_string(scene_id) + " has no region " +
                  std::to_string(id));
}

void OracleConfig::check() const {
  auto bad = [](const char* what) { return Error(ErrorKind::kConfigError, what); };
  if (input_resolution < 1) throw bad("oracle.input_resolution must be >= 1");
  if (!(0 < p0 && p0 < p1)) throw bad("oracle requires 0 < p0 < p1");
  if (!(0 < p_min && p_min < p_max && p_max < 1)) {
    throw bad("oracle requires 0 < p_min < p_max < 1");
  }
  if (!(0 < answer_threshold && answer_threshold < 1)) {
    throw bad("oracle requires 0 < answer_threshold < 1");
  }
}

std::vector<std::string> SceneSpec::default_vocabulary() {
  return {"exit",      "red",        "cafe",     "stop",     "route 66",
          "pharmacy",  "42",         "open",     "bakery",   "main st",
          "taxi",      "hotel",      "no entry", "sale",     "1999",
          "library",   "bus 7",      "museum",   "parking",  "gate b",
          "coffee",    "platform 3", "toll",     "ice cream", "pizza",
          "airport",   "yield",      "bank",     "cinema",   "3.50",
          "one way",   "market",     "station",  "zoo",      "fresh fish",
          "harbor",    "bridge",     "lane 2",   "wifi",     "tea house"};
}

void SceneSpec::check() const {
  auto bad = [](const char* what) { return Error(ErrorKind::kConfigError, what); };
  if (width_min < 1 || width_min > width_max) throw bad("world.width range invalid");
  if (height_min < 1 || height_min > height_max) throw bad("world.height range invalid");
  if (regions_min < 1 || regions_min > regions_max) throw bad("world.regions range invalid");
  if (distractors < 0) throw bad("world.distractors must be >= 0");
  if (!(0 < side_min && side_min <= side_max && side_max <= 1)) {
    throw bad("world.side range must satisfy 0 < min <= max <= 1");
  }
  if (static_cast<int>(vocabulary.size()) < regions_max + distractors) {
    throw bad("world.vocabulary smaller than regions per scene");
  }
}

SceneBundle gen_scene(const SceneSpec& spec, std::uint64_t seed, int scene_id,
                      int first_query_id) {
  spec.check();
  Rng rng(seed);
  SceneBundle out;
  Scene& scene = out.scene;
  scene.scene_id = scene_id;
  scene.seed = seed;
  scene.width_px = static_cast<int>(rng.uniform_int(spec.width_min, spec.width_max));
  scene.height_px = static_cast<int>(rng.uniform_int(spec.height_min, spec.height_max));
  const int queried = static_cast<int>(rng.uniform_int(spec.regions_min, spec.regions_max));
  const int total = queried + spec.distractors;

  std::vector<std::string> words = spec.vocabulary;
  rng.shuffle(words);

  for (int id = 0; id < total; ++id) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementTries && !placed; ++attempt) {
      PixelRect r;
      r.w = side_px(rng.uniform(spec.side_min, spec.side_max), scene.width_px,
                    spec.side_min, spec.side_max);
      r.h = side_px(rng.uniform(spec.side_min, spec.side_max), scene.height_px,
                    spec.side_min, spec.side_max);
      r.w = std::min(r.w, scene.width_px);
      r.h = std::min(r.h, scene.height_px);
      r.x = static_cast<int>(rng.uniform_int(0, scene.width_px - r.w));
      r.y = static_cast<int>(rng.uniform_int(0, scene.height_px - r.h));
      const bool clear = std::none_of(
          scene.regions.begin(), scene.regions.end(),
          [&](const Region& other) { return overlap_area(r, other.rect) > 0; });
      if (clear) {
        scene.regions.push_back(Region{id, r, words[id]});
        placed = true;
      }
    }
    if (!placed) {
      throw Error(ErrorKind::kPlacementFailure,
                  "could not place region " + std::to_string(id) +
                      " without overlap in scene " + std::to_string(scene_id));
    }
  }

  for (int id = 0; id < queried; ++id) {
    Query q;
    q.query_id = first_query_id + id;
    q.scene_id = scene_id;
    q.target_region_id = id;
    q.question = "What is written on sign " + std::to_string(id) + "?";
    q.gts = AnswerSet(3, scene.regions[id].answer);
    out.queries.push_back(std::move(q));
  }
  return out;
}

const Scene& Dataset::scene(int scene_id) const {
  auto it = scene_index_.find(scene_id);
  if (it == scene_index_.end()) {
    throw Error(ErrorKind::kInvalidArgument, "unknown scene " + std::to_string(scene_id));
  }
  return scenes[it->second];
}

const Query& Dataset::query(int query_id) const {
  auto it = query_index_.find(query_id);
  if (it == query_index_.end()) {
    throw Error(ErrorKind::kInvalidArgument, "unknown query " + std::to_string(query_id));
  }
  return queries[it->second];
}

void Dataset::reindex() {
  scene_index_.clear();
  query_index_.clear();
  for (std::size_t i = 0; i < scenes.size(); ++i) scene_index_[scenes[i].scene_id] = i;
  for (std::size_t i = 0; i < queries.size(); ++i) query_index_[queries[i].query_id] = i;
}

Dataset gen_dataset(const SceneSpec& spec, std::uint64_t seed, int n_scenes) {
  Dataset data;
  int next_query = 0;
  for (int k = 0; k < n_scenes; ++k) {
    auto bundle = gen_scene(spec, derive_seed(seed, {static_cast<std::uint64_t>(k)}),
                            k, next_query);
    next_query += static_cast<int>(bundle.queries.size());
    data.scenes.push_back(std::move(bundle.scene));
    for (auto& q : bundle.queries) data.queries.push_back(std::move(q));
  }
  data.reindex();
  return data;
}

Split split_by_scene(const Dataset& data, double train_fraction) {
  std::vector<int> ids;
  for (const auto& s : data.scenes) ids.push_back(s.scene_id);
  std::sort(ids.begin(), ids.end());
  const auto n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(ids.size()) + 1e-9));
  const int cutoff = n_train < ids.size() ? ids[n_train] : std::numeric_limits<int>::max();
  Split split;
  for (const auto& q : data.queries) {
    (q.scene_id < cutoff ? split.train : split.heldout).push_back(q);
  }
  return split;
}

double rendered_min_side(const Scene& scene, const Crop& view, int region_id,
                         const OracleConfig& cfg) {
  const Region& region = scene.region(region_id);
  const PixelRect v = view_rect(scene, view);
  const PixelRect inter = intersect(region.rect, v);
  if (inter.w == 0 || inter.h == 0) return 0.0;
  const double scale = static_cast<double>(cfg.input_resolution) /
                       static_cast<double>(std::max(v.w, v.h));
  return static_cast<double>(std::min(inter.w, inter.h)) * scale;
}

double legibility(double rendered_px, const OracleConfig& cfg) {
  return std::clamp((rendered_px - cfg.p0) / (cfg.p1 - cfg.p0), 0.0, 1.0);
}

double readability(const Scene& scene, const Query& query, const Crop& crop,
                   const OracleConfig& cfg) {
  const Region& target = scene.region(query.target_region_id);
  double full = 0.0;
  if (cfg.use_full_image) {
    full = legibility(rendered_min_side(scene, std::nullopt, target.id, cfg), cfg);
  }
  double cropped = 0.0;
  if (crop) {
    const PixelRect v = view_rect(scene, crop);
    const double coverage = static_cast<double>(overlap_area(target.rect, v)) /
                            static_cast<double>(target.rect.area());
    if (coverage > 0.0) {
      cropped = coverage * legibility(rendered_min_side(scene, crop, target.id, cfg), cfg);
    }
  }
  return std::max(full, cropped);
}

double loglik_from_readability(double rho, const std::string& answer,
                               const OracleConfig& cfg) {
  const auto tokens = static_cast<double>(decode_utf8(normalize_answer(answer)).size());
  return tokens * std::log(cfg.p_min + (cfg.p_max - cfg.p_min) * rho);
}

double oracle_loglik(const Scene& scene, const Query& query, const Crop& crop,
                     const OracleConfig& cfg) {
  return loglik_from_readability(readability(scene, query, crop, cfg),
                                 most_common_answer(query.gts), cfg);
}

std::string oracle_answer(const Scene& scene, const Query& query,
                          const Crop& crop, const OracleConfig& cfg) {
  if (readability(scene, query, crop, cfg) >= cfg.answer_threshold) {
    return most_common_answer(query.gts);
  }
  if (!crop) return kUnreadable;
  const PixelRect v = view_rect(scene, crop);
  // Doubled coordinates keep centers integral.
  const long long cx = 2LL * v.x + v.w, cy = 2LL * v.y + v.h;
  const Region* nearest = nullptr;
  long long best = std::numeric_limits<long long>::max();
  for (const auto& r : scene.regions) {
    if (r.id == query.target_region_id) continue;
    const long long dx = 2LL * r.rect.x + r.rect.w - cx;
    const long long dy = 2LL * r.rect.y + r.rect.h - cy;
    const long long d2 = dx * dx + dy * dy;
    if (d2 < best) {
      best = d2;
      nearest = &r;
    }
  }
  return nearest ? nearest->answer : std::string(kUnreadable);
}

std::vector<double> features(const Scene& scene, const Query& query, int grid) {
  if (grid < 2) throw Error(ErrorKind::kInvalidArgument, "feature grid must be >= 2");
  const Region& target = scene.region(query.target_region_id);
  const std::size_t cells = static_cast<std::size_t>(grid) * grid;
  std::vector<double> f(2 * cells, 0.0);
  const double cw = static_cast<double>(scene.width_px) / grid;
  const double ch = static_cast<double>(scene.height_px) / grid;
  auto rasterize = [&](const PixelRect& r, double* channel) {
    const int c0 = std::max(0, static_cast<int>(std::floor(r.x / cw)));
    const int c1 = std::min(grid - 1, static_cast<int>(std::floor((r.x + r.w) / cw)));
    const int r0 = std::max(0, static_cast<int>(std::floor(r.y / ch)));
    const int r1 = std::min(grid - 1, static_cast<int>(std::floor((r.y + r.h) / ch)));
    for (int row = r0; row <= r1; ++row) {
      const double ylo = row * ch, yhi = (row + 1) * ch;
      const double iy = std::min<double>(yhi, r.y + r.h) - std::max<double>(ylo, r.y);
      if (iy <= 0) continue;
      for (int col = c0; col <= c1; ++col) {
        const double xlo = col * cw, xhi = (col + 1) * cw;
        const double ix = std::min<double>(xhi, r.x + r.w) - std::max<double>(xlo, r.x);
        if (ix <= 0) continue;
        double& cell = channel[static_cast<std::size_t>(row) * grid + col];
        cell = std::min(1.0, cell + ix * iy / (static_cast<double>(r.w) * r.h));
      }
    }
  };
  rasterize(target.rect, f.data());
  for (const auto& r : scene.regions) {
    if (r.id != target.id) rasterize(r.rect, f.data() + cells);
  }
  return f;
}

BoxPct target_box(const Scene& scene, const Query& query) {
  return enclosing_box(scene.region(query.target_region_id).rect, scene.width_px,
                       scene.height_px);
}

std::string scene_to_json(const Scene& scene) {
  json regions = json::array();
  for (const auto& r : scene.regions) {
    regions.push_back(json{{"id", r.id}, {"x", r.rect.x}, {"y", r.rect.y},
                           {"w", r.rect.w}, {"h", r.rect.h}, {"answer", r.answer}});
  }
  json j{{"scene_id", scene.scene_id},
         {"width_px", scene.width_px},
         {"height_px", scene.height_px},
         {"regions", regions}};
  return j.dump();
}

std::string query_to_json(const Query& q) {
  json j{{"query_id", q.query_id},
         {"scene_id", q.scene_id},
         {"target_region_id", q.target_region_id},
         {"question", q.question},
         {"answers", q.gts}};
  return j.dump();
}

void write_scenes(const std::string& path, const std::vector<Scene>& scenes) {
  auto out = open_out(path);
  for (const auto& s : scenes) out << scene_to_json(s) << '\n';
  if (!out) throw Error(ErrorKind::kFileError, "write failed: " + path);
}

void write_queries(const std::string& path, const std::vector<Query>& queries) {
  auto out = open_out(path);
  for (const auto& q : queries) out << query_to_json(q) << '\n';
  if (!out) throw Error(ErrorKind::kFileError, "write failed: " + path);
}

std::vector<Scene> read_scenes(const std::string& path) {
  std::vector<Scene> scenes;
  int row = 0;
  for (const auto& j : read_jsonl(path)) {
    const std::string where = path + " record " + std::to_string(++row);
    Scene s;
    s.scene_id = field<int>(j, "scene_id", where);
    s.width_px = field<int>(j, "width_px", where);
    s.height_px = field<int>(j, "height_px", where);
    for (const auto& r : field<json>(j, "regions", where)) {
      Region reg;
      reg.id = field<int>(r, "id", where);
      reg.rect = PixelRect{field<int>(r, "x", where), field<int>(r, "y", where),
                           field<int>(r, "w", where), field<int>(r, "h", where)};
      reg.answer = field<std::string>(r, "answer", where);
      if (reg.rect.x < 0 || reg.rect.y < 0 || reg.rect.w <= 0 || reg.rect.h <= 0 ||
          reg.rect.x + reg.rect.w > s.width_px || reg.rect.y + reg.rect.h > s.height_px) {
        throw Error(ErrorKind::kFileError, where + ": region outside canvas");
      }
      s.regions.push_back(std::move(reg));
    }
    if (s.regions.empty()) throw Error(ErrorKind::kFileError, where + ": no regions");
    scenes.push_back(std::move(s));
  }
  return scenes;
}

std::vector<Query> read_queries(const std::string& path) {
  std::vector<Query> queries;
  int row = 0;
  for (const auto& j : read_jsonl(path)) {
    const std::string where = path + " record " + std::to_string(++row);
    Query q;
    q.query_id = field<int>(j, "query_id", where);
    q.scene_id = field<int>(j, "scene_id", where);
    q.target_region_id = field<int>(j, "target_region_id", where);
    q.question = field<std::string>(j, "question", where);
    q.gts = field<AnswerSet>(j, "answers", where);
    if (q.gts.empty()) throw Error(ErrorKind::kFileError, where + ": empty answers");
    queries.push_back(std::move(q));
  }
  return queries;
}

Dataset load_dataset(const std::string& scenes_path, const std::string& queries_path) {
  Dataset data;
  data.scenes = read_scenes(scenes_path);
  data.queries = read_queries(queries_path);
  data.reindex();
  for (const auto& q : data.queries) data.scene(q.scene_id).region(q.target_region_id);
  return data;
}

}  // namespace cropforge
