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

#include "cropforge/eval.hpp"

#include <sstream>

#include "cropforge/error.hpp"
#include "cropforge/parallel.hpp"
#include "cropforge/rng.hpp"
#include "json.hpp"

namespace cropforge {
namespace {

using nlohmann::json;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(); }

EvalRecord score(const Coords& coords, const Query& q, const Scene& scene,
                 const OracleConfig& oracle, const EvalConfig& cfg) {
  EvalRecord rec;
  rec.query_id = q.query_id;
  rec.coords = coords;
  const RewardBreakdown r =
      reward_breakdown(coords, q, scene, cfg.reward_mode, cfg.metric, oracle);
  rec.valid = r.valid;
  rec.reward = r.total;
  rec.readability = r.readability;
  const BoxPct box{coords[0], coords[1], coords[2], coords[3]};
  const Crop crop = rec.valid ? Crop(box) : std::nullopt;
  rec.answer = oracle_answer(scene, q, crop, oracle);
  rec.metric = answer_metric(cfg.metric, rec.answer, q.gts);
  if (rec.valid) rec.quality = box_quality(box, target_box(scene, q));
  return rec;
}

}  // namespace

EvalReport aggregate(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw Error(ErrorKind::kEmptyDataset, "no queries to evaluate");
  EvalReport r;
  r.n_queries = static_cast<int>(records.size());
  double iou_sum = 0.0, recall_sum = 0.0, full_sum = 0.0, size_sum = 0.0;
  for (const auto& rec : records) {
    r.mean_reward += rec.reward;
    r.mean_metric += rec.metric;
    r.mean_readability += rec.readability;
    if (rec.valid && rec.quality) {
      ++r.n_valid;
      iou_sum += rec.quality->iou;
      recall_sum += rec.quality->recall;
      full_sum += rec.quality->full_recall ? 1.0 : 0.0;
      size_sum += rec.quality->rel_size;
    }
  }
  const double n = r.n_queries;
  r.mean_reward /= n;
  r.mean_metric /= n;
  r.mean_readability /= n;
  r.frac_valid = r.n_valid / n;
  if (r.n_valid > 0) {
    const double v = r.n_valid;
    r.mean_iou = iou_sum / v;
    r.mean_recall = recall_sum / v;
    r.full_recall_rate = full_sum / v;
    r.mean_rel_size = size_sum / v;
  }
  return r;
}

EvalResult evaluate_boxes(const std::vector<Coords>& boxes,
                          const std::vector<Query>& queries, const Dataset& data,
                          const OracleConfig& oracle, const EvalConfig& cfg) {
  if (queries.empty()) throw Error(ErrorKind::kEmptyDataset, "no queries to evaluate");
  if (boxes.size() != queries.size()) {
    throw Error(ErrorKind::kShapeMismatch, "one box per query required");
  }
  EvalResult out;
  out.records.resize(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) {
    out.records[i] = score(boxes[i], queries[i], data.scene(queries[i].scene_id), oracle, cfg);
  });
  out.report = aggregate(out.records);
  return out;
}

EvalResult evaluate_policy(const PolicyParams& params, const std::vector<Query>& queries,
                           const Dataset& data, const OracleConfig& oracle,
                           const EvalConfig& cfg, int feature_grid) {
  if (queries.empty()) throw Error(ErrorKind::kEmptyDataset, "no queries to evaluate");
  std::vector<Coords> boxes(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) {
    const Query& q = queries[i];
    const Logits logits = forward(params, features(data.scene(q.scene_id), q, feature_grid));
    if (cfg.greedy) {
      boxes[i] = greedy_coords(logits);
    } else {
      Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(q.query_id)}));
      boxes[i] = sample_from_logits(logits, cfg.temperature, rng).coords;
    }
  });
  return evaluate_boxes(boxes, queries, data, oracle, cfg);
}

std::string report_to_json(const EvalReport& r) {
  json j{{"n_queries", r.n_queries},
         {"n_valid", r.n_valid},
         {"mean_reward", r.mean_reward},
         {"mean_metric", r.mean_metric},
         {"mean_readability", r.mean_readability},
         {"mean_iou", optional_json(r.mean_iou)},
         {"mean_recall", optional_json(r.mean_recall)},
         {"full_recall_rate", optional_json(r.full_recall_rate)},
         {"mean_rel_size", optional_json(r.mean_rel_size)},
         {"frac_valid", r.frac_valid}};
  return j.dump();
}

std::string report_to_csv(const EvalReport& r) {
  std::ostringstream os;
  os.precision(17);
  auto opt = [&](const std::optional<double>& v) {
    if (v) os << *v;
  };
  os << "n_queries,n_valid,mean_reward,mean_metric,mean_readability,mean_iou,"
        "mean_recall,full_recall_rate,mean_rel_size,frac_valid\n";
  os << r.n_queries << ',' << r.n_valid << ',' << r.mean_reward << ',' << r.mean_metric
     << ',' << r.mean_readability << ',';
  opt(r.mean_iou);
  os << ',';
  opt(r.mean_recall);
  os << ',';
  opt(r.full_recall_rate);
  os << ',';
  opt(r.mean_rel_size);
  os << ',' << r.frac_valid << '\n';
  return os.str();
}

std::string record_to_json(const EvalRecord& rec) {
  json j{{"query_id", rec.query_id},  {"coords", rec.coords},
         {"valid", rec.valid},        {"reward", rec.reward},
         {"answer", rec.answer},      {"metric", rec.metric},
         {"readability", rec.readability}};
  if (rec.quality) {
    j["quality"] = {{"iou", rec.quality->iou},
                    {"recall", rec.quality->recall},
                    {"full_recall", rec.quality->full_recall},
                    {"rel_size", rec.quality->rel_size}};
  } else {
    j["quality"] = nullptr;
  }
  return j.dump();
}

std::vector<SweepRow> expansion_sweep(const std::vector<Query>& queries,
                                      const Dataset& data, const OracleConfig& oracle,
                                      const std::vector<double>& factors,
                                      const EvalConfig& cfg) {
  if (queries.empty()) throw Error(ErrorKind::kEmptyDataset, "no queries to sweep");
  std::vector<SweepRow> rows;
  for (double factor : factors) {
    if (!(factor > 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "sweep factors must be positive");
    }
    std::vector<Coords> boxes(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const BoxPct b =
          expand_box(target_box(data.scene(queries[i].scene_id), queries[i]), factor);
      boxes[i] = Coords{b.x1, b.y1, b.x2, b.y2};
    }
    const EvalReport r = evaluate_boxes(boxes, queries, data, oracle, cfg).report;
    rows.push_back(SweepRow{factor, r.mean_metric, r.mean_reward});
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "factor,mean_metric,mean_reward\n";
  for (const auto& r : rows) {
    os << r.factor << ',' << r.mean_metric << ',' << r.mean_reward << '\n';
  }
  return os.str();
}

}  // namespace cropforge
