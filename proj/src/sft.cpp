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

#include "cropforge/sft.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "cropforge/error.hpp"
#include "cropforge/parallel.hpp"
#include "cropforge/rng.hpp"
#include "cropforge/search.hpp"
#include "json.hpp"

namespace cropforge {
namespace {

using nlohmann::json;

std::vector<SeedExample> external_seeds(const Dataset& data,
                                        const std::vector<Query>& queries,
                                        const std::string& path) {
  std::set<int> wanted;
  for (const auto& q : queries) wanted.insert(q.query_id);
  std::vector<SeedExample> out;
  for (SeedExample ex : read_seeds(path)) {
    data.query(ex.query_id);
    if (!wanted.count(ex.query_id)) continue;
    if (!validate(ex.box)) {
      throw Error(ErrorKind::kMalformedBox, path + ": query " +
                                                std::to_string(ex.query_id) +
                                                " has invalid box " + format_box(ex.box));
    }
    ex.box = expand_box(ex.box, expansion_factor(rel_size(ex.box) * 100.0));
    ex.provenance = SeedMode::kExternal;
    out.push_back(ex);
  }
  return out;
}

}  // namespace

std::string seed_mode_name(SeedMode mode) {
  return mode == SeedMode::kExternal ? "external" : "search";
}

SeedMode parse_seed_mode(const std::string& name) {
  if (name == "external") return SeedMode::kExternal;
  if (name == "search") return SeedMode::kSearch;
  throw Error(ErrorKind::kConfigError, "unknown seed mode '" + name + "'");
}

std::vector<SeedExample> build_seed_dataset(const Dataset& data,
                                            const std::vector<Query>& queries,
                                            const SeedOptions& options,
                                            const OracleConfig& oracle,
                                            const NoiseFn& noise) {
  if (options.mode == SeedMode::kExternal) {
    return external_seeds(data, queries, options.external_path);
  }
  enumerate_grid_crops(options.grid_n);  // validates the grid size
  std::vector<SeedExample> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) {
    const Query& q = queries[i];
    const CropChoice best = best_crop_by_ll(data.scene(q.scene_id), q, options.grid_n, oracle);
    BoxNoise n;
    if (noise) {
      n = noise(q);
    } else {
      Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(q.query_id)}));
      n = sample_perturbation(options.grid_n, rng);
    }
    out[i] = SeedExample{q.query_id, perturb_box(best.box, n, options.grid_n),
                         SeedMode::kSearch};
  });
  return out;
}

void write_seeds(const std::string& path, const std::vector<SeedExample>& seeds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kFileError, "cannot write " + path);
  for (const auto& s : seeds) {
    json j{{"query_id", s.query_id},
           {"box", {s.box.x1, s.box.y1, s.box.x2, s.box.y2}},
           {"provenance", seed_mode_name(s.provenance)}};
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::kFileError, "write failed: " + path);
}

std::vector<SeedExample> read_seeds(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kFileError, "cannot read seed file " + path);
  std::vector<SeedExample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kFileError, where + ": " + e.what());
    }
    if (!j.contains("query_id") || !j["query_id"].is_number_integer()) {
      throw Error(ErrorKind::kFileError, where + ": missing integer query_id");
    }
    const json& box = j.contains("box") ? j["box"] : json();
    if (!box.is_array() || box.size() != 4) {
      throw Error(ErrorKind::kMalformedBox, where + ": box must have 4 coordinates");
    }
    std::array<int, 4> c{};
    for (int k = 0; k < 4; ++k) {
      if (!box[k].is_number_integer() || box[k].get<int>() < 0 || box[k].get<int>() > 100) {
        throw Error(ErrorKind::kMalformedBox, where + ": coordinates must be integers in 0..100");
      }
      c[k] = box[k].get<int>();
    }
    SeedExample ex;
    ex.query_id = j["query_id"].get<int>();
    ex.box = BoxPct{c[0], c[1], c[2], c[3]};
    ex.provenance = parse_seed_mode(j.value("provenance", std::string("external")));
    out.push_back(ex);
  }
  return out;
}

double sft_logit_loss(const Logits& logits, const Coords& target, Logits* grad) {
  double loss = 0.0;
  for (int h = 0; h < kHeads; ++h) {
    if (target[h] < 0 || target[h] >= kBins) {
      throw Error(ErrorKind::kCoordOutOfRange, "target coordinate outside 0..100");
    }
    const auto lp = head_log_probs(logits, h, 1.0);
    loss -= lp[target[h]] / kHeads;
    if (grad) {
      for (int k = 0; k < kBins; ++k) {
        (*grad)[h * kBins + k] =
            (std::exp(lp[k]) - (k == target[h] ? 1.0 : 0.0)) / kHeads;
      }
    }
  }
  return loss;
}

LossAndGrad sft_loss(const PolicyParams& params, std::span<const double> features,
                     const Coords& target) {
  const ForwardPass pass = forward_pass(params, features);
  Logits g{};
  LossAndGrad out{sft_logit_loss(pass.logits, target, &g), params.zeros_like()};
  backward_into(params, features, pass, g, 1.0, out.grads);
  return out;
}

void SftConfig::check() const {
  auto bad = [](const char* what) { return Error(ErrorKind::kConfigError, what); };
  if (!(lr > 0) || !(lr_scale > 0)) throw bad("sft.lr and sft.lr_scale must be positive");
  if (batch < 1) throw bad("sft.batch must be >= 1");
  if (epochs < 1) throw bad("sft.epochs must be >= 1");
  if (!(max_grad_norm > 0)) throw bad("sft.max_grad_norm must be positive");
  parse_optimizer(optimizer);
}

SftResult train_sft(const PolicyParams& init, const std::vector<TrainExample>& data,
                    const SftConfig& config) {
  config.check();
  if (data.empty()) throw Error(ErrorKind::kEmptyDataset, "no seed examples for SFT");
  SftResult result{init, {}};
  PolicyParams& params = result.params;
  const int n = static_cast<int>(data.size());
  const int per_epoch = (n + config.batch - 1) / config.batch;
  const int total = per_epoch * config.epochs;
  std::vector<int> order(n);
  Optimizer opt(parse_optimizer(config.optimizer), params, config.weight_decay);
  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(epoch)}));
    rng.shuffle(order);
    for (int b = 0; b < per_epoch; ++b, ++step) {
      const int lo = b * config.batch, hi = std::min(n, lo + config.batch);
      const int m = hi - lo;
      std::vector<LossAndGrad> parts(m);
      parallel_for(m, [&](std::size_t i) {
        const TrainExample& ex = data[order[lo + i]];
        parts[i] = sft_loss(params, ex.features, ex.target);
      });
      PolicyParams grad = params.zeros_like();
      double loss = 0.0;
      for (const auto& p : parts) {
        grad.add_scaled(p.grads, 1.0 / m);
        loss += p.loss / m;
      }
      const double norm = clip_grad_norm(grad, config.max_grad_norm);
      const double lr = cosine_lr(config.base_lr(), step, total);
      opt.step(params, grad, lr);
      result.log.push_back(SftLogRow{step, loss, lr, norm});
    }
  }
  return result;
}

std::string sft_log_csv(const std::vector<SftLogRow>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "step,loss,lr,grad_norm\n";
  for (const auto& r : log) {
    os << r.step << ',' << r.loss << ',' << r.lr << ',' << r.grad_norm << '\n';
  }
  return os.str();
}

}  // namespace cropforge
