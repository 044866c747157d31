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

#include "cropforge/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cropforge/error.hpp"
#include "json.hpp"

namespace cropforge {
namespace {

using nlohmann::json;

void check_features(const PolicyParams& params, std::span<const double> features) {
  if (static_cast<int>(features.size()) != params.feature_dim) {
    throw Error(ErrorKind::kShapeMismatch,
                "feature length " + std::to_string(features.size()) +
                    " does not match policy input " +
                    std::to_string(params.feature_dim));
  }
}

void check_temperature(double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "temperature must be positive");
  }
}

std::vector<std::size_t> nonzero_indices(std::span<const double> f) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] != 0.0) idx.push_back(i);
  }
  return idx;
}

json matrix_to_json(const std::vector<double>& m, int rows, int cols) {
  json out = json::array();
  for (int r = 0; r < rows; ++r) {
    out.push_back(std::vector<double>(m.begin() + static_cast<std::ptrdiff_t>(r) * cols,
                                      m.begin() + static_cast<std::ptrdiff_t>(r + 1) * cols));
  }
  return out;
}

std::vector<double> matrix_from_json(const json& j, int rows, int cols, const char* name) {
  auto bad = [&](const std::string& why) {
    return Error(ErrorKind::kShapeMismatch, std::string("checkpoint ") + name + ": " + why);
  };
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw bad("expected " + std::to_string(rows) + " rows");
  }
  std::vector<double> m;
  m.reserve(static_cast<std::size_t>(rows) * cols);
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw bad("expected " + std::to_string(cols) + " columns");
    }
    for (const auto& v : row) {
      if (!v.is_number()) throw bad("non-numeric entry");
      m.push_back(v.get<double>());
    }
  }
  return m;
}

std::vector<double> vector_from_json(const json& j, int n, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw Error(ErrorKind::kShapeMismatch, std::string("checkpoint ") + name +
                                               ": expected length " + std::to_string(n));
  }
  std::vector<double> v;
  v.reserve(n);
  for (const auto& x : j) {
    if (!x.is_number()) {
      throw Error(ErrorKind::kShapeMismatch,
                  std::string("checkpoint ") + name + ": non-numeric entry");
    }
    v.push_back(x.get<double>());
  }
  return v;
}

}  // namespace

PolicyParams PolicyParams::zeros(int feature_dim, int hidden) {
  PolicyParams p;
  p.feature_dim = feature_dim;
  p.hidden = hidden;
  p.w1.assign(static_cast<std::size_t>(hidden) * feature_dim, 0.0);
  p.b1.assign(hidden, 0.0);
  p.w2.assign(static_cast<std::size_t>(kLogits) * hidden, 0.0);
  p.b2.assign(kLogits, 0.0);
  return p;
}

bool PolicyParams::same_shape(const PolicyParams& o) const {
  return feature_dim == o.feature_dim && hidden == o.hidden &&
         w1.size() == o.w1.size() && b1.size() == o.b1.size() &&
         w2.size() == o.w2.size() && b2.size() == o.b2.size();
}

void PolicyParams::add_scaled(const PolicyParams& o, double alpha) {
  if (!same_shape(o)) throw Error(ErrorKind::kShapeMismatch, "parameter shapes differ");
  for (std::size_t i = 0; i < w1.size(); ++i) w1[i] += alpha * o.w1[i];
  for (std::size_t i = 0; i < b1.size(); ++i) b1[i] += alpha * o.b1[i];
  for (std::size_t i = 0; i < w2.size(); ++i) w2[i] += alpha * o.w2[i];
  for (std::size_t i = 0; i < b2.size(); ++i) b2[i] += alpha * o.b2[i];
}

void PolicyParams::scale(double alpha) {
  for (auto* v : {&w1, &b1, &w2, &b2}) {
    for (double& x : *v) x *= alpha;
  }
}

double PolicyParams::dot(const PolicyParams& o) const {
  if (!same_shape(o)) throw Error(ErrorKind::kShapeMismatch, "parameter shapes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < w1.size(); ++i) s += w1[i] * o.w1[i];
  for (std::size_t i = 0; i < b1.size(); ++i) s += b1[i] * o.b1[i];
  for (std::size_t i = 0; i < w2.size(); ++i) s += w2[i] * o.w2[i];
  for (std::size_t i = 0; i < b2.size(); ++i) s += b2[i] * o.b2[i];
  return s;
}

double PolicyParams::norm() const { return std::sqrt(dot(*this)); }

std::size_t PolicyParams::size() const {
  return w1.size() + b1.size() + w2.size() + b2.size();
}

double& PolicyParams::at(std::size_t i) {
  if (i < w1.size()) return w1[i];
  i -= w1.size();
  if (i < b1.size()) return b1[i];
  i -= b1.size();
  if (i < w2.size()) return w2[i];
  i -= w2.size();
  if (i < b2.size()) return b2[i];
  throw Error(ErrorKind::kInvalidArgument, "parameter index out of range");
}

double PolicyParams::at(std::size_t i) const {
  return const_cast<PolicyParams*>(this)->at(i);
}

bool PolicyParams::all_finite() const {
  for (const auto* v : {&w1, &b1, &w2, &b2}) {
    for (double x : *v) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

PolicyParams init_policy(std::uint64_t seed, int feature_dim, int hidden) {
  if (feature_dim < 1 || hidden < 1) {
    throw Error(ErrorKind::kInvalidArgument, "policy dimensions must be >= 1");
  }
  PolicyParams p = PolicyParams::zeros(feature_dim, hidden);
  Rng rng(seed);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& w : p.w1) w = rng.uniform(-s1, s1);
  for (double& w : p.w2) w = rng.uniform(-s2, s2);
  return p;
}

ForwardPass forward_pass(const PolicyParams& params, std::span<const double> f) {
  check_features(params, f);
  const auto nz = nonzero_indices(f);
  ForwardPass out;
  out.hidden.resize(params.hidden);
  const std::size_t in = static_cast<std::size_t>(params.feature_dim);
  for (int j = 0; j < params.hidden; ++j) {
    const double* row = params.w1.data() + j * in;
    double a = params.b1[j];
    for (std::size_t i : nz) a += row[i] * f[i];
    out.hidden[j] = std::tanh(a);
  }
  const std::size_t h = static_cast<std::size_t>(params.hidden);
  for (int k = 0; k < kLogits; ++k) {
    const double* row = params.w2.data() + k * h;
    double z = params.b2[k];
    for (std::size_t j = 0; j < h; ++j) z += row[j] * out.hidden[j];
    out.logits[k] = z;
  }
  return out;
}

Logits forward(const PolicyParams& params, std::span<const double> features) {
  return forward_pass(params, features).logits;
}

std::array<double, kBins> head_log_probs(const Logits& logits, int head,
                                         double temperature) {
  check_temperature(temperature);
  std::array<double, kBins> lp;
  const double* z = logits.data() + head * kBins;
  double m = -INFINITY;
  for (int k = 0; k < kBins; ++k) {
    lp[k] = z[k] / temperature;
    m = std::max(m, lp[k]);
  }
  double sum = 0.0;
  for (int k = 0; k < kBins; ++k) sum += std::exp(lp[k] - m);
  const double lse = m + std::log(sum);
  for (double& v : lp) v -= lse;
  return lp;
}

BoxSample sample_from_logits(const Logits& logits, double temperature, Rng& rng) {
  BoxSample s;
  for (int h = 0; h < kHeads; ++h) {
    const auto lp = head_log_probs(logits, h, temperature);
    const double u = rng.uniform();
    double cum = 0.0;
    int pick = -1;
    for (int k = 0; k < kBins; ++k) {
      const double p = std::exp(lp[k]);
      if (p > 0.0) pick = k;
      cum += p;
      if (u < cum && p > 0.0) break;
    }
    s.coords[h] = pick;
    s.per_head_logprob_old[h] = lp[pick];
    s.logprob_old += lp[pick];
  }
  return s;
}

BoxSample sample(const PolicyParams& params, std::span<const double> features,
                 double temperature, Rng& rng) {
  return sample_from_logits(forward(params, features), temperature, rng);
}

Coords greedy_coords(const Logits& logits) {
  Coords c;
  for (int h = 0; h < kHeads; ++h) {
    const double* z = logits.data() + h * kBins;
    c[h] = static_cast<int>(std::max_element(z, z + kBins) - z);
  }
  return c;
}

LogProb logprob_from_logits(const Logits& logits, const Coords& coords,
                            double temperature) {
  LogProb out;
  for (int h = 0; h < kHeads; ++h) {
    if (coords[h] < 0 || coords[h] >= kBins) {
      throw Error(ErrorKind::kCoordOutOfRange,
                  "coordinate " + std::to_string(coords[h]) + " outside 0..100");
    }
    const auto lp = head_log_probs(logits, h, temperature);
    out.per_head[h] = lp[coords[h]];
    out.total += lp[coords[h]];
  }
  return out;
}

LogProb logprob(const PolicyParams& params, std::span<const double> features,
                const Coords& coords, double temperature) {
  return logprob_from_logits(forward(params, features), coords, temperature);
}

double kl_from_logits(const Logits& logits, const Logits& ref_logits,
                      double temperature) {
  double total = 0.0;
  for (int h = 0; h < kHeads; ++h) {
    const auto lp = head_log_probs(logits, h, temperature);
    const auto lq = head_log_probs(ref_logits, h, temperature);
    double head = 0.0;
    for (int k = 0; k < kBins; ++k) {
      const double p = std::exp(lp[k]);
      if (p > 0.0) head += p * (lp[k] - lq[k]);
    }
    total += std::max(0.0, head);
  }
  return total;
}

double kl(const PolicyParams& params, const PolicyParams& ref_params,
          std::span<const double> features, double temperature) {
  if (!params.same_shape(ref_params)) {
    throw Error(ErrorKind::kShapeMismatch, "policy and reference shapes differ");
  }
  return kl_from_logits(forward(params, features), forward(ref_params, features),
                        temperature);
}

Logits kl_grad_logits(const Logits& logits, const Logits& ref_logits,
                      double temperature) {
  Logits g{};
  for (int h = 0; h < kHeads; ++h) {
    const auto lp = head_log_probs(logits, h, temperature);
    const auto lq = head_log_probs(ref_logits, h, temperature);
    std::array<double, kBins> p;
    double head = 0.0;
    for (int k = 0; k < kBins; ++k) {
      p[k] = std::exp(lp[k]);
      if (p[k] > 0.0) head += p[k] * (lp[k] - lq[k]);
    }
    for (int k = 0; k < kBins; ++k) {
      g[h * kBins + k] =
          p[k] > 0.0 ? p[k] * ((lp[k] - lq[k]) - head) / temperature : 0.0;
    }
  }
  return g;
}

Logits logprob_grad_logits(const Logits& logits, const Coords& coords,
                           double temperature) {
  Logits g{};
  for (int h = 0; h < kHeads; ++h) {
    const auto lp = head_log_probs(logits, h, temperature);
    for (int k = 0; k < kBins; ++k) {
      g[h * kBins + k] = ((k == coords[h] ? 1.0 : 0.0) - std::exp(lp[k])) / temperature;
    }
  }
  return g;
}

void backward_into(const PolicyParams& params, std::span<const double> f,
                   const ForwardPass& pass, const Logits& g, double scale,
                   PolicyParams& grad) {
  check_features(params, f);
  if (!params.same_shape(grad)) {
    throw Error(ErrorKind::kShapeMismatch, "gradient shape differs from params");
  }
  const std::size_t h = static_cast<std::size_t>(params.hidden);
  std::vector<double> dh(h, 0.0);
  for (int k = 0; k < kLogits; ++k) {
    const double gk = g[k];
    if (gk == 0.0) continue;
    grad.b2[k] += scale * gk;
    const double* w_row = params.w2.data() + k * h;
    double* g_row = grad.w2.data() + k * h;
    for (std::size_t j = 0; j < h; ++j) {
      g_row[j] += scale * gk * pass.hidden[j];
      dh[j] += w_row[j] * gk;
    }
  }
  const auto nz = nonzero_indices(f);
  const std::size_t in = static_cast<std::size_t>(params.feature_dim);
  for (std::size_t j = 0; j < h; ++j) {
    const double dpre = dh[j] * (1.0 - pass.hidden[j] * pass.hidden[j]);
    if (dpre == 0.0) continue;
    grad.b1[j] += scale * dpre;
    double* g_row = grad.w1.data() + j * in;
    for (std::size_t i : nz) g_row[i] += scale * dpre * f[i];
  }
}

PolicyParams backward(const PolicyParams& params, std::span<const double> features,
                      const Logits& logit_grads) {
  PolicyParams grad = params.zeros_like();
  backward_into(params, features, forward_pass(params, features), logit_grads, 1.0,
                grad);
  return grad;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const PolicyParams& p = ckpt.params;
  json j;
  j["feature_dim"] = p.feature_dim;
  j["hidden"] = p.hidden;
  j["W1"] = matrix_to_json(p.w1, p.hidden, p.feature_dim);
  j["b1"] = p.b1;
  j["W2"] = matrix_to_json(p.w2, kLogits, p.hidden);
  j["b2"] = p.b2;
  if (ckpt.trainer_state) {
    j["trainer_state"] = json{{"stage", ckpt.trainer_state->stage},
                              {"steps", ckpt.trainer_state->steps},
                              {"seed", ckpt.trainer_state->seed}};
  }
  return j.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFileError, std::string("checkpoint is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("feature_dim") || !j.contains("hidden") ||
      !j.contains("W1") || !j.contains("b1") || !j.contains("W2") || !j.contains("b2")) {
    throw Error(ErrorKind::kShapeMismatch, "checkpoint missing required fields");
  }
  Checkpoint ckpt;
  PolicyParams& p = ckpt.params;
  p.feature_dim = j["feature_dim"].get<int>();
  p.hidden = j["hidden"].get<int>();
  if (p.feature_dim < 1 || p.hidden < 1) {
    throw Error(ErrorKind::kShapeMismatch, "checkpoint dimensions must be >= 1");
  }
  p.w1 = matrix_from_json(j["W1"], p.hidden, p.feature_dim, "W1");
  p.b1 = vector_from_json(j["b1"], p.hidden, "b1");
  p.w2 = matrix_from_json(j["W2"], kLogits, p.hidden, "W2");
  p.b2 = vector_from_json(j["b2"], kLogits, "b2");
  if (j.contains("trainer_state")) {
    const auto& t = j["trainer_state"];
    ckpt.trainer_state = TrainerState{t.value("stage", std::string()),
                                      t.value("steps", 0),
                                      t.value("seed", std::uint64_t{0})};
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kFileError, "cannot write " + path);
  out << checkpoint_to_json(ckpt) << '\n';
  if (!out) throw Error(ErrorKind::kFileError, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kFileError, "cannot read checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace cropforge
