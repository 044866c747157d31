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

// The crop policy: a one-hidden-layer tanh network mapping scene features to
// four categorical distributions over the coordinate alphabet 0..=100.
// Gradients are computed analytically; there is no autograd.

#ifndef CROPFORGE_POLICY_HPP_
#define CROPFORGE_POLICY_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cropforge/rng.hpp"

namespace cropforge {

inline constexpr int kHeads = 4;
inline constexpr int kBins = 101;
inline constexpr int kLogits = kHeads * kBins;

using Coords = std::array<int, kHeads>;
using Logits = std::array<double, kLogits>;
using HeadValues = std::array<double, kHeads>;

// Row-major weights. Also used as the gradient type.
struct PolicyParams {
  int feature_dim = 0;
  int hidden = 0;
  std::vector<double> w1;  // hidden x feature_dim
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // kLogits x hidden
  std::vector<double> b2;  // kLogits

  static PolicyParams zeros(int feature_dim, int hidden);
  PolicyParams zeros_like() const { return zeros(feature_dim, hidden); }

  bool same_shape(const PolicyParams& other) const;
  // this += alpha * other
  void add_scaled(const PolicyParams& other, double alpha);
  void scale(double alpha);
  double dot(const PolicyParams& other) const;
  double norm() const;
  std::size_t size() const;
  // Flat view over all entries in w1, b1, w2, b2 order.
  double& at(std::size_t flat);
  double at(std::size_t flat) const;
  bool all_finite() const;

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

struct BoxSample {
  Coords coords{};
  double logprob_old = 0.0;
  HeadValues per_head_logprob_old{};
};

// Hidden activations kept for the backward pass.
struct ForwardPass {
  std::vector<double> hidden;
  Logits logits{};
};

// Weights ~ Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
PolicyParams init_policy(std::uint64_t seed, int feature_dim, int hidden = 64);

ForwardPass forward_pass(const PolicyParams& params, std::span<const double> features);
Logits forward(const PolicyParams& params, std::span<const double> features);

// log softmax(logits_head / temperature) for one head.
std::array<double, kBins> head_log_probs(const Logits& logits, int head,
                                         double temperature);

BoxSample sample_from_logits(const Logits& logits, double temperature, Rng& rng);
BoxSample sample(const PolicyParams& params, std::span<const double> features,
                 double temperature, Rng& rng);

// Per-head argmax; the temperature -> 0 limit of sampling.
Coords greedy_coords(const Logits& logits);

struct LogProb {
  double total = 0.0;
  HeadValues per_head{};
};
LogProb logprob_from_logits(const Logits& logits, const Coords& coords,
                            double temperature);
LogProb logprob(const PolicyParams& params, std::span<const double> features,
                const Coords& coords, double temperature);

// Exact KL(pi || pi_ref) summed over heads at the given temperature.
double kl_from_logits(const Logits& logits, const Logits& ref_logits,
                      double temperature);
double kl(const PolicyParams& params, const PolicyParams& ref_params,
          std::span<const double> features, double temperature);

// d KL / d logits of the first argument.
Logits kl_grad_logits(const Logits& logits, const Logits& ref_logits,
                      double temperature);

// d log pi(coords) / d logits at the given temperature.
Logits logprob_grad_logits(const Logits& logits, const Coords& coords,
                           double temperature);

// grad += scale * d(loss)/d(params) given d(loss)/d(logits).
void backward_into(const PolicyParams& params, std::span<const double> features,
                   const ForwardPass& pass, const Logits& logit_grads,
                   double scale, PolicyParams& grad);
PolicyParams backward(const PolicyParams& params, std::span<const double> features,
                      const Logits& logit_grads);

struct TrainerState {
  std::string stage;
  int steps = 0;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  PolicyParams params;
  std::optional<TrainerState> trainer_state;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cropforge

#endif  // CROPFORGE_POLICY_HPP_
