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

#include "cropforge/optim.hpp"

#include <cmath>
#include <numbers>

#include "cropforge/error.hpp"

namespace cropforge {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

}  // namespace

std::string optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw Error(ErrorKind::kConfigError, "unknown optimizer '" + name + "'");
}

double cosine_lr(double base, int step, int total_steps) {
  if (total_steps <= 1) return base;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps - 1);
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

double clip_grad_norm(PolicyParams& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad.scale(max_norm / norm);
  return norm;
}

Optimizer::Optimizer(OptimizerKind kind, const PolicyParams& like, double weight_decay)
    : kind_(kind), weight_decay_(weight_decay) {
  if (kind_ == OptimizerKind::kAdam) {
    m_ = like.zeros_like();
    v_ = like.zeros_like();
  }
}

void Optimizer::step(PolicyParams& params, const PolicyParams& grad, double lr) {
  if (!params.same_shape(grad)) {
    throw Error(ErrorKind::kShapeMismatch, "gradient shape differs from params");
  }
  if (weight_decay_ > 0.0) {
    const double keep = 1.0 - lr * weight_decay_;
    for (double& w : params.w1) w *= keep;
    for (double& w : params.w2) w *= keep;
  }
  if (kind_ == OptimizerKind::kSgd) {
    params.add_scaled(grad, -lr);
    return;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  const std::size_t n = params.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad.at(i);
    double& m = m_.at(i);
    double& v = v_.at(i);
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g * g;
    params.at(i) -= lr * (m / c1) / (std::sqrt(v / c2) + kEps);
  }
}

}  // namespace cropforge
