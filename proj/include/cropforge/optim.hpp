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

// Update rules and schedules shared by both training stages.

#ifndef CROPFORGE_OPTIM_HPP_
#define CROPFORGE_OPTIM_HPP_

#include <string>

#include "cropforge/policy.hpp"

namespace cropforge {

enum class OptimizerKind { kSgd, kAdam };

std::string optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

// Cosine decay from base to exactly 0 at the final step.
double cosine_lr(double base, int step, int total_steps);

// Rescales grad to max_norm if larger; returns the pre-clip norm.
double clip_grad_norm(PolicyParams& grad, double max_norm);

// Plain SGD, or Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected).
// Weight decay is decoupled (p -= lr * decay * p) and skips biases. State
// lives only for one training stage.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, const PolicyParams& like, double weight_decay = 0.0);

  void step(PolicyParams& params, const PolicyParams& grad, double lr);

 private:
  OptimizerKind kind_;
  double weight_decay_;
  PolicyParams m_;
  PolicyParams v_;
  long long t_ = 0;
};

}  // namespace cropforge

#endif  // CROPFORGE_OPTIM_HPP_
