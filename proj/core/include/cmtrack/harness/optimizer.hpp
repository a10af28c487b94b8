// Copyright 2026 The cmtrack Authors
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

#pragma once

#include <cstddef>
#include <vector>

#include "cmtrack/model/parameters.hpp"

namespace cmtrack::harness {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-4;
};

/// Adam with decoupled weight decay: p <- p * (1 - lr * wd), then the
/// bias-corrected moment step.
class AdamW {
 public:
  explicit AdamW(AdamWOptions options) : options_(options) {}

  /// Applies one update using each parameter's `grad`. `lr_encoder` is used
  /// for ParamGroup::kEncoder, `lr_heads` for the rest. Throws TrainingAbort
  /// naming the first parameter with a non-finite gradient.
  void step(model::ParameterSet& params, double lr_heads, double lr_encoder);
  void step(model::ParameterSet& params, double lr) { step(params, lr, lr); }

  std::size_t steps() const noexcept { return steps_; }
  const AdamWOptions& options() const noexcept { return options_; }

 private:
  AdamWOptions options_;
  std::size_t steps_ = 0;
  std::vector<numerics::Tensor> m_;
  std::vector<numerics::Tensor> v_;
};

/// Linear warm-up from 0 to base_lr over `warmup` iterations, then cosine
/// decay to 0 at `total`.
double lr_schedule(std::size_t iter, std::size_t warmup, std::size_t total, double base_lr);

/// Scales every gradient by max_norm / norm when the global L2 norm exceeds
/// max_norm. Returns the norm before clipping.
double clip_gradients(model::ParameterSet& params, double max_norm);

}  // namespace cmtrack::harness
