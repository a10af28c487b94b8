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

#include "cmtrack/harness/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cmtrack/errors.hpp"

namespace cmtrack::harness {

void AdamW::step(model::ParameterSet& params, double lr_heads, double lr_encoder) {
  if (m_.empty()) {
    for (const model::Parameter& p : params) {
      m_.emplace_back(p.value.shape());
      v_.emplace_back(p.value.shape());
    }
  }
  if (m_.size() != params.size()) throw ContractError("AdamW: parameter set changed size");
  for (const model::Parameter& p : params) {
    if (!p.grad.all_finite()) throw TrainingAbort("non-finite gradient in parameter '" + p.name + "'");
  }

  ++steps_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    model::Parameter& p = params[i];
    const double lr = p.group == model::ParamGroup::kEncoder ? lr_encoder : lr_heads;
    const double decay = 1.0 - lr * options_.weight_decay;
    numerics::Tensor& m = m_[i];
    numerics::Tensor& v = v_[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = b1 * m[k] + (1.0 - b1) * g;
      v[k] = b2 * v[k] + (1.0 - b2) * g * g;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p.value[k] = p.value[k] * decay - lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

double lr_schedule(std::size_t iter, std::size_t warmup, std::size_t total, double base_lr) {
  if (iter >= total) return 0.0;
  if (iter < warmup) return base_lr * static_cast<double>(iter) / static_cast<double>(warmup);
  const double progress =
      static_cast<double>(iter - warmup) / static_cast<double>(total - warmup);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double clip_gradients(model::ParameterSet& params, double max_norm) {
  const double norm = params.grad_norm();
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (model::Parameter& p : params)
      for (double& g : p.grad.values()) g *= s;
  }
  return norm;
}

}  // namespace cmtrack::harness
