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

#include "cmtrack/model/parameters.hpp"

#include <cmath>

#include "cmtrack/errors.hpp"

namespace cmtrack::model {

using numerics::Tensor;
using numerics::Var;

std::size_t ParameterSet::add(std::string name, Tensor init, ParamGroup group) {
  if (find(name) != nullptr) throw ContractError("duplicate parameter name '" + name + "'");
  Tensor grad(init.shape());
  params_.push_back({std::move(name), std::move(init), std::move(grad), group});
  return params_.size() - 1;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

Parameter* ParameterSet::find(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

std::vector<Var> ParameterSet::bind(numerics::Tape& tape, bool trainable) const {
  std::vector<Var> leaves;
  leaves.reserve(params_.size());
  for (const auto& p : params_) leaves.push_back(tape.leaf(p.value, trainable));
  return leaves;
}

void ParameterSet::accumulate_grads(const numerics::Tape& tape, std::span<const Var> leaves) {
  if (leaves.size() != params_.size()) {
    throw ContractError("accumulate_grads: " + std::to_string(leaves.size()) + " leaves for " +
                        std::to_string(params_.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!tape.has_grad(leaves[i])) continue;
    const Tensor g = tape.grad(leaves[i]);
    Tensor& dst = params_[i].grad;
    for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k];
  }
}

void ParameterSet::zero_grads() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::size_t ParameterSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

double ParameterSet::grad_norm() const noexcept {
  double sq = 0.0;
  for (const auto& p : params_)
    for (double g : p.grad.values()) sq += g * g;
  return std::sqrt(sq);
}

bool ParameterSet::bitwise_equal(const ParameterSet& other) const noexcept {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name) return false;
    if (!params_[i].value.bitwise_equal(other.params_[i].value)) return false;
  }
  return true;
}

}  // namespace cmtrack::model
