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
#include <span>
#include <string>
#include <vector>

#include "cmtrack/numerics/tape.hpp"

namespace cmtrack::model {

/// Learning-rate group. The frame encoder stands in for a backbone and gets
/// its own rate.
enum class ParamGroup { kEncoder, kHeads };

struct Parameter {
  std::string name;
  numerics::Tensor value;
  numerics::Tensor grad;
  ParamGroup group = ParamGroup::kHeads;
};

/// Ordered, named parameter tensors. Order is insertion order and is part of
/// the checkpoint format.
class ParameterSet {
 public:
  std::size_t add(std::string name, numerics::Tensor init, ParamGroup group);

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  const Parameter* find(const std::string& name) const;
  Parameter* find(const std::string& name);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// Places every parameter on `tape` as a leaf, in order.
  std::vector<numerics::Var> bind(numerics::Tape& tape, bool trainable) const;
  /// Adds the leaf gradients reached by the last backward() into `grad`.
  void accumulate_grads(const numerics::Tape& tape, std::span<const numerics::Var> leaves);
  void zero_grads();

  std::size_t scalar_count() const noexcept;
  double grad_norm() const noexcept;
  /// Bit-exact comparison of names, shapes and values.
  bool bitwise_equal(const ParameterSet& other) const noexcept;

 private:
  std::vector<Parameter> params_;
};

}  // namespace cmtrack::model
