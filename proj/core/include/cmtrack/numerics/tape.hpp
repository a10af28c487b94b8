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
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "cmtrack/numerics/tensor.hpp"

namespace cmtrack::numerics {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape& tape() const noexcept { return *tape_; }
  std::size_t index() const noexcept { return index_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Local backward rule: receives the upstream gradient of the node's output
/// and accumulates into its operands through Tape::accumulate.
using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

/// Wengert list for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, which is a topological order, so
/// backward() is a single reverse sweep. A node whose operands do not require
/// gradients stores no backward rule; detach() nodes never do.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Appends a primitive's output. The backward rule is dropped when no
  /// operand requires gradients.
  Var record(Tensor value, std::span<const Var> operands, BackwardFn backward, const char* op);
  Var record(Tensor value, std::initializer_list<Var> operands, BackwardFn backward,
             const char* op) {
    return record(std::move(value), std::span<const Var>(operands.begin(), operands.size()),
                  std::move(backward), op);
  }

  const Tensor& value(Var v) const { return nodes_[v.index()].value; }
  bool requires_grad(Var v) const { return nodes_[v.index()].requires_grad; }
  /// Gradient reached during backward(); zeros when the node was never reached.
  Tensor grad(Var v) const;
  bool has_grad(Var v) const { return !nodes_[v.index()].grad.empty(); }

  /// Adds `g` into the gradient buffer of `target` if it requires gradients.
  void accumulate(Var target, const Tensor& g);

  /// Reverse sweep from a scalar loss. A second call without reset_grads()
  /// is a contract violation.
  void backward(Var loss);
  void reset_grads();
  bool backward_done() const noexcept { return backward_done_; }

  std::size_t size() const noexcept { return nodes_.size(); }
  /// Bytes held by node values and gradients.
  std::size_t tensor_bytes() const noexcept;

  /// Smallest distance of any recorded input to a non-differentiable point
  /// (ReLU/abs at 0, min/max ties, sqrt at 0). Finite-difference checks use
  /// it to reject configurations that straddle a kink.
  double kink_margin() const noexcept { return kink_margin_; }
  void note_kink(double distance) noexcept {
    if (distance < kink_margin_) kink_margin_ = distance;
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    const char* op = "leaf";
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;
  double kink_margin_ = std::numeric_limits<double>::infinity();
};

inline const Tensor& Var::value() const { return tape_->value(*this); }
inline bool Var::requires_grad() const { return tape_->requires_grad(*this); }

}  // namespace cmtrack::numerics
