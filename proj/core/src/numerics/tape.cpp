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

#include "cmtrack/numerics/tape.hpp"

#include <string>

#include "cmtrack/errors.hpp"

#if !defined(NDEBUG) || defined(CMTRACK_FINITE_CHECKS)
#define CMTRACK_SCAN_FINITE 1
#endif

namespace cmtrack::numerics {

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> operands, BackwardFn backward,
                 const char* op) {
#ifdef CMTRACK_SCAN_FINITE
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite output from primitive '") + op + "'");
  }
#endif
  bool needs_grad = false;
  for (const Var& v : operands) {
    if (v.tape_ != this) throw ContractError(std::string(op) + ": operand from another tape");
    needs_grad = needs_grad || nodes_[v.index()].requires_grad;
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = needs_grad;
  node.op = op;
  if (needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.index()];
  if (n.grad.empty()) return Tensor(n.value.shape());
  return n.grad;
}

void Tape::accumulate(Var target, const Tensor& g) {
  Node& n = nodes_[target.index()];
  if (!n.requires_grad) return;
  if (g.shape() != n.value.shape()) {
    throw DimensionError(std::string("gradient shape ") + g.shape().to_string() +
                         " does not match node '" + n.op + "' " + n.value.shape().to_string());
  }
  if (n.grad.empty()) {
    n.grad = g;
    return;
  }
  double* dst = n.grad.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ContractError("backward: loss belongs to another tape");
  if (!value(loss).shape().is_scalar()) {
    throw ContractError("backward: loss must be scalar, got " + value(loss).shape().to_string());
  }
  if (backward_done_) throw ContractError("backward called twice without reset_grads()");
  backward_done_ = true;
  if (!nodes_[loss.index()].requires_grad) return;

  nodes_[loss.index()].grad = Tensor::scalar(1.0);
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    // The rule may allocate operand gradients but never appends nodes, so
    // references into nodes_ stay valid.
    n.backward(*this, n.grad);
  }
}

void Tape::reset_grads() {
  for (Node& n : nodes_) n.grad = Tensor();
  backward_done_ = false;
}

std::size_t Tape::tensor_bytes() const noexcept {
  std::size_t total = 0;
  for (const Node& n : nodes_) total += n.value.bytes() + n.grad.bytes();
  return total;
}

}  // namespace cmtrack::numerics
