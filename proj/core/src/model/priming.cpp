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

#include "cmtrack/model/priming.hpp"

#include <algorithm>
#include <numeric>

#include "cmtrack/errors.hpp"
#include "cmtrack/numerics/ops.hpp"

namespace cmtrack::model {

using geometry::BoundingBox;
using numerics::Tensor;

std::size_t best_iou_slot(std::span<const BoundingBox> boxes, const BoundingBox& gt) {
  if (boxes.empty()) throw ContractError("best_iou_slot: no candidate boxes");
  std::size_t best = 0;
  double best_iou = geometry::iou(boxes[0], gt);
  for (std::size_t i = 1; i < boxes.size(); ++i) {
    const double v = geometry::iou(boxes[i], gt);
    if (v > best_iou) {  // strict: ties keep the lower index
      best_iou = v;
      best = i;
    }
  }
  return best;
}

std::vector<std::size_t> slot_zero_transposition(std::size_t n, std::size_t slot) {
  if (slot >= n) throw ContractError("slot_zero_transposition: slot out of range");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[0], perm[slot]);
  return perm;
}

PrimeDecision decide_prime(std::span<const BoundingBox> decoded, const BoundingBox& gt,
                           std::size_t t, std::size_t burn_in) {
  if (t >= burn_in) return {};
  return {true, best_iou_slot(decoded, gt)};
}

Tensor gt_prime_swap(const Tensor& queries, std::span<const BoundingBox> decoded,
                     const BoundingBox& gt, std::size_t t, std::size_t burn_in) {
  if (decoded.size() != queries.rows()) {
    throw DimensionError("gt_prime_swap: " + std::to_string(decoded.size()) + " boxes for " +
                         queries.shape().to_string() + " queries");
  }
  const PrimeDecision d = decide_prime(decoded, gt, t, burn_in);
  Tensor out = queries;
  if (!d.applied || d.slot == 0) return out;
  const std::size_t d_cols = queries.cols();
  std::swap_ranges(out.data(), out.data() + d_cols, out.data() + d.slot * d_cols);
  return out;
}

numerics::Var gt_prime_swap(numerics::Var queries, const PrimeDecision& decision) {
  if (!decision.applied || decision.slot == 0) return queries;
  const auto perm = slot_zero_transposition(queries.value().rows(), decision.slot);
  return numerics::permute_rows(queries, perm);
}

}  // namespace cmtrack::model
