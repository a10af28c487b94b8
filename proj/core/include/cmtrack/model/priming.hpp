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
#include <vector>

#include "cmtrack/geometry/box.hpp"
#include "cmtrack/numerics/tape.hpp"

namespace cmtrack::model {

/// Index of the box with the highest IoU against `gt`. Ties go to the lowest
/// index.
std::size_t best_iou_slot(std::span<const geometry::BoundingBox> boxes,
                          const geometry::BoundingBox& gt);

/// Row permutation of length n exchanging rows 0 and `slot`.
std::vector<std::size_t> slot_zero_transposition(std::size_t n, std::size_t slot);

struct PrimeDecision {
  bool applied = false;
  std::size_t slot = 0;  // query moved into slot 0 (0 when not applied)
};

/// Ground-truth priming gate and winner selection. Active only for t < K.
PrimeDecision decide_prime(std::span<const geometry::BoundingBox> decoded,
                           const geometry::BoundingBox& gt, std::size_t t, std::size_t burn_in);

/// Transposes the winning query into slot 0 (rows of an N_q x D tensor).
/// The displaced slot-0 query takes the winner's old row, so the result is a
/// permutation of the input rows.
numerics::Tensor gt_prime_swap(const numerics::Tensor& queries,
                               std::span<const geometry::BoundingBox> decoded,
                               const geometry::BoundingBox& gt, std::size_t t,
                               std::size_t burn_in);

/// Same swap on the tape; gradients follow the permutation.
numerics::Var gt_prime_swap(numerics::Var queries, const PrimeDecision& decision);

}  // namespace cmtrack::model
