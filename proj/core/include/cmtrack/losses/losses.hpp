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

#include <array>
#include <cstddef>
#include <string_view>

#include "cmtrack/geometry/box.hpp"
#include "cmtrack/numerics/tape.hpp"

namespace cmtrack::losses {

enum class Term : std::size_t { kCE, kL1, kGIoU, kAnchor, kADE, kFDE, kCos };
inline constexpr std::size_t kTermCount = 7;
inline constexpr std::array<std::string_view, kTermCount> kTermNames = {
    "ce", "l1", "giou", "anchor", "ade", "fde", "cos"};

/// One value per objective term, indexed by Term.
template <typename T>
struct LossTerms {
  std::array<T, kTermCount> values{};

  T& operator[](Term t) { return values[static_cast<std::size_t>(t)]; }
  const T& operator[](Term t) const { return values[static_cast<std::size_t>(t)]; }
};

using LossValues = LossTerms<double>;

/// Term weights. Defaults are (CE, L1, GIoU, anchor, ADE, FDE) =
/// (1.0, 7.5, 2.0, 5.0, 1.0, 2.0); the cosine smoothness term is off unless
/// configured.
struct LossWeights {
  double ce = 1.0;
  double l1 = 7.5;
  double giou = 2.0;
  double anchor = 5.0;
  double ade = 1.0;
  double fde = 2.0;
  double cos = 0.0;

  double operator[](Term t) const;
  double& operator[](Term t);
  /// Throws ContractError unless every weight is finite and >= 0.
  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

/// Mean cross-entropy over queries: slot `target_slot` has class 0 (target)
/// when `target_present`, every other query class 1 (background).
numerics::Var classification_loss(numerics::Var logits, std::size_t target_slot = 0,
                                  bool target_present = true);

struct SpatialLoss {
  numerics::Var l1;    // sum |pred - gt| over (cx, cy, w, h)
  numerics::Var giou;  // 1 - GIoU
};
SpatialLoss spatial_loss(numerics::Var pred_box, const geometry::BoundingBox& gt);

/// 1 - cos(current, previous). `previous` is a value, never a gradient path.
/// A zero-norm embedding yields 0 and a logged warning.
numerics::Var cosine_smoothness_loss(numerics::Var current, const numerics::Tensor& previous);

struct TrajectoryLoss {
  numerics::Var ade;
  numerics::Var fde;
};
/// Differentiable ADE/FDE; forward values come from displacement_errors().
TrajectoryLoss trajectory_loss(numerics::Var pred_centers, const numerics::Tensor& gt_centers);

/// L1 between the slot-0 box and a constant gt copy while t < burn_in, else 0.
numerics::Var burn_in_anchor_loss(numerics::Var slot0_box, const geometry::BoundingBox& gt,
                                  std::size_t t, std::size_t burn_in);

/// Weighted sum. Throws TrainingAbort naming the first non-finite term.
double total_loss(const LossValues& terms, const LossWeights& weights);
numerics::Var total_loss(const LossTerms<numerics::Var>& terms, const LossWeights& weights);

LossValues values_of(const LossTerms<numerics::Var>& terms);

}  // namespace cmtrack::losses
