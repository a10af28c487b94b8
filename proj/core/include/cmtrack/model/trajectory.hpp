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

#include "cmtrack/numerics/tape.hpp"

namespace cmtrack::model {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

/// H per-step offsets and the absolute centres they integrate to.
struct TrajectoryForecast {
  numerics::Tensor offsets;  // H x 2
  numerics::Tensor centers;  // H x 2
};

/// centers[0] = start + offsets[0]; centers[h] = centers[h-1] + offsets[h].
///
/// Accumulation is strictly sequential, so centers[h] is bit-for-bit the
/// float sum of its predecessor and offsets[h].
numerics::Tensor integrate_offsets(Point2 start, const numerics::Tensor& offsets);

/// Differentiable version. Forward values come from the kernel above; the
/// gradient w.r.t. offsets[i] is the suffix sum of upstream gradients.
/// `start` is a constant.
numerics::Var integrate_offsets(Point2 start, numerics::Var offsets);
/// Differentiable in the 1 x 2 start as well.
numerics::Var integrate_offsets(numerics::Var start, numerics::Var offsets);

}  // namespace cmtrack::model
