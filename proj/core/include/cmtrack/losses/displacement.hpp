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

#include "cmtrack/numerics/tensor.hpp"

namespace cmtrack::losses {

struct DisplacementErrors {
  double ade = 0.0;  // mean Euclidean error over the horizon
  double fde = 0.0;  // Euclidean error at the last step
};

/// ADE/FDE of an H x 2 forecast against H x 2 ground-truth centres.
///
/// This is the only implementation: the training loss and the evaluation
/// metric both call it, so the two can never drift apart.
DisplacementErrors displacement_errors(const numerics::Tensor& pred, const numerics::Tensor& gt);

}  // namespace cmtrack::losses
