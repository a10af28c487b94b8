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

#include "cmtrack/losses/displacement.hpp"

#include <cmath>

#include "cmtrack/errors.hpp"

namespace cmtrack::losses {

DisplacementErrors displacement_errors(const numerics::Tensor& pred, const numerics::Tensor& gt) {
  if (pred.shape() != gt.shape() || pred.cols() != 2) {
    throw DimensionError("displacement_errors: horizon mismatch, pred " + pred.shape().to_string() +
                         " vs gt " + gt.shape().to_string());
  }
  const std::size_t horizon = pred.rows();
  double total = 0.0;
  double last = 0.0;
  for (std::size_t h = 0; h < horizon; ++h) {
    const double dx = pred(h, 0) - gt(h, 0);
    const double dy = pred(h, 1) - gt(h, 1);
    last = std::sqrt(dx * dx + dy * dy);
    total += last;
  }
  return {total / static_cast<double>(horizon), last};
}

}  // namespace cmtrack::losses
