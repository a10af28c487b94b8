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

#include "cmtrack/numerics/finite_difference.hpp"

#include <algorithm>
#include <cmath>

namespace cmtrack::numerics {

Tensor finite_difference_gradient(const ScalarFunction& f, const Tensor& x, double step) {
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = f(probe);
    probe[i] = orig - step;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double relative_error(const Tensor& analytic, const Tensor& numeric, double floor) {
  const double scale = std::max({max_abs(analytic), max_abs(numeric), floor});
  return max_abs_diff(analytic, numeric) / scale;
}

}  // namespace cmtrack::numerics
