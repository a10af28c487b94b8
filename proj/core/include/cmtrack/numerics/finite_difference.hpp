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

#include <functional>

#include "cmtrack/numerics/tensor.hpp"

namespace cmtrack::numerics {

using ScalarFunction = std::function<double(const Tensor&)>;

/// Central-difference gradient estimate of `f` at `x`. Never touches a tape,
/// so it stays independent of the reverse-mode rules it is used to check.
Tensor finite_difference_gradient(const ScalarFunction& f, const Tensor& x, double step = 1e-5);

/// max_i |a_i - b_i| / max(max_i |a_i|, max_i |b_i|, floor).
///
/// Normalising by the gradient's infinity norm keeps near-zero components
/// (where central differences are all roundoff) from dominating the check.
double relative_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-10);

}  // namespace cmtrack::numerics
