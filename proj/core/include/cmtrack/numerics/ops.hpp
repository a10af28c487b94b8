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

#include "cmtrack/numerics/tape.hpp"

// Differentiable primitives. Every function records one node on the tape of
// its first operand; all operands must share that tape.
namespace cmtrack::numerics {

// Plain kernels, also used by the backward rules.
Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// a^T * b
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Softmax along `axis` (1: within each row, 0: within each column).
Tensor softmax(const Tensor& x, int axis = 1);

Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
/// Adds a 1 x cols row to every row of `a`.
Var add_row(Var a, Var row);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var minimum(Var a, Var b);
Var maximum(Var a, Var b);

Var relu(Var a);
Var sigmoid(Var a);
Var abs(Var a);
/// Subgradient 0 at x == 0; inputs must be >= 0.
Var sqrt(Var a);

Var softmax(Var x, int axis = 1);
Var log_softmax(Var x, int axis = 1);
/// Row-wise layer normalisation with affine gain/bias of shape 1 x cols.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

Var sum(Var a);
Var mean(Var a);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var reshape(Var a, Shape shape);
/// Output row i is input row perm[i].
Var permute_rows(Var a, std::span<const std::size_t> perm);

/// Stop-gradient: bit-exact copy of the values with no path back to `a`.
Var detach(Var a);

}  // namespace cmtrack::numerics
