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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "cmtrack/numerics/memory_probe.hpp"

namespace cmtrack::numerics {

/// Extents of a row-major matrix. Vectors are 1 x n, scalars 1 x 1.
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  constexpr std::size_t size() const noexcept { return rows * cols; }
  constexpr bool is_scalar() const noexcept { return rows == 1 && cols == 1; }
  constexpr bool operator==(const Shape&) const = default;
  std::string to_string() const;
};

using Buffer = std::vector<double, CountingAllocator<double>>;

/// Dense row-major float64 matrix with value semantics.
///
/// Differentiation state (requires_grad, grad) lives on the Tape node that
/// owns a tensor, not on the tensor itself.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::span<const double> values);
  Tensor(Shape shape, std::initializer_list<double> values);

  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }
  static Tensor ones(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}, 1.0); }
  static Tensor scalar(double v) { return Tensor({1, 1}, v); }
  static Tensor identity(std::size_t n);
  /// Builds a matrix from nested rows; all rows must have equal length.
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor row(std::span<const double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rows() const noexcept { return shape_.rows; }
  std::size_t cols() const noexcept { return shape_.cols; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t bytes() const noexcept { return data_.size() * sizeof(double); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * shape_.cols + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * shape_.cols + c];
  }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Scalar value of a 1x1 tensor.
  double item() const;

  void fill(double v);
  /// Same values, new extents with identical element count.
  Tensor reshaped(Shape shape) const;
  /// Copy of row `r` as a 1 x cols tensor.
  Tensor row_copy(std::size_t r) const;

  bool all_finite() const noexcept;
  /// Exact element-wise equality including shape.
  bool bitwise_equal(const Tensor& other) const noexcept;

 private:
  Shape shape_{};
  Buffer data_;
};

double max_abs(const Tensor& t) noexcept;
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace cmtrack::numerics
