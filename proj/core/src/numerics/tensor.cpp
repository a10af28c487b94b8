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

#include "cmtrack/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "cmtrack/errors.hpp"

namespace cmtrack::numerics {

std::string Shape::to_string() const {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {
  if (shape.rows == 0 || shape.cols == 0) {
    throw DimensionError("tensor extents must be positive, got " + shape.to_string());
  }
}

Tensor::Tensor(Shape shape, std::span<const double> values)
    : shape_(shape), data_(values.begin(), values.end()) {
  if (shape.rows == 0 || shape.cols == 0) {
    throw DimensionError("tensor extents must be positive, got " + shape.to_string());
  }
  if (values.size() != shape.size()) {
    throw DimensionError("shape " + shape.to_string() + " needs " + std::to_string(shape.size()) +
                         " values, got " + std::to_string(values.size()));
  }
}

Tensor::Tensor(Shape shape, std::initializer_list<double> values)
    : Tensor(shape, std::span<const double>(values.begin(), values.size())) {}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0) throw DimensionError("from_rows needs at least one row");
  const std::size_t cols = rows.begin()->size();
  Tensor t({rows.size(), cols});
  std::size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != cols) throw DimensionError("from_rows: ragged rows");
    std::copy(row.begin(), row.end(), t.data() + r * cols);
    ++r;
  }
  return t;
}

Tensor Tensor::row(std::span<const double> values) { return Tensor({1, values.size()}, values); }

double Tensor::item() const {
  if (!shape_.is_scalar()) throw DimensionError("item() on non-scalar " + shape_.to_string());
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape.size() != size()) {
    throw DimensionError("cannot reshape " + shape_.to_string() + " to " + shape.to_string());
  }
  Tensor out = *this;
  out.shape_ = shape;
  return out;
}

Tensor Tensor::row_copy(std::size_t r) const {
  if (r >= rows()) throw DimensionError("row index out of range");
  return Tensor({1, cols()}, values().subspan(r * cols(), cols()));
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool Tensor::bitwise_equal(const Tensor& other) const noexcept {
  return shape_ == other.shape_ &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0;
}

double max_abs(const Tensor& t) noexcept {
  double m = 0.0;
  for (double v : t.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("max_abs_diff: " + a.shape().to_string() + " vs " + b.shape().to_string());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace cmtrack::numerics
