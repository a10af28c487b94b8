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
#include <string>

#include "cmtrack/numerics/tensor.hpp"

namespace cmtrack::geometry {

/// Extents below this are raised to it before any overlap computation.
inline constexpr double kMinExtent = 1e-6;

/// Axis-aligned box in normalised image units: centre (cx, cy), size (w, h).
struct BoundingBox {
  double cx = 0.5;
  double cy = 0.5;
  double w = 0.0;
  double h = 0.0;

  bool valid() const noexcept;
  std::string to_string() const;
  bool operator==(const BoundingBox&) const = default;

  std::array<double, 4> as_array() const noexcept { return {cx, cy, w, h}; }
  /// 1 x 4 tensor (cx, cy, w, h).
  numerics::Tensor to_tensor() const;
  static BoundingBox from_tensor(const numerics::Tensor& t, std::size_t row = 0);
};

struct Corners {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
};

Corners to_corners(const BoundingBox& b) noexcept;
BoundingBox from_corners(const Corners& c) noexcept;

/// Throws std::invalid_argument unless w > 0 and h > 0 and all fields finite.
void require_valid(const BoundingBox& b, const char* what);

double area(const BoundingBox& b) noexcept;
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;
/// Generalised IoU in (-1, 1]: IoU minus the fraction of the enclosing hull
/// not covered by the union.
double giou(const BoundingBox& a, const BoundingBox& b) noexcept;
/// Sum of absolute differences over (cx, cy, w, h).
double box_l1(const BoundingBox& a, const BoundingBox& b) noexcept;
/// Euclidean distance between centres, in normalised units.
double center_distance(const BoundingBox& a, const BoundingBox& b) noexcept;

}  // namespace cmtrack::geometry
