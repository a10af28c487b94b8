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

#include "cmtrack/geometry/box.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cmtrack/errors.hpp"

namespace cmtrack::geometry {
namespace {

double clamp_extent(double v) noexcept { return std::max(v, kMinExtent); }

struct Overlap {
  double inter = 0.0;
  double uni = 0.0;
  double hull = 0.0;
};

Overlap overlap(const BoundingBox& a, const BoundingBox& b) noexcept {
  const BoundingBox ca{a.cx, a.cy, clamp_extent(a.w), clamp_extent(a.h)};
  const BoundingBox cb{b.cx, b.cy, clamp_extent(b.w), clamp_extent(b.h)};
  const Corners p = to_corners(ca);
  const Corners q = to_corners(cb);
  const double iw = std::max(0.0, std::min(p.x2, q.x2) - std::max(p.x1, q.x1));
  const double ih = std::max(0.0, std::min(p.y2, q.y2) - std::max(p.y1, q.y1));
  const double hw = std::max(p.x2, q.x2) - std::min(p.x1, q.x1);
  const double hh = std::max(p.y2, q.y2) - std::min(p.y1, q.y1);
  Overlap o;
  o.inter = iw * ih;
  // Areas from the corner extents, so identical boxes give exactly 1.
  o.uni = (p.x2 - p.x1) * (p.y2 - p.y1) + (q.x2 - q.x1) * (q.y2 - q.y1) - o.inter;
  o.hull = hw * hh;
  return o;
}

}  // namespace

bool BoundingBox::valid() const noexcept {
  return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h) &&
         w > 0.0 && h > 0.0;
}

std::string BoundingBox::to_string() const {
  std::ostringstream os;
  os << "(" << cx << ", " << cy << ", " << w << ", " << h << ")";
  return os.str();
}

numerics::Tensor BoundingBox::to_tensor() const { return numerics::Tensor({1, 4}, {cx, cy, w, h}); }

BoundingBox BoundingBox::from_tensor(const numerics::Tensor& t, std::size_t row) {
  if (t.cols() != 4 || row >= t.rows()) {
    throw DimensionError("box tensor must have 4 columns, got " + t.shape().to_string());
  }
  return {t(row, 0), t(row, 1), t(row, 2), t(row, 3)};
}

Corners to_corners(const BoundingBox& b) noexcept {
  return {b.cx - 0.5 * b.w, b.cy - 0.5 * b.h, b.cx + 0.5 * b.w, b.cy + 0.5 * b.h};
}

BoundingBox from_corners(const Corners& c) noexcept {
  return {0.5 * (c.x1 + c.x2), 0.5 * (c.y1 + c.y2), c.x2 - c.x1, c.y2 - c.y1};
}

void require_valid(const BoundingBox& b, const char* what) {
  if (!b.valid()) throw std::invalid_argument(std::string(what) + ": invalid box " + b.to_string());
}

double area(const BoundingBox& b) noexcept { return b.w * b.h; }

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const Overlap o = overlap(a, b);
  return o.inter / o.uni;
}

double giou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const Overlap o = overlap(a, b);
  return o.inter / o.uni - (o.hull - o.uni) / o.hull;
}

double box_l1(const BoundingBox& a, const BoundingBox& b) noexcept {
  return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy) + std::abs(a.w - b.w) + std::abs(a.h - b.h);
}

double center_distance(const BoundingBox& a, const BoundingBox& b) noexcept {
  return std::hypot(a.cx - b.cx, a.cy - b.cy);
}

}  // namespace cmtrack::geometry
