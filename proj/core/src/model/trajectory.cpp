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

#include "cmtrack/model/trajectory.hpp"

#include "cmtrack/errors.hpp"

namespace cmtrack::model {

using numerics::Tensor;
using numerics::Var;

Tensor integrate_offsets(Point2 start, const Tensor& offsets) {
  if (offsets.cols() != 2) {
    throw DimensionError("integrate_offsets: offsets must be [Hx2], got " +
                         offsets.shape().to_string());
  }
  Tensor centers(offsets.shape());
  double x = start.x, y = start.y;
  for (std::size_t h = 0; h < offsets.rows(); ++h) {
    x += offsets(h, 0);
    y += offsets(h, 1);
    centers(h, 0) = x;
    centers(h, 1) = y;
  }
  return centers;
}

Var integrate_offsets(Point2 start, Var offsets) {
  Tensor centers = integrate_offsets(start, offsets.value());
  return offsets.tape().record(
      std::move(centers), {offsets},
      [offsets](numerics::Tape& t, const Tensor& g) {
        Tensor go(g.shape());
        double sx = 0.0, sy = 0.0;
        for (std::size_t h = g.rows(); h-- > 0;) {
          sx += g(h, 0);
          sy += g(h, 1);
          go(h, 0) = sx;
          go(h, 1) = sy;
        }
        t.accumulate(offsets, go);
      },
      "integrate_offsets");
}

Var integrate_offsets(Var start, Var offsets) {
  const Tensor& sv = start.value();
  if (sv.shape() != numerics::Shape{1, 2}) {
    throw DimensionError("integrate_offsets: start must be [1x2], got " + sv.shape().to_string());
  }
  Tensor centers = integrate_offsets(Point2{sv[0], sv[1]}, offsets.value());
  return offsets.tape().record(
      std::move(centers), {start, offsets},
      [start, offsets](numerics::Tape& t, const Tensor& g) {
        Tensor go(g.shape());
        double sx = 0.0, sy = 0.0;
        for (std::size_t h = g.rows(); h-- > 0;) {
          sx += g(h, 0);
          sy += g(h, 1);
          go(h, 0) = sx;
          go(h, 1) = sy;
        }
        t.accumulate(start, Tensor({1, 2}, {sx, sy}));
        t.accumulate(offsets, go);
      },
      "integrate_offsets");
}

}  // namespace cmtrack::model
