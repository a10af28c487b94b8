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

#include "cmtrack/geometry/box_ops.hpp"

#include "cmtrack/errors.hpp"
#include "cmtrack/geometry/box.hpp"
#include "cmtrack/numerics/ops.hpp"

namespace cmtrack::geometry {

using numerics::Tensor;
using numerics::Var;
namespace ops = numerics;

namespace {

struct BoxParts {
  Var x1, y1, x2, y2, w, h;
};

BoxParts split(Var box) {
  if (box.value().shape() != numerics::Shape{1, 4}) {
    throw DimensionError("box Var must be [1x4], got " + box.value().shape().to_string());
  }
  numerics::Tape& tape = box.tape();
  const Var floor = tape.constant(Tensor::scalar(kMinExtent));
  const Var cx = ops::slice_cols(box, 0, 1);
  const Var cy = ops::slice_cols(box, 1, 1);
  const Var w = ops::maximum(ops::slice_cols(box, 2, 1), floor);
  const Var h = ops::maximum(ops::slice_cols(box, 3, 1), floor);
  const Var hw = ops::scale(w, 0.5);
  const Var hh = ops::scale(h, 0.5);
  BoxParts b{ops::sub(cx, hw), ops::sub(cy, hh), ops::add(cx, hw), ops::add(cy, hh), {}, {}};
  b.w = ops::sub(b.x2, b.x1);
  b.h = ops::sub(b.y2, b.y1);
  return b;
}

}  // namespace

Var giou(Var pred, Var target) {
  const BoxParts p = split(pred);
  const BoxParts q = split(target);
  const Var iw = ops::relu(ops::sub(ops::minimum(p.x2, q.x2), ops::maximum(p.x1, q.x1)));
  const Var ih = ops::relu(ops::sub(ops::minimum(p.y2, q.y2), ops::maximum(p.y1, q.y1)));
  const Var hull_w = ops::sub(ops::maximum(p.x2, q.x2), ops::minimum(p.x1, q.x1));
  const Var hull_h = ops::sub(ops::maximum(p.y2, q.y2), ops::minimum(p.y1, q.y1));
  const Var inter = ops::mul(iw, ih);
  const Var uni = ops::sub(ops::add(ops::mul(p.w, p.h), ops::mul(q.w, q.h)), inter);
  const Var hull = ops::mul(hull_w, hull_h);
  return ops::sub(ops::div(inter, uni), ops::div(ops::sub(hull, uni), hull));
}

Var box_l1(Var pred, Var target) { return ops::sum(ops::abs(ops::sub(pred, target))); }

}  // namespace cmtrack::geometry
