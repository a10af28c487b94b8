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

#include "cmtrack/numerics/tape.hpp"

// Differentiable counterparts of the scalar box measures. Boxes are 1 x 4
// Vars holding (cx, cy, w, h); the arithmetic mirrors box.cpp step for step
// so forward values agree with the scalar path.
namespace cmtrack::geometry {

numerics::Var giou(numerics::Var pred, numerics::Var target);
numerics::Var box_l1(numerics::Var pred, numerics::Var target);

}  // namespace cmtrack::geometry
