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
#include <optional>

#include "cmtrack/losses/losses.hpp"
#include "cmtrack/model/model.hpp"
#include "cmtrack/synth/sequence.hpp"

namespace cmtrack::harness {

struct ObjectiveOptions {
  losses::LossWeights weights;
  bool supervise_invisible = true;
  /// Off only in the contrast configuration that lets gradients flow through
  /// memory across frames.
  bool detach_memory = true;
};

/// Per-term losses of one frame. `t_local` is the index within the clip and
/// drives priming and the anchor term; `frame` indexes the record.
losses::LossTerms<numerics::Var> frame_terms(const model::Model& model,
                                             const model::StepResult& step,
                                             const synth::SequenceRecord& rec, std::size_t frame,
                                             std::size_t t_local,
                                             const numerics::Tensor* previous_slot0,
                                             const ObjectiveOptions& opts);

/// Values handed from each frame to the next: the memory entering frame t and
/// the previous slot-0 embedding (empty at t = 0).
struct CarriedValues {
  std::vector<numerics::Tensor> memory;
  std::vector<numerics::Tensor> previous_slot0;
};

struct ClipPass {
  losses::LossTerms<numerics::Var> term_sums;  // summed over frames
  numerics::Var total;
  losses::LossValues values;  // term sums as numbers
  std::vector<numerics::Var> refined;  // per frame, for detach checks
  CarriedValues carried;
};

/// Forward pass over frames [start, start + length) on one tape, carrying the
/// memory from frame to frame. With `frozen`, carried values come from it
/// instead, which is the truncated objective as a plain function of the
/// parameters (what finite differences must see).
ClipPass run_clip(const model::Model& model, const model::BoundParams& p,
                  const synth::SequenceRecord& rec, std::size_t start, std::size_t length,
                  const ObjectiveOptions& opts, const CarriedValues* frozen = nullptr);

enum class BackwardMode { kPerClip, kPerFrame };

/// Adds d(clip loss)/d(params) into the parameters' grad buffers. kPerFrame
/// uses a fresh tape and backward per frame with memory passed as values; with
/// detached memory both modes give the same gradients.
losses::LossValues accumulate_clip_gradients(model::Model& model, const synth::SequenceRecord& rec,
                                             std::size_t start, std::size_t length,
                                             const ObjectiveOptions& opts, BackwardMode mode);

}  // namespace cmtrack::harness
