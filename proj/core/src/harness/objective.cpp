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

#include "cmtrack/harness/objective.hpp"

#include "cmtrack/errors.hpp"
#include "cmtrack/model/trajectory.hpp"
#include "cmtrack/numerics/ops.hpp"

namespace cmtrack::harness {

using losses::LossTerms;
using losses::Term;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;
namespace ops = numerics;

namespace {

Var zero(Tape& tape) { return tape.constant(Tensor::scalar(0.0)); }

void check_range(const synth::SequenceRecord& rec, std::size_t start, std::size_t length) {
  if (length == 0 || start + length > rec.length()) {
    throw ContractError("clip [" + std::to_string(start) + ", " + std::to_string(start + length) +
                        ") outside sequence of " + std::to_string(rec.length()) + " frames");
  }
}

}  // namespace

LossTerms<Var> frame_terms(const model::Model& model, const model::StepResult& step,
                           const synth::SequenceRecord& rec, std::size_t frame,
                           std::size_t t_local, const Tensor* previous_slot0,
                           const ObjectiveOptions& opts) {
  Tape& tape = step.refined.tape();
  const model::ModelConfig& cfg = model.config();
  const synth::Frame& f = rec.frames[frame];
  const bool supervise_box = f.visible || opts.supervise_invisible;

  LossTerms<Var> terms;
  for (Var& v : terms.values) v = zero(tape);

  terms[Term::kCE] = losses::classification_loss(step.heads.logits, 0, f.visible);

  const Var slot0 = ops::slice_rows(step.heads.boxes, 0, 1);
  if (supervise_box) {
    const losses::SpatialLoss s = losses::spatial_loss(slot0, f.gt);
    terms[Term::kL1] = s.l1;
    terms[Term::kGIoU] = s.giou;
    terms[Term::kAnchor] = losses::burn_in_anchor_loss(slot0, f.gt, t_local, cfg.burn_in);
  }

  if (supervise_box && frame + cfg.horizon < rec.length()) {
    const Var start = ops::slice_cols(slot0, 0, 2);
    const Var centers = model::integrate_offsets(start, step.heads.offsets);
    const losses::TrajectoryLoss traj =
        losses::trajectory_loss(centers, synth::future_centers(rec, frame, cfg.horizon));
    terms[Term::kADE] = traj.ade;
    terms[Term::kFDE] = traj.fde;
  }

  if (opts.weights.cos > 0.0 && previous_slot0 != nullptr) {
    terms[Term::kCos] =
        losses::cosine_smoothness_loss(ops::slice_rows(step.refined, 0, 1), *previous_slot0);
  }
  return terms;
}

ClipPass run_clip(const model::Model& model, const model::BoundParams& p,
                  const synth::SequenceRecord& rec, std::size_t start, std::size_t length,
                  const ObjectiveOptions& opts, const CarriedValues* frozen) {
  check_range(rec, start, length);
  if (frozen != nullptr && (frozen->memory.size() < length || frozen->previous_slot0.size() < length)) {
    throw ContractError("run_clip: frozen values cover fewer frames than the clip");
  }
  Tape& tape = *p.tape;
  const model::ModelConfig& cfg = model.config();

  ClipPass out;
  for (Var& v : out.term_sums.values) v = zero(tape);
  Var memory = tape.constant(Tensor::zeros(cfg.num_queries, cfg.dim));
  Tensor previous_slot0;
  for (std::size_t t = 0; t < length; ++t) {
    const std::size_t frame = start + t;
    const synth::Frame& f = rec.frames[frame];
    if (frozen != nullptr) {
      memory = tape.constant(frozen->memory[t]);
      previous_slot0 = frozen->previous_slot0[t];
    }
    out.carried.memory.push_back(memory.value());
    out.carried.previous_slot0.push_back(previous_slot0);
    const model::StepResult step =
        model.step(p, f.features, &f.gt, t, memory, model::StepMode::kTrain);
    const LossTerms<Var> terms = frame_terms(model, step, rec, frame, t,
                                             t == 0 ? nullptr : &previous_slot0, opts);
    for (std::size_t i = 0; i < losses::kTermCount; ++i)
      out.term_sums.values[i] = ops::add(out.term_sums.values[i], terms.values[i]);
    previous_slot0 = step.refined.value().row_copy(0);
    memory = opts.detach_memory ? ops::detach(step.refined) : step.refined;
    out.refined.push_back(step.refined);
  }
  out.total = losses::total_loss(out.term_sums, opts.weights);
  out.values = losses::values_of(out.term_sums);
  return out;
}

losses::LossValues accumulate_clip_gradients(model::Model& model, const synth::SequenceRecord& rec,
                                             std::size_t start, std::size_t length,
                                             const ObjectiveOptions& opts, BackwardMode mode) {
  if (mode == BackwardMode::kPerClip) {
    Tape tape;
    const model::BoundParams p = model.bind(tape, true);
    const ClipPass pass = run_clip(model, p, rec, start, length, opts);
    tape.backward(pass.total);
    model.parameters().accumulate_grads(tape, p.leaves);
    return pass.values;
  }

  if (!opts.detach_memory) {
    throw ContractError("per-frame backward requires detached memory");
  }
  check_range(rec, start, length);
  const model::ModelConfig& cfg = model.config();
  losses::LossValues sums;
  Tensor memory = Tensor::zeros(cfg.num_queries, cfg.dim);
  Tensor previous_slot0;
  for (std::size_t t = 0; t < length; ++t) {
    const std::size_t frame = start + t;
    const synth::Frame& f = rec.frames[frame];
    Tape tape;
    const model::BoundParams p = model.bind(tape, true);
    const model::StepResult step =
        model.step(p, f.features, &f.gt, t, tape.constant(memory), model::StepMode::kTrain);
    const LossTerms<Var> terms = frame_terms(model, step, rec, frame, t,
                                             t == 0 ? nullptr : &previous_slot0, opts);
    const Var total = losses::total_loss(terms, opts.weights);
    tape.backward(total);
    model.parameters().accumulate_grads(tape, p.leaves);
    const losses::LossValues v = losses::values_of(terms);
    for (std::size_t i = 0; i < losses::kTermCount; ++i) sums.values[i] += v.values[i];
    previous_slot0 = step.refined.value().row_copy(0);
    memory = step.refined.value();
  }
  return sums;
}

}  // namespace cmtrack::harness
