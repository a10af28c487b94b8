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

#include "cmtrack/losses/losses.hpp"

#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "cmtrack/errors.hpp"
#include "cmtrack/geometry/box_ops.hpp"
#include "cmtrack/losses/displacement.hpp"
#include "cmtrack/numerics/ops.hpp"

namespace cmtrack::losses {

using numerics::Tensor;
using numerics::Var;
namespace ops = numerics;

double LossWeights::operator[](Term t) const {
  switch (t) {
    case Term::kCE: return ce;
    case Term::kL1: return l1;
    case Term::kGIoU: return giou;
    case Term::kAnchor: return anchor;
    case Term::kADE: return ade;
    case Term::kFDE: return fde;
    case Term::kCos: return cos;
  }
  return 0.0;
}

double& LossWeights::operator[](Term t) {
  switch (t) {
    case Term::kCE: return ce;
    case Term::kL1: return l1;
    case Term::kGIoU: return giou;
    case Term::kAnchor: return anchor;
    case Term::kADE: return ade;
    case Term::kFDE: return fde;
    case Term::kCos: break;
  }
  return cos;
}

void LossWeights::validate() const {
  for (std::size_t i = 0; i < kTermCount; ++i) {
    const double w = (*this)[static_cast<Term>(i)];
    if (!std::isfinite(w) || w < 0.0) {
      throw ContractError("loss weight '" + std::string(kTermNames[i]) +
                          "' must be finite and >= 0, got " + std::to_string(w));
    }
  }
}

Var classification_loss(Var logits, std::size_t target_slot, bool target_present) {
  // Copied: recording below may move the tape's storage.
  const numerics::Shape shape = logits.value().shape();
  if (shape.cols != 2 || target_slot >= shape.rows) {
    throw DimensionError("classification_loss: logits " + shape.to_string() +
                         " with target slot " + std::to_string(target_slot));
  }
  // One-hot selector of each query's label; the loss is -mean(selected log p).
  Tensor select(shape);
  for (std::size_t q = 0; q < shape.rows; ++q) {
    const bool is_target = target_present && q == target_slot;
    select(q, is_target ? 0 : 1) = 1.0;
  }
  const Var logp = ops::log_softmax(logits, 1);
  const Var picked = ops::sum(ops::mul(logp, logits.tape().constant(std::move(select))));
  return ops::scale(picked, -1.0 / static_cast<double>(shape.rows));
}

SpatialLoss spatial_loss(Var pred_box, const geometry::BoundingBox& gt) {
  const Var target = pred_box.tape().constant(gt.to_tensor());
  return {geometry::box_l1(pred_box, target),
          ops::add_scalar(ops::scale(geometry::giou(pred_box, target), -1.0), 1.0)};
}

Var cosine_smoothness_loss(Var current, const Tensor& previous) {
  numerics::Tape& tape = current.tape();
  if (current.value().shape() != previous.shape()) {
    throw DimensionError("cosine_smoothness_loss: " + current.value().shape().to_string() +
                         " vs " + previous.shape().to_string());
  }
  double prev_sq = 0.0, cur_sq = 0.0;
  for (double v : previous.values()) prev_sq += v * v;
  for (double v : current.value().values()) cur_sq += v * v;
  if (prev_sq == 0.0 || cur_sq == 0.0) {
    spdlog::warn("cosine smoothness: zero-norm embedding, term set to 0");
    return tape.constant(Tensor::scalar(0.0));
  }
  const double prev_norm = std::sqrt(prev_sq);
  const Var dot = ops::sum(ops::mul(current, tape.constant(previous)));
  const Var norm = ops::sqrt(ops::sum(ops::mul(current, current)));
  return ops::add_scalar(ops::scale(ops::div(dot, norm), -1.0 / prev_norm), 1.0);
}

TrajectoryLoss trajectory_loss(Var pred_centers, const Tensor& gt_centers) {
  const Tensor& pv = pred_centers.value();
  const DisplacementErrors e = displacement_errors(pv, gt_centers);
  numerics::Tape& tape = pred_centers.tape();
  const std::size_t horizon = pv.rows();

  // Unit error directions; zero where the prediction is exact.
  Tensor dir(pv.shape());
  for (std::size_t h = 0; h < horizon; ++h) {
    const double dx = pv(h, 0) - gt_centers(h, 0);
    const double dy = pv(h, 1) - gt_centers(h, 1);
    const double d = std::sqrt(dx * dx + dy * dy);
    tape.note_kink(d);
    if (d > 0.0) {
      dir(h, 0) = dx / d;
      dir(h, 1) = dy / d;
    }
  }

  TrajectoryLoss out;
  out.ade = tape.record(
      Tensor::scalar(e.ade), {pred_centers},
      [pred_centers, dir, horizon](numerics::Tape& t, const Tensor& g) {
        Tensor gp(dir.shape());
        const double s = g[0] / static_cast<double>(horizon);
        for (std::size_t i = 0; i < dir.size(); ++i) gp[i] = s * dir[i];
        t.accumulate(pred_centers, gp);
      },
      "ade");
  out.fde = tape.record(
      Tensor::scalar(e.fde), {pred_centers},
      [pred_centers, dir, horizon](numerics::Tape& t, const Tensor& g) {
        Tensor gp(dir.shape());
        gp(horizon - 1, 0) = g[0] * dir(horizon - 1, 0);
        gp(horizon - 1, 1) = g[0] * dir(horizon - 1, 1);
        t.accumulate(pred_centers, gp);
      },
      "fde");
  return out;
}

Var burn_in_anchor_loss(Var slot0_box, const geometry::BoundingBox& gt, std::size_t t,
                        std::size_t burn_in) {
  numerics::Tape& tape = slot0_box.tape();
  if (t >= burn_in) return tape.constant(Tensor::scalar(0.0));
  return geometry::box_l1(slot0_box, tape.constant(gt.to_tensor()));
}

double total_loss(const LossValues& terms, const LossWeights& weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < kTermCount; ++i) {
    const double v = terms.values[i];
    if (!std::isfinite(v)) {
      throw TrainingAbort("non-finite loss term '" + std::string(kTermNames[i]) + "'");
    }
    total += weights[static_cast<Term>(i)] * v;
  }
  return total;
}

Var total_loss(const LossTerms<Var>& terms, const LossWeights& weights) {
  (void)total_loss(values_of(terms), weights);  // finiteness check
  Var acc;
  for (std::size_t i = 0; i < kTermCount; ++i) {
    const Var weighted = ops::scale(terms.values[i], weights[static_cast<Term>(i)]);
    acc = acc.valid() ? ops::add(acc, weighted) : weighted;
  }
  return acc;
}

LossValues values_of(const LossTerms<Var>& terms) {
  LossValues v;
  for (std::size_t i = 0; i < kTermCount; ++i) v.values[i] = terms.values[i].value().item();
  return v;
}

}  // namespace cmtrack::losses
