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

#include "cmtrack/model/model.hpp"

#include <algorithm>
#include <cmath>

#include "cmtrack/errors.hpp"
#include "cmtrack/numerics/ops.hpp"
#include "cmtrack/numerics/random.hpp"

namespace cmtrack::model {

using geometry::BoundingBox;
using numerics::Shape;
using numerics::Tensor;
using numerics::Var;
namespace ops = numerics;

namespace {

// Parameter layout. Order is the checkpoint order.
enum Slot : std::size_t {
  kEncW1, kEncB1, kEncW2, kEncB2, kQueries,
  kLnQGain, kLnQBias, kLnMGain, kLnMBias,
  kWq, kBq, kWk, kBk, kWv, kBv, kWo, kBo,
  kLnFGain, kLnFBias, kFfnW1, kFfnB1, kFfnW2, kFfnB2,
  kClsW1, kClsB1, kClsW2, kClsB2,
  kBoxW1, kBoxB1, kBoxW2, kBoxB2,
  kTrajW1, kTrajB1, kTrajW2, kTrajB2,
  kSlotCount
};

constexpr const char* kNames[kSlotCount] = {
    "encoder.w1", "encoder.b1", "encoder.w2", "encoder.b2", "encoder.queries",
    "temporal.ln_q.gain", "temporal.ln_q.bias", "temporal.ln_m.gain", "temporal.ln_m.bias",
    "temporal.attn.wq", "temporal.attn.bq", "temporal.attn.wk", "temporal.attn.bk",
    "temporal.attn.wv", "temporal.attn.bv", "temporal.attn.wo", "temporal.attn.bo",
    "temporal.ln_f.gain", "temporal.ln_f.bias", "temporal.ffn.w1", "temporal.ffn.b1",
    "temporal.ffn.w2", "temporal.ffn.b2",
    "head.cls.w1", "head.cls.b1", "head.cls.w2", "head.cls.b2",
    "head.box.w1", "head.box.b1", "head.box.w2", "head.box.b2",
    "head.traj.w1", "head.traj.b1", "head.traj.w2", "head.traj.b2",
};

Shape slot_shape(const ModelConfig& c, std::size_t slot) {
  const std::size_t d = c.dim;
  switch (slot) {
    case kEncW1: return {c.feature_dim, c.encoder_hidden};
    case kEncB1: return {1, c.encoder_hidden};
    case kEncW2: return {c.encoder_hidden, d};
    case kEncB2: return {1, d};
    case kQueries: return {c.num_queries, d};
    case kWq: case kWk: case kWv: case kWo: return {d, d};
    case kFfnW1: return {d, c.ffn_hidden};
    case kFfnB1: return {1, c.ffn_hidden};
    case kFfnW2: return {c.ffn_hidden, d};
    case kClsW1: case kBoxW1: case kTrajW1: return {d, c.head_hidden};
    case kClsB1: case kBoxB1: case kTrajB1: return {1, c.head_hidden};
    case kClsW2: return {c.head_hidden, ModelConfig::kNumClasses};
    case kClsB2: return {1, ModelConfig::kNumClasses};
    case kBoxW2: return {c.head_hidden, 4};
    case kBoxB2: return {1, 4};
    case kTrajW2: return {c.head_hidden, 2 * c.horizon};
    case kTrajB2: return {1, 2 * c.horizon};
    default: return {1, d};  // biases and layer-norm affine rows
  }
}

ParamGroup slot_group(std::size_t slot) {
  return slot <= kQueries ? ParamGroup::kEncoder : ParamGroup::kHeads;
}

Tensor init_slot(const ModelConfig& c, std::size_t slot, numerics::Rng& rng) {
  const Shape s = slot_shape(c, slot);
  switch (slot) {
    case kLnQGain: case kLnMGain: case kLnFGain: return Tensor(s, 1.0);
    case kQueries: return rng.normal_tensor(s, 1.0);
    case kEncW1: case kEncW2: case kWq: case kWk: case kWv: case kWo:
    case kFfnW1: case kFfnW2: case kClsW1: case kClsW2: case kBoxW1: case kBoxW2:
    case kTrajW1: case kTrajW2: {
      double stddev = std::sqrt(2.0 / static_cast<double>(s.rows + s.cols));
      // Offsets are per-frame displacements of order 1e-2; start small.
      if (slot == kTrajW2) stddev *= 0.1;
      return rng.normal_tensor(s, stddev);
    }
    default: return Tensor(s);
  }
}

// Linear layer with bias on a row block: x W + b.
Var affine(Var x, Var w, Var b) { return ops::add_row(ops::matmul(x, w), b); }

Var two_layer(Var x, Var w1, Var b1, Var w2, Var b2) {
  return affine(ops::relu(affine(x, w1, b1)), w2, b2);
}

}  // namespace

void ModelConfig::validate() const {
  if (num_queries < 1) throw ContractError("model: num_queries must be >= 1");
  if (dim < 1 || heads < 1 || dim % heads != 0) {
    throw ContractError("model: dim (" + std::to_string(dim) + ") must be divisible by heads (" +
                        std::to_string(heads) + ")");
  }
  if (horizon < 1) throw ContractError("model: horizon must be >= 1");
  if (burn_in < 1) throw ContractError("model: burn_in must be >= 1");
  if (feature_dim < 1 || encoder_hidden < 1 || ffn_hidden < 1 || head_hidden < 1) {
    throw ContractError("model: layer widths must be positive");
  }
}

BoundingBox StepResult::slot0_box() const {
  return BoundingBox::from_tensor(heads.boxes.value(), 0);
}

TemporalMemory::TemporalMemory(std::size_t num_queries, std::size_t dim)
    : state_({num_queries, dim}) {}

void TemporalMemory::update(const Tensor& refined) {
  if (refined.shape() != state_.shape()) {
    throw DimensionError("memory update: expected " + state_.shape().to_string() + ", got " +
                         refined.shape().to_string());
  }
  std::copy(refined.data(), refined.data() + refined.size(), state_.data());
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  numerics::Rng rng(seed);
  for (std::size_t s = 0; s < kSlotCount; ++s) {
    params_.add(kNames[s], init_slot(config_, s, rng), slot_group(s));
  }
}

Model::Model(ModelConfig config, ParameterSet params) : config_(config) {
  config_.validate();
  if (params.size() != kSlotCount) {
    throw ContractError("model: expected " + std::to_string(kSlotCount) + " parameters, got " +
                        std::to_string(params.size()));
  }
  for (std::size_t s = 0; s < kSlotCount; ++s) {
    if (params[s].name != kNames[s]) {
      throw ContractError("model: parameter " + std::to_string(s) + " is '" + params[s].name +
                          "', expected '" + kNames[s] + "'");
    }
    if (params[s].value.shape() != slot_shape(config_, s)) {
      throw DimensionError("model: parameter '" + params[s].name + "' has shape " +
                           params[s].value.shape().to_string() + ", expected " +
                           slot_shape(config_, s).to_string());
    }
    params[s].group = slot_group(s);
  }
  params_ = std::move(params);
}

std::vector<std::string> Model::parameter_names() {
  return std::vector<std::string>(std::begin(kNames), std::end(kNames));
}

BoundParams Model::bind(numerics::Tape& tape, bool trainable) const {
  return {&tape, params_.bind(tape, trainable)};
}

Var Model::encode_frame(const BoundParams& p, Var features) const {
  if (features.value().shape() != Shape{1, config_.feature_dim}) {
    throw DimensionError("encode_frame: features must be [1x" +
                         std::to_string(config_.feature_dim) + "], got " +
                         features.value().shape().to_string());
  }
  const Var hidden = ops::relu(ops::add(ops::matmul(features, p[kEncW1]), p[kEncB1]));
  const Var content = ops::add(ops::matmul(hidden, p[kEncW2]), p[kEncB2]);
  return ops::add_row(p[kQueries], content);
}

Var Model::decode_boxes(const BoundParams& p, Var queries) const {
  return ops::sigmoid(two_layer(queries, p[kBoxW1], p[kBoxB1], p[kBoxW2], p[kBoxB2]));
}

QuerySet Model::encode_queries(const BoundParams& p, Var features) const {
  QuerySet q;
  q.embeddings = encode_frame(p, features);
  const Tensor boxes = decode_boxes(p, q.embeddings).value();
  q.boxes.reserve(boxes.rows());
  for (std::size_t i = 0; i < boxes.rows(); ++i) q.boxes.push_back(BoundingBox::from_tensor(boxes, i));
  return q;
}

Var Model::temporal_refine(const BoundParams& p, Var queries, Var memory) const {
  const Shape expected{config_.num_queries, config_.dim};
  if (queries.value().shape() != expected || memory.value().shape() != expected) {
    throw DimensionError("temporal_refine: queries " + queries.value().shape().to_string() +
                         " and memory " + memory.value().shape().to_string() + " must both be " +
                         expected.to_string());
  }
  const Var xq = ops::layer_norm(queries, p[kLnQGain], p[kLnQBias]);
  const Var xm = ops::layer_norm(memory, p[kLnMGain], p[kLnMBias]);
  const Var q = affine(xq, p[kWq], p[kBq]);
  const Var k = affine(xm, p[kWk], p[kBk]);
  const Var v = affine(xm, p[kWv], p[kBv]);

  const std::size_t head_dim = config_.dim / config_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Var> head_out;
  head_out.reserve(config_.heads);
  for (std::size_t h = 0; h < config_.heads; ++h) {
    const std::size_t off = h * head_dim;
    const Var qh = ops::slice_cols(q, off, head_dim);
    const Var kh = ops::slice_cols(k, off, head_dim);
    const Var vh = ops::slice_cols(v, off, head_dim);
    const Var scores = ops::scale(ops::matmul(qh, ops::transpose(kh)), inv_sqrt);
    head_out.push_back(ops::matmul(ops::softmax(scores, 1), vh));
  }
  const Var attn = affine(ops::concat_cols(head_out), p[kWo], p[kBo]);
  const Var q_hat = ops::add(queries, attn);

  const Var xf = ops::layer_norm(q_hat, p[kLnFGain], p[kLnFBias]);
  const Var ffn = two_layer(xf, p[kFfnW1], p[kFfnB1], p[kFfnW2], p[kFfnB2]);
  return ops::add(q_hat, ffn);
}

HeadOutputs Model::predict_heads(const BoundParams& p, Var refined) const {
  HeadOutputs out;
  out.logits = two_layer(refined, p[kClsW1], p[kClsB1], p[kClsW2], p[kClsB2]);
  out.boxes = decode_boxes(p, refined);
  const Var slot0 = ops::slice_rows(refined, 0, 1);
  const Var flat = two_layer(slot0, p[kTrajW1], p[kTrajB1], p[kTrajW2], p[kTrajB2]);
  out.offsets = ops::reshape(flat, {config_.horizon, 2});
  return out;
}

StepResult Model::step(const BoundParams& p, const Tensor& features, const BoundingBox* gt,
                       std::size_t t, Var memory, StepMode mode) const {
  StepResult r;
  r.encoded = encode_queries(p, p.tape->constant(features));
  const std::size_t prime_window = mode == StepMode::kTrain ? config_.burn_in : 1;
  if (gt != nullptr && t < prime_window) {
    r.prime = decide_prime(r.encoded.boxes, *gt, t, prime_window);
    if (r.prime.applied) {
      // The winning slot is piecewise constant in the parameters; a near tie
      // is a discontinuity for gradient checks.
      const double best = geometry::iou(r.encoded.boxes[r.prime.slot], *gt);
      for (std::size_t i = 0; i < r.encoded.boxes.size(); ++i) {
        if (i == r.prime.slot) continue;
        const double other = geometry::iou(r.encoded.boxes[i], *gt);
        if (other != best) p.tape->note_kink(best - other);
      }
    }
    if (r.prime.applied && r.prime.slot != 0) {
      r.encoded.embeddings = gt_prime_swap(r.encoded.embeddings, r.prime);
      std::swap(r.encoded.boxes[0], r.encoded.boxes[r.prime.slot]);
    }
  }
  r.refined = temporal_refine(p, r.encoded.embeddings, memory);
  r.heads = predict_heads(p, r.refined);
  return r;
}

}  // namespace cmtrack::model
