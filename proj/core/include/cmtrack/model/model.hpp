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
#include <cstdint>
#include <vector>

#include "cmtrack/geometry/box.hpp"
#include "cmtrack/model/parameters.hpp"
#include "cmtrack/model/priming.hpp"
#include "cmtrack/numerics/tape.hpp"

namespace cmtrack::model {

struct ModelConfig {
  std::size_t num_queries = 8;
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t horizon = 10;
  std::size_t burn_in = 3;
  std::size_t feature_dim = 32;
  std::size_t encoder_hidden = 64;
  std::size_t ffn_hidden = 128;
  std::size_t head_hidden = 64;

  /// Target / background.
  static constexpr std::size_t kNumClasses = 2;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

enum class StepMode {
  kTrain,      // priming on frames t < burn_in
  kInference,  // ground truth only at t == 0
};

/// Per-frame query embeddings with the boxes the box head decodes from them.
struct QuerySet {
  numerics::Var embeddings;  // N_q x D
  std::vector<geometry::BoundingBox> boxes;
};

struct HeadOutputs {
  numerics::Var logits;   // N_q x 2
  numerics::Var boxes;    // N_q x 4, squashed into (0, 1)
  numerics::Var offsets;  // H x 2, read from slot 0
};

struct StepResult {
  QuerySet encoded;        // after priming
  numerics::Var refined;   // N_q x D
  HeadOutputs heads;
  PrimeDecision prime;

  geometry::BoundingBox slot0_box() const;
};

/// The only state carried across frames: one N_q x D tensor, overwritten in
/// place so its storage never changes size.
class TemporalMemory {
 public:
  TemporalMemory(std::size_t num_queries, std::size_t dim);

  const numerics::Tensor& state() const noexcept { return state_; }
  std::size_t bytes() const noexcept { return state_.bytes(); }

  /// Stores the refined queries' values. Nothing links back to the tape.
  void update(const numerics::Tensor& refined);
  void clear() { state_.fill(0.0); }

 private:
  numerics::Tensor state_;
};

/// Parameters placed on one tape, indexed by the model's layout.
struct BoundParams {
  numerics::Tape* tape = nullptr;
  std::vector<numerics::Var> leaves;

  numerics::Var operator[](std::size_t i) const { return leaves[i]; }
};

class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);
  /// Adopts existing parameters; names and shapes must match the layout.
  Model(ModelConfig config, ParameterSet params);

  const ModelConfig& config() const noexcept { return config_; }
  ParameterSet& parameters() noexcept { return params_; }
  const ParameterSet& parameters() const noexcept { return params_; }

  BoundParams bind(numerics::Tape& tape, bool trainable) const;

  /// Two-layer perceptron from frame features (1 x feature_dim) to a shared
  /// content row, added to the learned query embeddings.
  numerics::Var encode_frame(const BoundParams& p, numerics::Var features) const;
  /// Box head on arbitrary query rows.
  numerics::Var decode_boxes(const BoundParams& p, numerics::Var queries) const;
  QuerySet encode_queries(const BoundParams& p, numerics::Var features) const;

  /// Q_hat = Q + MHA(LN(Q), LN(M), LN(M)); Q_tilde = Q_hat + FFN(LN(Q_hat)).
  numerics::Var temporal_refine(const BoundParams& p, numerics::Var queries,
                                numerics::Var memory) const;
  HeadOutputs predict_heads(const BoundParams& p, numerics::Var refined) const;

  /// encode -> prime -> refine -> heads. `gt` may be null when no priming can
  /// happen (inference after t == 0).
  StepResult step(const BoundParams& p, const numerics::Tensor& features,
                  const geometry::BoundingBox* gt, std::size_t t, numerics::Var memory,
                  StepMode mode) const;

  /// Names of the encoder/temporal/head parameters, in layout order.
  static std::vector<std::string> parameter_names();

 private:
  void build_layout(std::uint64_t seed, bool initialise);

  ModelConfig config_;
  ParameterSet params_;
};

}  // namespace cmtrack::model
