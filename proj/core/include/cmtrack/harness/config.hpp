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

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "cmtrack/losses/losses.hpp"
#include "cmtrack/model/model.hpp"
#include "cmtrack/synth/annotations.hpp"
#include "cmtrack/synth/sequence.hpp"

namespace cmtrack::harness {

struct TrainConfig {
  std::size_t clip_length = 10;
  std::size_t clip_stride = 5;
  std::size_t batch_size = 2;
  double lr_heads = 1e-4;
  double lr_encoder = 1e-5;
  double weight_decay = 1e-4;
  std::size_t warmup_iterations = 1000;
  std::size_t epochs = 100;
  /// Caps the run when nonzero; otherwise epochs x batches per epoch.
  std::size_t max_iterations = 0;
  double max_grad_norm = 0.1;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Box and trajectory terms on frames where the target is hidden.
  bool supervise_invisible = true;
  /// Rescale term weights by running inverse gradient magnitude.
  bool balance_losses = false;
  std::size_t balance_every = 100;
  std::size_t log_every = 50;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Dataset recipe: every split is cloned from `prototype` with disjoint seeds.
struct DataConfig {
  synth::SequenceSpec prototype;
  std::uint64_t base_seed = 1000;
  std::size_t train_count = 60;
  std::size_t val_count = 30;
  std::size_t test_count = 10;

  bool operator==(const DataConfig&) const = default;
};

struct RunConfig {
  model::ModelConfig model;
  TrainConfig train;
  losses::LossWeights weights;
  DataConfig data;

  /// Also checks cross-section consistency (feature widths, clip vs burn-in).
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const losses::LossWeights& w);
nlohmann::json to_json(const DataConfig& d);
nlohmann::json to_json(const RunConfig& c);

/// Missing keys keep defaults; unknown keys are a ParseError.
TrainConfig train_config_from_json(const nlohmann::json& j);
losses::LossWeights loss_weights_from_json(const nlohmann::json& j);
DataConfig data_config_from_json(const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& path);

std::size_t split_count(const DataConfig& d, synth::Split s);
std::vector<synth::SequenceSpec> split_specs(const DataConfig& d, synth::Split s);
std::vector<synth::SequenceRecord> generate_split(const DataConfig& d, synth::Split s);

}  // namespace cmtrack::harness
