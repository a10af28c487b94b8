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
#include <filesystem>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmtrack/harness/config.hpp"
#include "cmtrack/losses/losses.hpp"
#include "cmtrack/model/model.hpp"
#include "cmtrack/synth/sequence.hpp"

namespace cmtrack::harness {

struct ClipRef {
  std::size_t sequence = 0;
  std::size_t start = 0;
};

/// Clip starts 0, stride, 2*stride, ... that fit inside each sequence.
std::vector<ClipRef> enumerate_clips(const std::vector<synth::SequenceRecord>& data,
                                     std::size_t length, std::size_t stride);

/// Iterations a run will perform for this config and clip count.
std::size_t total_iterations(const TrainConfig& c, std::size_t clip_count);

struct IterationLog {
  std::size_t iteration = 0;
  double lr_heads = 0.0;
  double lr_encoder = 0.0;
  losses::LossValues terms;  // mean per frame over the batch
  double total = 0.0;        // weighted, mean per frame
  double grad_norm = 0.0;    // before clipping
  std::int64_t peak_bytes = 0;
};

struct TrainResult {
  model::Model model;
  std::vector<IterationLog> log;
  losses::LossWeights final_weights;  // differs from the config only when balancing
  double seconds = 0.0;
};

using ProgressFn = std::function<void(const IterationLog&)>;

/// Deterministic for a fixed (config, data): the model is initialised from
/// the config seed, clips are shuffled per epoch from the same seed.
TrainResult train(const RunConfig& config, const std::vector<synth::SequenceRecord>& data,
                  const ProgressFn& progress = {});

std::string losses_csv(const std::vector<IterationLog>& log);

/// Manifest fields that are a pure function of (config, data). Wall-clock
/// time is kept out so repeated runs compare equal.
nlohmann::json train_manifest(const RunConfig& config, const TrainResult& result);

}  // namespace cmtrack::harness
