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
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmtrack/metrics/metrics.hpp"
#include "cmtrack/model/model.hpp"
#include "cmtrack/synth/sequence.hpp"

namespace cmtrack::harness {

struct TrackStep {
  geometry::BoundingBox box;
  numerics::Tensor forecast;  // H x 2 future centres, empty if none
};

/// Online single-object tracker: sees frame t only after frame t-1, and the
/// ground-truth box only at initialisation.
class Tracker {
 public:
  virtual ~Tracker() = default;
  virtual void reset(const synth::SequenceRecord& rec, const geometry::BoundingBox& init) = 0;
  virtual TrackStep track(std::size_t t, const synth::Frame& frame) = 0;
};

struct ModelTrackerOptions {
  /// Zero the memory after every frame (temporal-attention ablation).
  bool ablate_memory = false;
};

class ModelTracker final : public Tracker {
 public:
  ModelTracker(const model::Model& model, ModelTrackerOptions options = {});

  void reset(const synth::SequenceRecord& rec, const geometry::BoundingBox& init) override;
  TrackStep track(std::size_t t, const synth::Frame& frame) override;

  const model::TemporalMemory& memory() const noexcept { return memory_; }

 private:
  const model::Model& model_;
  ModelTrackerOptions options_;
  model::TemporalMemory memory_;
  geometry::BoundingBox init_;
};

/// Reads the answer from the record; sanity check for the harness.
class OracleTracker final : public Tracker {
 public:
  explicit OracleTracker(std::size_t horizon) : horizon_(horizon) {}
  void reset(const synth::SequenceRecord& rec, const geometry::BoundingBox& init) override;
  TrackStep track(std::size_t t, const synth::Frame& frame) override;

 private:
  std::size_t horizon_;
  const synth::SequenceRecord* rec_ = nullptr;
};

/// Reports the initial box forever and forecasts no motion.
class StaticBoxTracker final : public Tracker {
 public:
  explicit StaticBoxTracker(std::size_t horizon) : horizon_(horizon) {}
  void reset(const synth::SequenceRecord& rec, const geometry::BoundingBox& init) override;
  TrackStep track(std::size_t t, const synth::Frame& frame) override;

 private:
  std::size_t horizon_;
  geometry::BoundingBox init_;
};

struct EvalReport {
  std::vector<metrics::TrackResult> tracks;
  std::vector<metrics::SequenceMetrics> sequences;
  metrics::AttributeTable table;
  std::vector<std::string> notices;
};

/// Runs `tracker` over each sequence in order. Forecasts are scored at every
/// frame with a full horizon of ground truth ahead; sequences too short for
/// that skip forecast metrics with a notice.
metrics::TrackResult track_sequence(Tracker& tracker, const synth::SequenceRecord& rec,
                                    std::size_t horizon);
EvalReport evaluate(Tracker& tracker, const std::vector<synth::SequenceRecord>& data,
                    std::size_t horizon);

/// Mean IoU over frames [begin, end) with every frame counted as visible.
double window_mean_iou(const metrics::TrackResult& r, std::size_t begin, std::size_t end);

nlohmann::json eval_manifest(const EvalReport& report);

}  // namespace cmtrack::harness
