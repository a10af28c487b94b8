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

#include "cmtrack/harness/evaluate.hpp"

#include <algorithm>

#include "cmtrack/errors.hpp"
#include "cmtrack/model/trajectory.hpp"
#include "cmtrack/synth/sequence.hpp"

namespace cmtrack::harness {

using geometry::BoundingBox;
using numerics::Tensor;

ModelTracker::ModelTracker(const model::Model& model, ModelTrackerOptions options)
    : model_(model),
      options_(options),
      memory_(model.config().num_queries, model.config().dim) {}

void ModelTracker::reset(const synth::SequenceRecord&, const BoundingBox& init) {
  memory_.clear();
  init_ = init;
}

TrackStep ModelTracker::track(std::size_t t, const synth::Frame& frame) {
  numerics::Tape tape;
  const model::BoundParams p = model_.bind(tape, false);
  const model::StepResult r =
      model_.step(p, frame.features, t == 0 ? &init_ : nullptr, t, tape.constant(memory_.state()),
                  model::StepMode::kInference);
  TrackStep out;
  out.box = r.slot0_box();
  out.forecast = model::integrate_offsets({out.box.cx, out.box.cy}, r.heads.offsets.value());
  if (options_.ablate_memory) {
    memory_.clear();
  } else {
    memory_.update(r.refined.value());
  }
  return out;
}

void OracleTracker::reset(const synth::SequenceRecord& rec, const BoundingBox&) { rec_ = &rec; }

TrackStep OracleTracker::track(std::size_t t, const synth::Frame& frame) {
  TrackStep out;
  out.box = frame.gt;
  if (t + horizon_ < rec_->length()) out.forecast = synth::future_centers(*rec_, t, horizon_);
  return out;
}

void StaticBoxTracker::reset(const synth::SequenceRecord&, const BoundingBox& init) { init_ = init; }

TrackStep StaticBoxTracker::track(std::size_t, const synth::Frame&) {
  TrackStep out;
  out.box = init_;
  out.forecast = Tensor({horizon_, 2});
  for (std::size_t h = 0; h < horizon_; ++h) {
    out.forecast(h, 0) = init_.cx;
    out.forecast(h, 1) = init_.cy;
  }
  return out;
}

metrics::TrackResult track_sequence(Tracker& tracker, const synth::SequenceRecord& rec,
                                    std::size_t horizon) {
  if (rec.frames.empty()) throw ContractError("cannot track empty sequence '" + rec.name + "'");
  metrics::TrackResult r;
  r.name = rec.name;
  r.attributes = rec.attributes;
  r.extent = rec.extent;
  tracker.reset(rec, rec.frames.front().gt);
  for (std::size_t t = 0; t < rec.length(); ++t) {
    const synth::Frame& f = rec.frames[t];
    TrackStep s = tracker.track(t, f);
    r.pred.push_back(s.box);
    r.gt.push_back(f.gt);
    r.visible.push_back(f.visible);
    if (t + horizon < rec.length() && !s.forecast.empty()) {
      r.forecast_pred.push_back(std::move(s.forecast));
      r.forecast_gt.push_back(synth::future_centers(rec, t, horizon));
    }
  }
  return r;
}

EvalReport evaluate(Tracker& tracker, const std::vector<synth::SequenceRecord>& data,
                    std::size_t horizon) {
  EvalReport report;
  for (const synth::SequenceRecord& rec : data) {
    report.tracks.push_back(track_sequence(tracker, rec, horizon));
    if (rec.length() <= horizon) {
      report.notices.push_back("sequence '" + rec.name + "' has " + std::to_string(rec.length()) +
                               " frames, fewer than H+1 = " + std::to_string(horizon + 1) +
                               "; forecast metrics skipped");
    }
    report.sequences.push_back(metrics::evaluate_sequence(report.tracks.back()));
  }
  report.table = metrics::attribute_breakdown(report.sequences);
  return report;
}

double window_mean_iou(const metrics::TrackResult& r, std::size_t begin, std::size_t end) {
  end = std::min(end, r.gt.size());
  if (begin >= end) throw ContractError("window_mean_iou: empty window");
  double total = 0.0;
  for (std::size_t t = begin; t < end; ++t) total += geometry::iou(r.pred[t], r.gt[t]);
  return total / static_cast<double>(end - begin);
}

nlohmann::json eval_manifest(const EvalReport& report) {
  nlohmann::json seqs = nlohmann::json::array();
  for (const metrics::SequenceMetrics& m : report.sequences) seqs.push_back(metrics::to_json(m));
  return {{"kind", "eval"},
          {"sequences", seqs},
          {"aggregate", metrics::to_json(report.table.overall)},
          {"attributes", metrics::to_json(report.table)},
          {"notices", report.notices}};
}

}  // namespace cmtrack::harness
