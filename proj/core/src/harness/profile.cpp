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

#include "cmtrack/harness/profile.hpp"

#include <algorithm>
#include <sstream>

#include "cmtrack/harness/evaluate.hpp"
#include "cmtrack/numerics/memory_probe.hpp"
#include "cmtrack/numerics/ops.hpp"
#include "cmtrack/synth/sequence.hpp"

namespace cmtrack::harness {

using numerics::MemoryProbe;

namespace {

MemoryProfileRow run_detached(const model::Model& model, const synth::SequenceRecord& rec) {
  MemoryProfileRow row;
  row.frames = rec.length();
  ModelTracker tracker(model);
  tracker.reset(rec, rec.frames.front().gt);
  MemoryProbe::reset_peak();
  const std::int64_t base = MemoryProbe::live_bytes();
  std::size_t state = 0;
  for (std::size_t t = 0; t < rec.length(); ++t) {
    tracker.track(t, rec.frames[t]);
    state = std::max(state, tracker.memory().bytes());
  }
  row.state_bytes = state;
  row.peak_bytes = MemoryProbe::peak_bytes() - base;
  row.allocations = MemoryProbe::allocations();
  return row;
}

MemoryProfileRow run_attached(const model::Model& model, const synth::SequenceRecord& rec) {
  MemoryProfileRow row;
  row.frames = rec.length();
  const model::ModelConfig& c = model.config();
  MemoryProbe::reset_peak();
  const std::int64_t base = MemoryProbe::live_bytes();
  {
    numerics::Tape tape;
    const model::BoundParams p = model.bind(tape, true);
    numerics::Var memory = tape.constant(numerics::Tensor::zeros(c.num_queries, c.dim));
    for (std::size_t t = 0; t < rec.length(); ++t) {
      const synth::Frame& f = rec.frames[t];
      const model::StepResult r = model.step(p, f.features, t == 0 ? &f.gt : nullptr, t, memory,
                                             model::StepMode::kInference);
      memory = r.refined;
    }
    row.state_bytes = tape.tensor_bytes();
  }
  row.peak_bytes = MemoryProbe::peak_bytes() - base;
  row.allocations = MemoryProbe::allocations();
  return row;
}

}  // namespace

std::vector<MemoryProfileRow> profile_memory(const model::Model& model,
                                             std::span<const std::size_t> lengths,
                                             bool detach_memory, std::uint64_t seed) {
  std::vector<MemoryProfileRow> rows;
  for (std::size_t frames : lengths) {
    synth::SequenceSpec spec;
    spec.seed = seed;
    spec.length = std::max<std::size_t>(frames, 2);
    spec.feature_dim = model.config().feature_dim;
    spec.motion = synth::MotionModel::kRandomWalk;
    synth::SequenceRecord rec = synth::generate_sequence(spec);
    rec.frames.resize(frames);
    rows.push_back(detach_memory ? run_detached(model, rec) : run_attached(model, rec));
  }
  return rows;
}

std::string memory_profile_csv(const std::vector<MemoryProfileRow>& rows) {
  std::ostringstream out;
  out << "T,state_bytes,peak_bytes\n";
  for (const MemoryProfileRow& r : rows)
    out << r.frames << ',' << r.state_bytes << ',' << r.peak_bytes << '\n';
  return out.str();
}

nlohmann::json to_json(const std::vector<MemoryProfileRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const MemoryProfileRow& r : rows) {
    arr.push_back({{"T", r.frames},
                   {"state_bytes", r.state_bytes},
                   {"peak_bytes", r.peak_bytes},
                   {"allocations", r.allocations}});
  }
  return arr;
}

}  // namespace cmtrack::harness
