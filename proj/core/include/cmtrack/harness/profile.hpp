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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmtrack/model/model.hpp"

namespace cmtrack::harness {

struct MemoryProfileRow {
  std::size_t frames = 0;
  /// Bytes of temporal state carried between frames. With detach this is the
  /// memory tensor; without it, everything the memory's gradient path keeps
  /// alive on the tape.
  std::size_t state_bytes = 0;
  /// Peak tensor bytes above the pre-run baseline.
  std::int64_t peak_bytes = 0;
  std::uint64_t allocations = 0;
};

/// Online inference over a synthetic sequence of each length in `lengths`.
/// `detach_memory` = false is the contrast configuration: one tape spans the
/// whole sequence and the memory keeps its gradient path.
std::vector<MemoryProfileRow> profile_memory(const model::Model& model,
                                             std::span<const std::size_t> lengths,
                                             bool detach_memory, std::uint64_t seed);

/// Columns T,state_bytes,peak_bytes.
std::string memory_profile_csv(const std::vector<MemoryProfileRow>& rows);
nlohmann::json to_json(const std::vector<MemoryProfileRow>& rows);

}  // namespace cmtrack::harness
