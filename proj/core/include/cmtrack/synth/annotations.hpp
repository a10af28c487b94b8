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
#include <vector>

#include <nlohmann/json.hpp>

#include "cmtrack/synth/sequence.hpp"

namespace cmtrack::synth {

/// Writes groundtruth.txt ("x,y,w,h" pixel corner-plus-size per frame),
/// visibility.txt (0/1 per frame) and meta.json into `dir`.
void write_annotations(const SequenceRecord& rec, const std::filesystem::path& dir);

/// Reads boxes, visibility and metadata back. Features are left empty.
/// Throws ParseError (with line number) on malformed content or empty files.
SequenceRecord read_annotations(const std::filesystem::path& dir);

enum class Split { kTrain, kVal, kTest };
std::string_view to_string(Split s) noexcept;

/// Seeds of split `s` never collide with another split's for counts below
/// one million.
std::uint64_t split_seed(std::uint64_t base_seed, Split s, std::size_t index);

/// `count` specs cloned from `prototype` with split-disjoint seeds.
std::vector<SequenceSpec> make_split(const SequenceSpec& prototype, Split s, std::size_t count,
                                     std::uint64_t base_seed);

/// Spec list file: {"sequences": [spec, ...]}.
void write_spec_list(const std::vector<SequenceSpec>& specs, const std::filesystem::path& path);
std::vector<SequenceSpec> read_spec_list(const std::filesystem::path& path);

}  // namespace cmtrack::synth
