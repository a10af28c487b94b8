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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmtrack/geometry/box.hpp"
#include "cmtrack/numerics/tensor.hpp"

namespace cmtrack::synth {

/// Challenge attributes: fast motion, occlusion, scale change, illumination
/// change, night/low-light, background clutter, deformation, unusual
/// environment.
enum class Attribute { kFM, kOCC, kSC, kIC, kNT, kBC, kDF, kUE };
inline constexpr std::size_t kAttributeCount = 8;
inline constexpr std::array<Attribute, kAttributeCount> kAllAttributes = {
    Attribute::kFM, Attribute::kOCC, Attribute::kSC, Attribute::kIC,
    Attribute::kNT, Attribute::kBC,  Attribute::kDF, Attribute::kUE};

std::string_view to_string(Attribute a) noexcept;
/// Throws ParseError on an unknown tag.
Attribute parse_attribute(std::string_view tag);

enum class MotionModel { kLinear, kSinusoidal, kRandomWalk, kPiecewise };
std::string_view to_string(MotionModel m) noexcept;
MotionModel parse_motion(std::string_view name);

/// Half-open frame interval [begin, end).
struct FrameWindow {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool contains(std::size_t t) const noexcept { return t >= begin && t < end; }
  bool operator==(const FrameWindow&) const = default;
};

struct SequenceSpec {
  std::uint64_t seed = 0;
  std::size_t length = 60;
  MotionModel motion = MotionModel::kLinear;
  double speed = 0.01;  // normalised units per frame
  std::vector<Attribute> attributes;
  std::vector<FrameWindow> occlusions;
  double scale_rate = 0.0;  // per-frame log size drift under SC
  double noise = 0.0;       // feature noise standard deviation
  std::size_t feature_dim = 32;

  /// Throws ContractError on inconsistent specs (windows outside [0, T),
  /// negative or non-finite rates).
  void validate() const;
  bool has(Attribute a) const noexcept;
  bool operator==(const SequenceSpec&) const = default;
};

struct PixelExtent {
  double width = 800.0;
  double height = 800.0;
  bool operator==(const PixelExtent&) const = default;
};

struct Frame {
  numerics::Tensor features;  // 1 x feature_dim; empty when read from annotations
  geometry::BoundingBox gt;
  bool visible = true;
};

struct SequenceRecord {
  std::string name;
  std::vector<Frame> frames;
  std::vector<Attribute> attributes;
  PixelExtent extent;

  std::size_t length() const noexcept { return frames.size(); }
  bool bitwise_equal(const SequenceRecord& other) const;
};

/// Pure function of the spec. Features are a fixed linear projection of the
/// target box (plus attribute-specific corruption), shared by every sequence,
/// so the box is recoverable from features whenever the target is visible.
SequenceRecord generate_sequence(const SequenceSpec& spec);

/// Ground-truth centres of frames t+1 .. t+H as an H x 2 tensor.
numerics::Tensor future_centers(const SequenceRecord& rec, std::size_t t, std::size_t horizon);

nlohmann::json to_json(const SequenceSpec& spec);
SequenceSpec spec_from_json(const nlohmann::json& j);

/// Canonical directory name for a generated sequence.
std::string sequence_name(const SequenceSpec& spec);

}  // namespace cmtrack::synth
