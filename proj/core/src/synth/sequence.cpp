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

#include "cmtrack/synth/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cmtrack/errors.hpp"
#include "cmtrack/numerics/random.hpp"

namespace cmtrack::synth {

using geometry::BoundingBox;
using numerics::Rng;
using numerics::Tensor;

namespace {

constexpr std::uint64_t kWorldSeed = 0x5EED'F00D'CAFEULL;
constexpr std::size_t kBoxChannels = 5;  // 2(cx-.5), 2(cy-.5), 4(w-.15), 4(h-.15), 1
constexpr double kCenterLo = 0.1;
constexpr double kCenterHi = 0.9;
constexpr double kMinSize = 0.03;
constexpr double kMaxSize = 0.6;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr std::array<std::string_view, kAttributeCount> kAttributeTags = {
    "FM", "OCC", "SC", "IC", "NT", "BC", "DF", "UE"};

/// Fixed projections shared by every sequence of a given feature width.
struct FeatureMap {
  Tensor target;      // feature_dim x kBoxChannels
  Tensor distractor;  // feature_dim x kBoxChannels

  explicit FeatureMap(std::size_t feature_dim) {
    Rng rng(numerics::mix_seed(kWorldSeed, feature_dim));
    target = rng.normal_tensor({feature_dim, kBoxChannels}, 0.5);
    distractor = rng.normal_tensor({feature_dim, kBoxChannels}, 0.5);
  }
};

std::array<double, kBoxChannels> box_channels(const BoundingBox& b) {
  return {2.0 * (b.cx - 0.5), 2.0 * (b.cy - 0.5), 4.0 * (b.w - 0.15), 4.0 * (b.h - 0.15), 1.0};
}

void project_into(const Tensor& proj, const std::array<double, kBoxChannels>& ch, double gain,
                  Tensor& out) {
  for (std::size_t i = 0; i < proj.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < kBoxChannels; ++c) acc += proj(i, c) * ch[c];
    out[i] += gain * acc;
  }
}

// Reflects a coordinate into [lo, hi], flipping the velocity on a bounce.
void reflect(double& pos, double& vel, double lo, double hi) {
  for (int guard = 0; guard < 8 && (pos < lo || pos > hi); ++guard) {
    if (pos < lo) pos = 2.0 * lo - pos;
    if (pos > hi) pos = 2.0 * hi - pos;
    vel = -vel;
  }
  pos = std::clamp(pos, lo, hi);
}

// Start coordinate so a straight path of displacement `d` stays in bounds.
double fitted_start(Rng& rng, double d) {
  const double lo = kCenterLo - std::min(0.0, d);
  const double hi = kCenterHi - std::max(0.0, d);
  if (lo > hi) return 0.5 - 0.5 * d;
  return rng.uniform(lo, hi);
}

struct Path {
  std::vector<double> cx, cy;
};

Path simulate_path(const SequenceSpec& spec, Rng& rng, double speed) {
  const std::size_t n = spec.length;
  double theta = rng.uniform(0.0, kTwoPi);
  double vx = speed * std::cos(theta);
  double vy = speed * std::sin(theta);
  const double travel = speed * static_cast<double>(n - 1);
  double x, y;
  if (spec.motion == MotionModel::kLinear) {
    x = fitted_start(rng, travel * std::cos(theta));
    y = fitted_start(rng, travel * std::sin(theta));
  } else {
    x = rng.uniform(0.3, 0.7);
    y = rng.uniform(0.3, 0.7);
  }
  const double amplitude = 0.05;
  const double period = rng.uniform(20.0, 40.0);
  std::size_t segment_end = static_cast<std::size_t>(rng.uniform(10.0, 25.0));

  Path p;
  p.cx.reserve(n);
  p.cy.reserve(n);
  p.cx.push_back(x);
  p.cy.push_back(y);
  for (std::size_t t = 1; t < n; ++t) {
    switch (spec.motion) {
      case MotionModel::kLinear:
        break;
      case MotionModel::kSinusoidal:
        break;
      case MotionModel::kRandomWalk: {
        theta = std::atan2(vy, vx) + rng.normal(0.0, 0.3);
        vx = speed * std::cos(theta);
        vy = speed * std::sin(theta);
        break;
      }
      case MotionModel::kPiecewise:
        if (t >= segment_end) {
          theta = rng.uniform(0.0, kTwoPi);
          vx = speed * std::cos(theta);
          vy = speed * std::sin(theta);
          segment_end = t + static_cast<std::size_t>(rng.uniform(10.0, 25.0));
        }
        break;
    }
    x += vx;
    y += vy;
    reflect(x, vx, kCenterLo, kCenterHi);
    reflect(y, vy, kCenterLo, kCenterHi);
    p.cx.push_back(x);
    p.cy.push_back(y);
  }
  if (spec.motion == MotionModel::kSinusoidal) {
    // Perpendicular oscillation on top of the drift.
    const double nx = -std::sin(theta), ny = std::cos(theta);
    for (std::size_t t = 0; t < n; ++t) {
      const double s = amplitude * std::sin(kTwoPi * static_cast<double>(t) / period);
      p.cx[t] = std::clamp(p.cx[t] + s * nx, kCenterLo, kCenterHi);
      p.cy[t] = std::clamp(p.cy[t] + s * ny, kCenterLo, kCenterHi);
    }
  }
  return p;
}

}  // namespace

std::string_view to_string(Attribute a) noexcept { return kAttributeTags[static_cast<std::size_t>(a)]; }

Attribute parse_attribute(std::string_view tag) {
  for (std::size_t i = 0; i < kAttributeCount; ++i)
    if (kAttributeTags[i] == tag) return kAllAttributes[i];
  throw ParseError("unknown attribute tag '" + std::string(tag) + "'");
}

std::string_view to_string(MotionModel m) noexcept {
  switch (m) {
    case MotionModel::kLinear: return "linear";
    case MotionModel::kSinusoidal: return "sinusoidal";
    case MotionModel::kRandomWalk: return "random-walk";
    case MotionModel::kPiecewise: return "piecewise";
  }
  return "linear";
}

MotionModel parse_motion(std::string_view name) {
  for (MotionModel m : {MotionModel::kLinear, MotionModel::kSinusoidal, MotionModel::kRandomWalk,
                        MotionModel::kPiecewise}) {
    if (to_string(m) == name) return m;
  }
  throw ParseError("unknown motion model '" + std::string(name) + "'");
}

void SequenceSpec::validate() const {
  if (length < 2) throw ContractError("sequence length must be >= 2");
  if (feature_dim < 1) throw ContractError("feature_dim must be >= 1");
  if (!std::isfinite(speed) || speed < 0.0) throw ContractError("speed must be finite and >= 0");
  if (!std::isfinite(scale_rate)) throw ContractError("scale_rate must be finite");
  if (!std::isfinite(noise) || noise < 0.0) throw ContractError("noise must be finite and >= 0");
  for (const FrameWindow& w : occlusions) {
    if (w.begin >= w.end || w.end > length) {
      throw ContractError("occlusion window [" + std::to_string(w.begin) + ", " +
                          std::to_string(w.end) + ") outside [0, " + std::to_string(length) + ")");
    }
  }
}

bool SequenceSpec::has(Attribute a) const noexcept {
  return std::find(attributes.begin(), attributes.end(), a) != attributes.end();
}

bool SequenceRecord::bitwise_equal(const SequenceRecord& other) const {
  if (name != other.name || attributes != other.attributes || !(extent == other.extent) ||
      frames.size() != other.frames.size()) {
    return false;
  }
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Frame& a = frames[t];
    const Frame& b = other.frames[t];
    if (!(a.gt == b.gt) || a.visible != b.visible || !a.features.bitwise_equal(b.features)) {
      return false;
    }
  }
  return true;
}

std::string sequence_name(const SequenceSpec& spec) { return "seq_" + std::to_string(spec.seed); }

SequenceRecord generate_sequence(const SequenceSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n = spec.length;
  const FeatureMap map(spec.feature_dim);

  SequenceRecord rec;
  rec.name = sequence_name(spec);
  for (Attribute a : kAllAttributes)
    if (spec.has(a) || (a == Attribute::kOCC && !spec.occlusions.empty())) rec.attributes.push_back(a);

  const double speed = spec.speed * (spec.has(Attribute::kFM) ? 3.0 : 1.0);
  const double w0 = rng.uniform(0.12, 0.22);
  const double h0 = rng.uniform(0.12, 0.22);
  const Path path = simulate_path(spec, rng, speed);

  const double scale_rate = spec.has(Attribute::kSC) ? (spec.scale_rate != 0.0 ? spec.scale_rate : 0.01) : 0.0;
  const double deform_phase = rng.uniform(0.0, kTwoPi);

  // Background clutter: a distractor box drifting on its own straight path.
  Rng clutter_rng(numerics::mix_seed(spec.seed, 1));
  double dx = clutter_rng.uniform(0.2, 0.8), dy = clutter_rng.uniform(0.2, 0.8);
  double dvx = clutter_rng.uniform(-0.006, 0.006), dvy = clutter_rng.uniform(-0.006, 0.006);

  std::vector<FrameWindow> occlusions = spec.occlusions;
  if (spec.has(Attribute::kOCC) && occlusions.empty() && n >= 15) {
    const std::size_t len = 5;
    const std::size_t begin = n / 3 + static_cast<std::size_t>(rng.below(n / 3 - len + 1));
    occlusions.push_back({begin, begin + len});
  }

  Rng noise_rng(numerics::mix_seed(spec.seed, 2));
  Tensor previous;
  rec.frames.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double tt = static_cast<double>(t);
    double w = std::clamp(w0 * std::exp(scale_rate * tt), kMinSize, kMaxSize);
    double h = std::clamp(h0 * std::exp(scale_rate * tt), kMinSize, kMaxSize);
    if (spec.has(Attribute::kDF)) {
      const double f = 1.0 + 0.25 * std::sin(kTwoPi * tt / 15.0 + deform_phase);
      w = std::clamp(w * f, kMinSize, kMaxSize);
      h = std::clamp(h / f, kMinSize, kMaxSize);
    }
    Frame frame;
    frame.gt = {path.cx[t], path.cy[t], w, h};
    frame.visible = std::none_of(occlusions.begin(), occlusions.end(),
                                 [t](const FrameWindow& win) { return win.contains(t); });

    double gain = 1.0;
    if (spec.has(Attribute::kIC)) gain *= 0.6 + 0.3 * std::sin(kTwoPi * tt / 30.0);
    if (spec.has(Attribute::kNT)) gain *= 0.5;
    if (spec.has(Attribute::kUE)) gain *= 0.7;

    Tensor f({1, spec.feature_dim});
    project_into(map.target, box_channels(frame.gt), gain, f);
    if (spec.has(Attribute::kBC)) {
      project_into(map.distractor, box_channels({dx, dy, w0, h0}), 0.7, f);
      dx += dvx;
      dy += dvy;
      reflect(dx, dvx, kCenterLo, kCenterHi);
      reflect(dy, dvy, kCenterLo, kCenterHi);
    }
    if (spec.has(Attribute::kUE) && !previous.empty()) {
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5 * f[i] + 0.5 * previous[i];
    }
    previous = f;
    const double sigma = spec.noise + (spec.has(Attribute::kNT) ? 0.02 : 0.0);
    if (sigma > 0.0) {
      for (double& v : f.values()) v += noise_rng.normal(0.0, sigma);
    }
    if (!frame.visible) f.fill(0.0);
    frame.features = std::move(f);
    rec.frames.push_back(std::move(frame));
  }
  return rec;
}

Tensor future_centers(const SequenceRecord& rec, std::size_t t, std::size_t horizon) {
  if (horizon == 0 || t + horizon >= rec.length()) {
    throw ContractError("future_centers: t=" + std::to_string(t) + " with H=" +
                        std::to_string(horizon) + " exceeds sequence of " +
                        std::to_string(rec.length()) + " frames");
  }
  Tensor out({horizon, 2});
  for (std::size_t h = 0; h < horizon; ++h) {
    out(h, 0) = rec.frames[t + 1 + h].gt.cx;
    out(h, 1) = rec.frames[t + 1 + h].gt.cy;
  }
  return out;
}

nlohmann::json to_json(const SequenceSpec& s) {
  nlohmann::json attrs = nlohmann::json::array();
  for (Attribute a : s.attributes) attrs.push_back(std::string(to_string(a)));
  nlohmann::json occ = nlohmann::json::array();
  for (const FrameWindow& w : s.occlusions) occ.push_back({w.begin, w.end});
  return {{"seed", s.seed},
          {"length", s.length},
          {"motion", std::string(to_string(s.motion))},
          {"speed", s.speed},
          {"attributes", attrs},
          {"occlusions", occ},
          {"scale_rate", s.scale_rate},
          {"noise", s.noise},
          {"feature_dim", s.feature_dim}};
}

SequenceSpec spec_from_json(const nlohmann::json& j) {
  SequenceSpec s;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "seed") s.seed = value.get<std::uint64_t>();
      else if (key == "length") s.length = value.get<std::size_t>();
      else if (key == "motion") s.motion = parse_motion(value.get<std::string>());
      else if (key == "speed") s.speed = value.get<double>();
      else if (key == "attributes") {
        for (const auto& tag : value) s.attributes.push_back(parse_attribute(tag.get<std::string>()));
      } else if (key == "occlusions") {
        for (const auto& w : value) s.occlusions.push_back({w.at(0).get<std::size_t>(), w.at(1).get<std::size_t>()});
      } else if (key == "scale_rate") s.scale_rate = value.get<double>();
      else if (key == "noise") s.noise = value.get<double>();
      else if (key == "feature_dim") s.feature_dim = value.get<std::size_t>();
      else throw ParseError("unknown sequence spec key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sequence spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace cmtrack::synth
