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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmtrack/geometry/box.hpp"
#include "cmtrack/losses/displacement.hpp"
#include "cmtrack/numerics/tensor.hpp"
#include "cmtrack/synth/sequence.hpp"

namespace cmtrack::metrics {

/// One tracked sequence. Forecast pairs are optional (H x 2 centres per
/// anchor frame).
struct TrackResult {
  std::string name;
  std::vector<geometry::BoundingBox> pred;
  std::vector<geometry::BoundingBox> gt;
  std::vector<bool> visible;
  std::vector<synth::Attribute> attributes;
  synth::PixelExtent extent;
  std::vector<numerics::Tensor> forecast_pred;
  std::vector<numerics::Tensor> forecast_gt;

  /// Throws DimensionError on misaligned lengths.
  void validate() const;
  std::size_t visible_frames() const;
};

inline constexpr double kPrecisionThresholdPx = 20.0;
inline constexpr std::size_t kSuccessThresholds = 101;
inline constexpr std::size_t kNormPrecisionThresholds = 50;  // 0, 0.01, ..., 0.49

/// Mean IoU over visible frames, in percent. Throws ContractError when no
/// frame is visible.
double success_auc(const TrackResult& r);
/// Trapezoidal area under the success curve (IoU >= theta) sampled at
/// `thresholds` evenly spaced points of [0, 1], in percent.
double success_auc_sweep(const TrackResult& r, std::size_t thresholds = kSuccessThresholds);

/// Percent of visible frames whose centre error in pixels is <= 20.
double precision_at_20px(const TrackResult& r);
/// Precision curve at integer pixel thresholds 0..50, read at 20.
double precision_at_20px_reference(const TrackResult& r);

/// Centre error with x divided by gt width and y by gt height.
double normalized_center_error(const geometry::BoundingBox& pred, const geometry::BoundingBox& gt);
/// Mean precision over thresholds k/100, k = 0..49 (left Riemann sum of the
/// curve on [0, 0.5), normalised to percent).
double normalized_precision(const TrackResult& r);
/// Frame-by-threshold double loop over the same grid.
double normalized_precision_reference(const TrackResult& r);

/// Mean ADE/FDE over anchor frames. Throws ContractError when there are none.
losses::DisplacementErrors ade_fde_eval(const std::vector<numerics::Tensor>& pred,
                                        const std::vector<numerics::Tensor>& gt);

struct SequenceMetrics {
  std::string name;
  double auc = 0.0;
  double norm_precision = 0.0;
  double precision20 = 0.0;
  std::optional<losses::DisplacementErrors> forecast;
  double mean_iou = 0.0;
  std::vector<synth::Attribute> attributes;
};

SequenceMetrics evaluate_sequence(const TrackResult& r);

/// Column of the attribute table: mean of each metric over member sequences.
struct MetricSummary {
  std::size_t count = 0;
  double auc = 0.0;
  double norm_precision = 0.0;
  double precision20 = 0.0;
  std::size_t forecast_count = 0;
  double ade = 0.0;
  double fde = 0.0;
};

/// Sequences carrying several tags count toward each. Summation follows input
/// order so the result is independent of how sequences were evaluated.
struct AttributeTable {
  std::array<MetricSummary, synth::kAttributeCount> by_attribute{};
  MetricSummary overall;
};

MetricSummary summarize(const std::vector<SequenceMetrics>& seqs);
AttributeTable attribute_breakdown(const std::vector<SequenceMetrics>& seqs);

nlohmann::json to_json(const SequenceMetrics& m);
nlohmann::json to_json(const MetricSummary& s);
nlohmann::json to_json(const AttributeTable& t);

/// Rows AUC, P_Norm, P@20, ADE, FDE; columns FM..UE then All.
std::string attribute_table_csv(const AttributeTable& t);

}  // namespace cmtrack::metrics
