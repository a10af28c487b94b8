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

#include "cmtrack/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cmtrack/errors.hpp"

namespace cmtrack::metrics {

using geometry::BoundingBox;
using numerics::Tensor;

namespace {

double pixel_center_error(const BoundingBox& p, const BoundingBox& g, const synth::PixelExtent& e) {
  const double dx = (p.cx - g.cx) * e.width;
  const double dy = (p.cy - g.cy) * e.height;
  return std::sqrt(dx * dx + dy * dy);
}

std::size_t require_visible(const TrackResult& r, const char* what) {
  r.validate();
  const std::size_t n = r.visible_frames();
  if (n == 0) throw ContractError(std::string(what) + ": no visible frames in '" + r.name + "'");
  return n;
}

double norm_threshold(std::size_t k) { return static_cast<double>(k) / 100.0; }

double percent(std::size_t hits, std::size_t total) {
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

void add_to(MetricSummary& s, const SequenceMetrics& m) {
  ++s.count;
  s.auc += m.auc;
  s.norm_precision += m.norm_precision;
  s.precision20 += m.precision20;
  if (m.forecast) {
    ++s.forecast_count;
    s.ade += m.forecast->ade;
    s.fde += m.forecast->fde;
  }
}

void finish(MetricSummary& s) {
  if (s.count > 0) {
    const double n = static_cast<double>(s.count);
    s.auc /= n;
    s.norm_precision /= n;
    s.precision20 /= n;
  }
  if (s.forecast_count > 0) {
    const double n = static_cast<double>(s.forecast_count);
    s.ade /= n;
    s.fde /= n;
  }
}

std::string cell(double v, bool present) {
  if (!present) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

void TrackResult::validate() const {
  if (pred.size() != gt.size() || visible.size() != gt.size()) {
    throw DimensionError("TrackResult '" + name + "': " + std::to_string(pred.size()) +
                         " predictions, " + std::to_string(gt.size()) + " gt boxes, " +
                         std::to_string(visible.size()) + " visibility flags");
  }
  if (forecast_pred.size() != forecast_gt.size()) {
    throw DimensionError("TrackResult '" + name + "': forecast count mismatch");
  }
}

std::size_t TrackResult::visible_frames() const {
  return static_cast<std::size_t>(std::count(visible.begin(), visible.end(), true));
}

double success_auc(const TrackResult& r) {
  const std::size_t n = require_visible(r, "success_auc");
  double total = 0.0;
  for (std::size_t i = 0; i < r.gt.size(); ++i)
    if (r.visible[i]) total += geometry::iou(r.pred[i], r.gt[i]);
  return 100.0 * total / static_cast<double>(n);
}

double success_auc_sweep(const TrackResult& r, std::size_t thresholds) {
  const std::size_t n = require_visible(r, "success_auc_sweep");
  if (thresholds < 2) throw ContractError("success_auc_sweep needs at least 2 thresholds");
  std::vector<double> curve(thresholds);
  for (std::size_t k = 0; k < thresholds; ++k) {
    const double theta = static_cast<double>(k) / static_cast<double>(thresholds - 1);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < r.gt.size(); ++i)
      if (r.visible[i] && geometry::iou(r.pred[i], r.gt[i]) >= theta) ++hits;
    curve[k] = static_cast<double>(hits) / static_cast<double>(n);
  }
  double area = 0.0;
  const double step = 1.0 / static_cast<double>(thresholds - 1);
  for (std::size_t k = 0; k + 1 < thresholds; ++k) area += 0.5 * (curve[k] + curve[k + 1]) * step;
  return 100.0 * area;
}

double precision_at_20px(const TrackResult& r) {
  const std::size_t n = require_visible(r, "precision_at_20px");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < r.gt.size(); ++i)
    if (r.visible[i] && pixel_center_error(r.pred[i], r.gt[i], r.extent) <= kPrecisionThresholdPx)
      ++hits;
  return percent(hits, n);
}

double precision_at_20px_reference(const TrackResult& r) {
  const std::size_t n = require_visible(r, "precision_at_20px_reference");
  std::vector<std::size_t> curve(51, 0);
  for (std::size_t px = 0; px < curve.size(); ++px) {
    for (std::size_t i = 0; i < r.gt.size(); ++i) {
      if (!r.visible[i]) continue;
      if (pixel_center_error(r.pred[i], r.gt[i], r.extent) <= static_cast<double>(px)) ++curve[px];
    }
  }
  return percent(curve[static_cast<std::size_t>(kPrecisionThresholdPx)], n);
}

double normalized_center_error(const BoundingBox& pred, const BoundingBox& gt) {
  const double dx = (pred.cx - gt.cx) / std::max(gt.w, geometry::kMinExtent);
  const double dy = (pred.cy - gt.cy) / std::max(gt.h, geometry::kMinExtent);
  return std::sqrt(dx * dx + dy * dy);
}

double normalized_precision(const TrackResult& r) {
  const std::size_t n = require_visible(r, "normalized_precision");
  std::vector<double> errors;
  errors.reserve(n);
  for (std::size_t i = 0; i < r.gt.size(); ++i)
    if (r.visible[i]) errors.push_back(normalized_center_error(r.pred[i], r.gt[i]));
  std::sort(errors.begin(), errors.end());
  std::size_t hits = 0;
  for (std::size_t k = 0; k < kNormPrecisionThresholds; ++k) {
    const double theta = norm_threshold(k);
    hits += static_cast<std::size_t>(std::upper_bound(errors.begin(), errors.end(), theta) -
                                     errors.begin());
  }
  return percent(hits, n * kNormPrecisionThresholds);
}

double normalized_precision_reference(const TrackResult& r) {
  const std::size_t n = require_visible(r, "normalized_precision_reference");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < kNormPrecisionThresholds; ++k) {
    for (std::size_t i = 0; i < r.gt.size(); ++i) {
      if (r.visible[i] && normalized_center_error(r.pred[i], r.gt[i]) <= norm_threshold(k)) ++hits;
    }
  }
  return percent(hits, n * kNormPrecisionThresholds);
}

losses::DisplacementErrors ade_fde_eval(const std::vector<Tensor>& pred,
                                        const std::vector<Tensor>& gt) {
  if (pred.size() != gt.size()) throw DimensionError("ade_fde_eval: forecast count mismatch");
  if (pred.empty()) throw ContractError("ade_fde_eval: no anchor frame has a full horizon");
  losses::DisplacementErrors sum{0.0, 0.0};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const losses::DisplacementErrors e = losses::displacement_errors(pred[i], gt[i]);
    sum.ade += e.ade;
    sum.fde += e.fde;
  }
  const double n = static_cast<double>(pred.size());
  return {sum.ade / n, sum.fde / n};
}

SequenceMetrics evaluate_sequence(const TrackResult& r) {
  SequenceMetrics m;
  m.name = r.name;
  m.attributes = r.attributes;
  m.auc = success_auc(r);
  m.mean_iou = m.auc / 100.0;
  m.norm_precision = normalized_precision(r);
  m.precision20 = precision_at_20px(r);
  if (!r.forecast_pred.empty()) m.forecast = ade_fde_eval(r.forecast_pred, r.forecast_gt);
  return m;
}

MetricSummary summarize(const std::vector<SequenceMetrics>& seqs) {
  MetricSummary s;
  for (const SequenceMetrics& m : seqs) add_to(s, m);
  finish(s);
  return s;
}

AttributeTable attribute_breakdown(const std::vector<SequenceMetrics>& seqs) {
  AttributeTable t;
  for (const SequenceMetrics& m : seqs) {
    add_to(t.overall, m);
    for (synth::Attribute a : m.attributes) {
      const auto idx = static_cast<std::size_t>(a);
      if (idx >= synth::kAttributeCount) throw ContractError("unknown attribute tag");
      add_to(t.by_attribute[idx], m);
    }
  }
  for (MetricSummary& s : t.by_attribute) finish(s);
  finish(t.overall);
  return t;
}

nlohmann::json to_json(const SequenceMetrics& m) {
  nlohmann::json attrs = nlohmann::json::array();
  for (synth::Attribute a : m.attributes) attrs.push_back(std::string(synth::to_string(a)));
  nlohmann::json j = {{"name", m.name},
                      {"attributes", attrs},
                      {"auc", m.auc},
                      {"norm_precision", m.norm_precision},
                      {"precision20", m.precision20},
                      {"mean_iou", m.mean_iou}};
  if (m.forecast) {
    j["ade"] = m.forecast->ade;
    j["fde"] = m.forecast->fde;
  }
  return j;
}

nlohmann::json to_json(const MetricSummary& s) {
  nlohmann::json j = {{"count", s.count},
                      {"auc", s.auc},
                      {"norm_precision", s.norm_precision},
                      {"precision20", s.precision20}};
  if (s.forecast_count > 0) {
    j["ade"] = s.ade;
    j["fde"] = s.fde;
  }
  return j;
}

nlohmann::json to_json(const AttributeTable& t) {
  nlohmann::json by = nlohmann::json::object();
  for (std::size_t i = 0; i < synth::kAttributeCount; ++i) {
    if (t.by_attribute[i].count == 0) continue;
    by[std::string(synth::to_string(synth::kAllAttributes[i]))] = to_json(t.by_attribute[i]);
  }
  return {{"by_attribute", by}, {"overall", to_json(t.overall)}};
}

std::string attribute_table_csv(const AttributeTable& t) {
  std::ostringstream out;
  out << "metric";
  for (synth::Attribute a : synth::kAllAttributes) out << ',' << synth::to_string(a);
  out << ",All\n";
  struct Row {
    const char* name;
    double MetricSummary::*field;
    bool forecast;
  };
  const Row rows[] = {{"AUC", &MetricSummary::auc, false},
                      {"P_Norm", &MetricSummary::norm_precision, false},
                      {"P@20", &MetricSummary::precision20, false},
                      {"ADE", &MetricSummary::ade, true},
                      {"FDE", &MetricSummary::fde, true}};
  for (const Row& row : rows) {
    out << row.name;
    auto emit = [&](const MetricSummary& s) {
      const bool present = row.forecast ? s.forecast_count > 0 : s.count > 0;
      out << ',' << cell(s.*row.field, present);
    };
    for (const MetricSummary& s : t.by_attribute) emit(s);
    emit(t.overall);
    out << '\n';
  }
  return out.str();
}

}  // namespace cmtrack::metrics
