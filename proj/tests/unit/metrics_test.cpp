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

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cmtrack/errors.hpp"
#include "cmtrack/losses/displacement.hpp"
#include "cmtrack/metrics/metrics.hpp"
#include "cmtrack/numerics/random.hpp"

namespace cmtrack::metrics {
namespace {

using geometry::BoundingBox;
using numerics::Rng;
using numerics::Tensor;
using synth::Attribute;

TrackResult constant_result(std::size_t n, BoundingBox gt, BoundingBox pred) {
  TrackResult r;
  r.name = "seq";
  r.gt.assign(n, gt);
  r.pred.assign(n, pred);
  r.visible.assign(n, true);
  return r;
}

TrackResult random_result(Rng& rng, std::size_t n) {
  TrackResult r;
  r.name = "rand";
  for (std::size_t i = 0; i < n; ++i) {
    const BoundingBox gt{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.05, 0.3),
                         rng.uniform(0.05, 0.3)};
    const double jitter = rng.uniform(0.0, 0.2);
    const BoundingBox pred{gt.cx + rng.normal(0.0, jitter), gt.cy + rng.normal(0.0, jitter),
                           gt.w * rng.uniform(0.5, 1.5), gt.h * rng.uniform(0.5, 1.5)};
    r.gt.push_back(gt);
    r.pred.push_back(pred);
    r.visible.push_back(rng.uniform() > 0.1);
  }
  r.visible[0] = true;
  return r;
}

TEST(Success, PerfectAndDisjoint) {
  const BoundingBox a{0.3, 0.3, 0.1, 0.1};
  EXPECT_EQ(success_auc(constant_result(10, a, a)), 100.0);
  EXPECT_EQ(success_auc(constant_result(10, a, {0.8, 0.8, 0.1, 0.1})), 0.0);
}

TEST(Success, HalfAndHalf) {
  const BoundingBox a{0.3, 0.3, 0.1, 0.1};
  TrackResult r = constant_result(10, a, a);
  for (std::size_t i = 0; i < 5; ++i) r.pred[i] = {0.8, 0.8, 0.1, 0.1};
  EXPECT_DOUBLE_EQ(success_auc(r), 50.0);
  // theta = 0 counts the misses too: half a trapezoid step above 50.
  EXPECT_NEAR(success_auc_sweep(r), 50.25, 1e-12);
}

TEST(Success, InvisibleFramesExcluded) {
  const BoundingBox a{0.3, 0.3, 0.1, 0.1};
  TrackResult r = constant_result(4, a, a);
  r.pred[3] = {0.8, 0.8, 0.1, 0.1};
  r.visible[3] = false;
  EXPECT_EQ(success_auc(r), 100.0);
  r.visible.assign(4, false);
  EXPECT_THROW(success_auc(r), ContractError);
}

TEST(Success, SweepAgreesWithMeanIou) {
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    const TrackResult r = random_result(rng, 20 + rng.below(200));
    EXPECT_LE(std::abs(success_auc(r) - success_auc_sweep(r)), 0.5);
  }
}

TEST(Precision, BoundaryIsInclusive) {
  TrackResult r = constant_result(4, {0.5, 0.5, 0.1, 0.1}, {0.5, 0.5, 0.1, 0.1});
  r.extent = {1024.0, 1024.0};
  EXPECT_EQ(precision_at_20px(r), 100.0);
  r.pred.assign(4, {0.5 + 20.0 / 1024.0, 0.5, 0.1, 0.1});
  EXPECT_EQ(precision_at_20px(r), 100.0);
  EXPECT_EQ(precision_at_20px_reference(r), 100.0);
  r.pred.assign(4, {0.5 + 21.0 / 1024.0, 0.5, 0.1, 0.1});
  EXPECT_EQ(precision_at_20px(r), 0.0);
  EXPECT_EQ(precision_at_20px_reference(r), 0.0);
}

TEST(Precision, MatchesReferenceExactly) {
  Rng rng(32);
  for (int i = 0; i < 100; ++i) {
    const TrackResult r = random_result(rng, 20 + rng.below(200));
    EXPECT_EQ(precision_at_20px(r), precision_at_20px_reference(r));
    EXPECT_EQ(normalized_precision(r), normalized_precision_reference(r));
  }
}

TEST(NormalizedPrecision, ExactCentresAndQuarterError) {
  const BoundingBox gt{0.5, 0.5, 0.5, 0.25};
  EXPECT_EQ(normalized_precision(constant_result(6, gt, gt)), 100.0);
  const TrackResult r = constant_result(6, gt, {0.625, 0.5, 0.5, 0.25});
  EXPECT_EQ(normalized_center_error(r.pred[0], gt), 0.25);
  EXPECT_DOUBLE_EQ(normalized_precision(r), 50.0);
  EXPECT_DOUBLE_EQ(normalized_precision_reference(r), 50.0);
}

TEST(NormalizedPrecision, ScaleFree) {
  Rng rng(33);
  for (int i = 0; i < 100; ++i) {
    const BoundingBox gt{0.5, 0.5, rng.uniform(0.02, 0.2), rng.uniform(0.02, 0.2)};
    const double ex = rng.normal(0.0, 0.02);
    const double ey = rng.normal(0.0, 0.02);
    const TrackResult small = constant_result(3, gt, {gt.cx + ex, gt.cy + ey, gt.w, gt.h});
    const BoundingBox big{0.5, 0.5, 2.0 * gt.w, 2.0 * gt.h};
    const TrackResult large =
        constant_result(3, big, {0.5 + 2.0 * ex, 0.5 + 2.0 * ey, big.w, big.h});
    EXPECT_EQ(normalized_precision(small), normalized_precision(large));
  }
}

TEST(Metrics, MonotoneInQuality) {
  Rng rng(34);
  for (int i = 0; i < 50; ++i) {
    TrackResult r = random_result(rng, 50);
    TrackResult better = r;
    for (std::size_t f = 0; f < r.pred.size(); ++f) {
      better.pred[f] = {0.5 * (r.pred[f].cx + r.gt[f].cx), 0.5 * (r.pred[f].cy + r.gt[f].cy),
                        r.gt[f].w, r.gt[f].h};
    }
    EXPECT_GE(success_auc(better), success_auc(r) - 1e-9);
    EXPECT_GE(precision_at_20px(better), precision_at_20px(r));
    EXPECT_GE(normalized_precision(better), normalized_precision(r));
  }
}

TEST(Metrics, FrameOrderInvariant) {
  Rng rng(35);
  TrackResult r = random_result(rng, 80);
  TrackResult rev = r;
  std::reverse(rev.pred.begin(), rev.pred.end());
  std::reverse(rev.gt.begin(), rev.gt.end());
  std::vector<bool> vis(r.visible.rbegin(), r.visible.rend());
  rev.visible = vis;
  EXPECT_NEAR(success_auc(rev), success_auc(r), 1e-12);
  EXPECT_EQ(precision_at_20px(rev), precision_at_20px(r));
  EXPECT_EQ(normalized_precision(rev), normalized_precision(r));
}

TEST(Forecast, HandBuiltTwelveFrames) {
  // Centres move +1/64 in x per frame. Anchor 0 predicts no motion; anchor 1
  // is exact.
  const std::size_t h = 10;
  auto centres = [&](std::size_t t) {
    Tensor c({h, 2});
    for (std::size_t k = 0; k < h; ++k) {
      c(k, 0) = 0.25 + static_cast<double>(t + k + 1) / 64.0;
      c(k, 1) = 0.5;
    }
    return c;
  };
  Tensor still({h, 2});
  for (std::size_t k = 0; k < h; ++k) still(k, 0) = 0.25, still(k, 1) = 0.5;
  const auto e = ade_fde_eval({still, centres(1)}, {centres(0), centres(1)});
  // Anchor 0: errors k/64 for k = 1..10, so ADE 5.5/64 and FDE 10/64.
  EXPECT_DOUBLE_EQ(e.ade, 0.5 * 5.5 / 64.0);
  EXPECT_DOUBLE_EQ(e.fde, 0.5 * 10.0 / 64.0);
  EXPECT_THROW(ade_fde_eval({}, {}), ContractError);
}

TEST(Forecast, SingleAnchorEqualsKernelBitwise) {
  Rng rng(36);
  for (int i = 0; i < 50; ++i) {
    const Tensor p = rng.uniform_tensor({10, 2}, 0.0, 1.0);
    const Tensor g = rng.uniform_tensor({10, 2}, 0.0, 1.0);
    const auto a = ade_fde_eval({p}, {g});
    const auto k = losses::displacement_errors(p, g);
    EXPECT_EQ(a.ade, k.ade);
    EXPECT_EQ(a.fde, k.fde);
  }
}

TEST(Breakdown, SingleAndPairs) {
  SequenceMetrics a{.name = "a", .auc = 60.0, .norm_precision = 50.0, .precision20 = 70.0,
                    .attributes = {Attribute::kFM}};
  SequenceMetrics b{.name = "b", .auc = 80.0, .norm_precision = 30.0, .precision20 = 90.0,
                    .attributes = {Attribute::kFM, Attribute::kOCC}};
  const AttributeTable single = attribute_breakdown({a});
  const auto& fm = single.by_attribute[static_cast<std::size_t>(Attribute::kFM)];
  EXPECT_EQ(fm.count, 1u);
  EXPECT_EQ(fm.auc, 60.0);
  const AttributeTable pair = attribute_breakdown({a, b});
  EXPECT_EQ(pair.by_attribute[static_cast<std::size_t>(Attribute::kFM)].auc, 70.0);
  EXPECT_EQ(pair.by_attribute[static_cast<std::size_t>(Attribute::kOCC)].auc, 80.0);
  EXPECT_EQ(pair.by_attribute[static_cast<std::size_t>(Attribute::kSC)].count, 0u);
  EXPECT_EQ(pair.overall.count, 2u);
}

TEST(Breakdown, MatchesBruteForceRegrouping) {
  Rng rng(37);
  std::vector<SequenceMetrics> seqs;
  for (int i = 0; i < 40; ++i) {
    SequenceMetrics m;
    m.name = "s" + std::to_string(i);
    m.auc = rng.uniform(0.0, 100.0);
    m.norm_precision = rng.uniform(0.0, 100.0);
    m.precision20 = rng.uniform(0.0, 100.0);
    for (Attribute a : synth::kAllAttributes) {
      if (rng.uniform() < 0.3) m.attributes.push_back(a);
    }
    seqs.push_back(m);
  }
  const AttributeTable table = attribute_breakdown(seqs);
  for (std::size_t k = 0; k < synth::kAttributeCount; ++k) {
    std::vector<SequenceMetrics> members;
    for (const auto& s : seqs) {
      if (std::find(s.attributes.begin(), s.attributes.end(), synth::kAllAttributes[k]) !=
          s.attributes.end()) {
        members.push_back(s);
      }
    }
    const MetricSummary brute = summarize(members);
    EXPECT_EQ(table.by_attribute[k].count, brute.count);
    EXPECT_EQ(table.by_attribute[k].auc, brute.auc);
    EXPECT_EQ(table.by_attribute[k].precision20, brute.precision20);
  }
}

TEST(Breakdown, CsvLayout) {
  SequenceMetrics a{.name = "a", .auc = 60.0, .attributes = {Attribute::kUE}};
  const std::string csv = attribute_table_csv(attribute_breakdown({a}));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "metric,FM,OCC,SC,IC,NT,BC,DF,UE,All");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

TEST(TrackResult, MisalignedLengthsRejected) {
  TrackResult r = constant_result(3, {0.5, 0.5, 0.1, 0.1}, {0.5, 0.5, 0.1, 0.1});
  r.visible.pop_back();
  EXPECT_THROW(r.validate(), DimensionError);
}

}  // namespace
}  // namespace cmtrack::metrics
