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
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "cmtrack/errors.hpp"
#include "cmtrack/harness/grad_check.hpp"
#include "cmtrack/model/checkpoint.hpp"
#include "cmtrack/model/model.hpp"
#include "cmtrack/model/priming.hpp"
#include "cmtrack/model/trajectory.hpp"
#include "cmtrack/numerics/ops.hpp"
#include "cmtrack/numerics/random.hpp"

namespace cmtrack::model {
namespace {

using geometry::BoundingBox;
using numerics::Rng;
using numerics::Tape;
using numerics::Tensor;

ModelConfig small_config() {
  return {.num_queries = 4, .dim = 8, .heads = 2, .horizon = 5, .burn_in = 3,
          .feature_dim = 6, .encoder_hidden = 8, .ffn_hidden = 12, .head_hidden = 8};
}

void zero_params(Model& m, std::initializer_list<const char*> names) {
  for (const char* n : names) m.parameters().find(n)->value.fill(0.0);
}

// Centred inside gt = (0.5, 0.5, 0.4, 0.4), so IoU is the area ratio.
BoundingBox box_with_iou(double v) {
  const double side = std::sqrt(0.16 * v);
  return {0.5, 0.5, side, side};
}

const BoundingBox kGt{0.5, 0.5, 0.4, 0.4};

TEST(Priming, TieGoesToLowestIndex) {
  const std::vector<BoundingBox> boxes = {box_with_iou(0.1), box_with_iou(0.7),
                                          box_with_iou(0.3), box_with_iou(0.7)};
  EXPECT_NEAR(geometry::iou(boxes[0], kGt), 0.1, 1e-12);
  EXPECT_NEAR(geometry::iou(boxes[2], kGt), 0.3, 1e-12);
  EXPECT_EQ(best_iou_slot(boxes, kGt), 1u);

  const Tensor q = Tensor::from_rows({{0.0, 0.5}, {1.0, 1.5}, {2.0, 2.5}, {3.0, 3.5}});
  const Tensor swapped = gt_prime_swap(q, boxes, kGt, 0, 3);
  EXPECT_TRUE(swapped.bitwise_equal(
      Tensor::from_rows({{1.0, 1.5}, {0.0, 0.5}, {2.0, 2.5}, {3.0, 3.5}})));
}

TEST(Priming, WinnerAtSlotZeroIsIdentity) {
  const std::vector<BoundingBox> boxes = {box_with_iou(0.9), box_with_iou(0.2)};
  const Tensor q = Tensor::from_rows({{1.0}, {2.0}});
  EXPECT_TRUE(gt_prime_swap(q, boxes, kGt, 1, 3).bitwise_equal(q));
}

TEST(Priming, GatedAfterBurnIn) {
  const std::vector<BoundingBox> boxes = {box_with_iou(0.1), box_with_iou(0.9)};
  const Tensor q = Tensor::from_rows({{1.0}, {2.0}});
  EXPECT_TRUE(gt_prime_swap(q, boxes, kGt, 3, 3).bitwise_equal(q));
  EXPECT_FALSE(decide_prime(boxes, kGt, 3, 3).applied);
  EXPECT_TRUE(decide_prime(boxes, kGt, 2, 3).applied);
}

TEST(Priming, RandomSetsArePermutationsWithMaxAtSlotZero) {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    std::vector<BoundingBox> boxes(n);
    for (auto& b : boxes) {
      b = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.05, 0.5),
           rng.uniform(0.05, 0.5)};
    }
    if (n > 2 && rng.uniform() < 0.3) boxes[n - 1] = boxes[rng.below(n - 1)];
    const BoundingBox gt{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.05, 0.5),
                         rng.uniform(0.05, 0.5)};
    Tensor q({n, 3});
    for (std::size_t i = 0; i < n; ++i) q(i, 0) = static_cast<double>(i);

    const Tensor out = gt_prime_swap(q, boxes, gt, 0, 3);
    const auto winner = static_cast<std::size_t>(out(0, 0));
    double best = -1.0;
    std::size_t first_best = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = geometry::iou(boxes[i], gt);
      if (v > best) best = v, first_best = i;
    }
    EXPECT_EQ(winner, first_best);

    std::vector<double> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(out(i, 0));
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(ids[i], static_cast<double>(i));

    EXPECT_TRUE(gt_prime_swap(q, boxes, gt, 3 + rng.below(10), 3).bitwise_equal(q));
  }
}

TEST(Priming, TapeSwapRoutesGradients) {
  Tape tape;
  const auto q = tape.leaf(Tensor::from_rows({{1.0}, {2.0}, {3.0}}), true);
  const auto swapped = gt_prime_swap(q, PrimeDecision{true, 2});
  const auto weights = tape.constant(Tensor::from_rows({{10.0, 20.0, 30.0}}));
  tape.backward(numerics::sum(numerics::matmul(weights, swapped)));
  EXPECT_TRUE(tape.grad(q).bitwise_equal(Tensor::from_rows({{30.0}, {20.0}, {10.0}})));
}

TEST(Encoder, ZeroWeightsGiveQueryBias) {
  Model m(small_config(), 1);
  zero_params(m, {"encoder.w1", "encoder.w2"});
  Tape tape;
  const auto p = m.bind(tape, false);
  const auto q = m.encode_frame(p, tape.constant(Tensor({1, 6})));
  EXPECT_TRUE(q.value().bitwise_equal(m.parameters().find("encoder.queries")->value));
}

TEST(Encoder, ShapeAndDistinctOutputs) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Model m(small_config(), seed);
    Rng rng(seed + 1000);
    Tape tape;
    const auto p = m.bind(tape, false);
    const auto a = m.encode_frame(p, tape.constant(rng.normal_tensor({1, 6}, 1.0)));
    const auto b = m.encode_frame(p, tape.constant(rng.normal_tensor({1, 6}, 1.0)));
    EXPECT_EQ(a.value().shape(), (numerics::Shape{4, 8}));
    EXPECT_FALSE(a.value().bitwise_equal(b.value()));
  }
}

TEST(Encoder, RejectsWrongFeatureLength) {
  Model m(small_config(), 1);
  Tape tape;
  const auto p = m.bind(tape, false);
  EXPECT_THROW(m.encode_frame(p, tape.constant(Tensor({1, 5}))), DimensionError);
}

TEST(Temporal, ZeroBlockWeightsAreIdentity) {
  Model m(small_config(), 2);
  zero_params(m, {"temporal.attn.wo", "temporal.attn.bo", "temporal.ffn.w2", "temporal.ffn.b2"});
  Rng rng(3);
  Tape tape;
  const auto p = m.bind(tape, false);
  const auto q = tape.constant(rng.normal_tensor({4, 8}, 1.0));
  const auto mem = tape.constant(rng.normal_tensor({4, 8}, 1.0));
  EXPECT_TRUE(m.temporal_refine(p, q, mem).value().bitwise_equal(q.value()));
}

TEST(Temporal, GradientWrtQueriesMatchesFiniteDifferences) {
  Model m(small_config(), 4);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const Tensor mem = rng.normal_tensor({4, 8}, 1.0);
    const Tensor readout = rng.normal_tensor({8, 1}, 1.0);
    harness::GradCase c;
    c.inputs = {rng.normal_tensor({4, 8}, 1.0)};
    c.fn = [&](Tape& t, std::span<const numerics::Var> in) {
      const auto p = m.bind(t, false);
      const auto out = m.temporal_refine(p, in[0], t.constant(mem));
      return numerics::sum(numerics::matmul(out, t.constant(readout)));
    };
    const auto r = harness::check_gradient(c);
    if (!r.rejected) EXPECT_LT(r.rel_error, 1e-4);
  }
}

TEST(Heads, ZeroWeightsGiveMidpoint) {
  Model m(small_config(), 6);
  zero_params(m, {"head.cls.w1", "head.cls.b1", "head.cls.w2", "head.cls.b2", "head.box.w1",
                  "head.box.b1", "head.box.w2", "head.box.b2", "head.traj.w1", "head.traj.b1",
                  "head.traj.w2", "head.traj.b2"});
  Rng rng(7);
  Tape tape;
  const auto p = m.bind(tape, false);
  const HeadOutputs h = m.predict_heads(p, tape.constant(rng.normal_tensor({4, 8}, 1.0)));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(h.logits.value()(i, 0), h.logits.value()(i, 1));
  for (double v : h.boxes.value().values()) EXPECT_EQ(v, 0.5);
  EXPECT_EQ(h.offsets.value().shape(), (numerics::Shape{5, 2}));
  for (double v : h.offsets.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(Heads, BoxesValidForRandomWeights) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Model m(small_config(), seed);
    Rng rng(seed);
    Tape tape;
    const auto p = m.bind(tape, false);
    const Tensor boxes =
        m.predict_heads(p, tape.constant(rng.normal_tensor({4, 8}, 3.0))).boxes.value();
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_TRUE(BoundingBox::from_tensor(boxes, i).valid());
    }
  }
}

TEST(Trajectory, ZeroAndConstantOffsets) {
  const Tensor zero = integrate_offsets({0.3, 0.7}, Tensor({4, 2}));
  for (std::size_t h = 0; h < 4; ++h) {
    EXPECT_EQ(zero(h, 0), 0.3);
    EXPECT_EQ(zero(h, 1), 0.7);
  }
  Tensor step({3, 2});
  for (std::size_t h = 0; h < 3; ++h) step(h, 0) = 0.01;
  const Tensor c = integrate_offsets({0.5, 0.5}, step);
  EXPECT_NEAR(c(0, 0), 0.51, 1e-15);
  EXPECT_NEAR(c(1, 0), 0.52, 1e-15);
  EXPECT_NEAR(c(2, 0), 0.53, 1e-15);
  EXPECT_EQ(c(2, 1), 0.5);
}

TEST(Trajectory, PrefixSumsAreSequential) {
  Rng rng(8);
  const Tensor off = rng.normal_tensor({1000, 2}, 0.01);
  const Tensor c = integrate_offsets({0.5, 0.5}, off);
  for (std::size_t h = 1; h < 1000; ++h) {
    EXPECT_EQ(c(h, 0), c(h - 1, 0) + off(h, 0));
    EXPECT_EQ(c(h, 1), c(h - 1, 1) + off(h, 1));
  }
}

TEST(Trajectory, TelescopingExactOnDyadicGrid) {
  Rng rng(9);
  Tensor off({1000, 2});
  for (double& v : off.values()) v = static_cast<double>(static_cast<int>(rng.below(41)) - 20) / 1024.0;
  const Tensor c = integrate_offsets({0.5, 0.25}, off);
  for (std::size_t h = 1; h < 1000; ++h) {
    EXPECT_EQ(c(h, 0) - c(h - 1, 0), off(h, 0));
    EXPECT_EQ(c(h, 1) - c(h - 1, 1), off(h, 1));
  }
}

TEST(Trajectory, TapeForwardMatchesKernel) {
  Rng rng(10);
  const Tensor off = rng.normal_tensor({10, 2}, 0.02);
  Tape tape;
  const auto start = tape.leaf(Tensor::from_rows({{0.4, 0.6}}), true);
  const auto centers = integrate_offsets(start, tape.leaf(off, true));
  EXPECT_TRUE(centers.value().bitwise_equal(integrate_offsets(Point2{0.4, 0.6}, off)));
  tape.backward(numerics::sum(centers));
  EXPECT_TRUE(tape.grad(start).bitwise_equal(Tensor::from_rows({{10.0, 10.0}})));
}

TEST(Memory, UpdateCopiesBitsAndKeepsSize) {
  TemporalMemory mem(4, 8);
  const std::size_t bytes = mem.bytes();
  EXPECT_EQ(bytes, 4u * 8u * 8u);
  Rng rng(11);
  for (int t = 0; t < 1000; ++t) {
    const Tensor refined = rng.normal_tensor({4, 8}, 1.0);
    mem.update(refined);
    EXPECT_TRUE(mem.state().bitwise_equal(refined));
    EXPECT_EQ(mem.bytes(), bytes);
  }
  EXPECT_THROW(mem.update(Tensor({3, 8})), DimensionError);
}

TEST(Step, PrimingPlacesBestQueryFirst) {
  Model m(small_config(), 12);
  Rng rng(13);
  const Tensor features = rng.normal_tensor({1, 6}, 1.0);
  Tape tape;
  const auto p = m.bind(tape, false);
  const QuerySet raw = m.encode_queries(p, tape.constant(features));
  const BoundingBox gt = raw.boxes[2];
  const StepResult r = m.step(p, features, &gt, 0, tape.constant(Tensor({4, 8})), StepMode::kTrain);
  EXPECT_TRUE(r.prime.applied);
  EXPECT_EQ(r.prime.slot, best_iou_slot(raw.boxes, gt));
  EXPECT_EQ(r.encoded.boxes[0], raw.boxes[r.prime.slot]);
}

TEST(Step, DeterministicAcrossRuns) {
  auto run = [] {
    Model m(small_config(), 14);
    Rng rng(15);
    TemporalMemory mem(4, 8);
    std::vector<Tensor> out;
    for (int t = 0; t < 5; ++t) {
      Tape tape;
      const auto p = m.bind(tape, false);
      const BoundingBox gt{0.5, 0.5, 0.2, 0.2};
      const StepResult r = m.step(p, rng.normal_tensor({1, 6}, 1.0), t == 0 ? &gt : nullptr, t,
                                  tape.constant(mem.state()), StepMode::kInference);
      out.push_back(r.heads.boxes.value());
      mem.update(r.refined.value());
    }
    return out;
  };
  const auto a = run();
  const auto b = run();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].bitwise_equal(b[i]));
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto path = std::filesystem::temp_directory_path() / "cmtrack_model_test.ckpt";
  Model m(small_config(), 16);
  save_checkpoint(path, m);
  const Model loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.config(), m.config());
  EXPECT_TRUE(loaded.parameters().bitwise_equal(m.parameters()));
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsGarbage) {
  const auto path = std::filesystem::temp_directory_path() / "cmtrack_model_test_bad.ckpt";
  { std::ofstream(path) << "not a checkpoint"; }
  EXPECT_THROW(load_checkpoint(path), ParseError);
  std::filesystem::remove(path);
}

TEST(Config, RejectsIndivisibleHeads) {
  ModelConfig c = small_config();
  c.heads = 3;
  EXPECT_THROW(Model(c, 0), ContractError);
}

}  // namespace
}  // namespace cmtrack::model
