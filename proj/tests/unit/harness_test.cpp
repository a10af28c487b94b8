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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cmtrack/errors.hpp"
#include "cmtrack/harness/cli.hpp"
#include "cmtrack/harness/config.hpp"
#include "cmtrack/harness/evaluate.hpp"
#include "cmtrack/harness/objective.hpp"
#include "cmtrack/harness/optimizer.hpp"
#include "cmtrack/harness/profile.hpp"
#include "cmtrack/harness/train.hpp"
#include "cmtrack/model/checkpoint.hpp"
#include "cmtrack/numerics/ops.hpp"
#include "cmtrack/numerics/random.hpp"

namespace cmtrack::harness {
namespace {

namespace fs = std::filesystem;
using model::Model;
using model::ParamGroup;
using model::ParameterSet;
using numerics::Tape;
using numerics::Tensor;

model::ModelConfig small_model() {
  return {.num_queries = 3, .dim = 8, .heads = 2, .horizon = 3, .burn_in = 3,
          .feature_dim = 6, .encoder_hidden = 8, .ffn_hidden = 12, .head_hidden = 8};
}

RunConfig tiny_run() {
  RunConfig c;
  c.model = small_model();
  c.data.prototype.length = 20;
  c.data.prototype.feature_dim = 6;
  c.data.train_count = 2;
  c.data.val_count = 1;
  c.data.test_count = 1;
  c.train.max_iterations = 3;
  c.train.warmup_iterations = 1;
  c.train.log_every = 1;
  c.train.seed = 5;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cmtrack_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ParameterSet scalar_params(double value, double grad) {
  ParameterSet ps;
  ps.add("p", Tensor::scalar(value), ParamGroup::kHeads);
  ps[0].grad = Tensor::scalar(grad);
  return ps;
}

TEST(AdamW, ZeroGradZeroDecayIsNoop) {
  ParameterSet ps = scalar_params(1.25, 0.0);
  AdamW opt({.weight_decay = 0.0});
  opt.step(ps, 0.1);
  EXPECT_EQ(ps[0].value.item(), 1.25);
}

TEST(AdamW, ZeroGradDecayScalesWeights) {
  ParameterSet ps = scalar_params(2.0, 0.0);
  AdamW opt({.weight_decay = 0.01});
  opt.step(ps, 0.1);
  EXPECT_EQ(ps[0].value.item(), 2.0 * (1.0 - 0.1 * 0.01));
}

TEST(AdamW, GroupsUseTheirOwnRate) {
  ParameterSet ps;
  ps.add("enc", Tensor::scalar(1.0), ParamGroup::kEncoder);
  ps.add("head", Tensor::scalar(1.0), ParamGroup::kHeads);
  ps[0].grad = Tensor::scalar(1.0);
  ps[1].grad = Tensor::scalar(1.0);
  AdamW opt({.weight_decay = 0.0});
  opt.step(ps, 1e-2, 1e-3);
  // First bias-corrected step is lr * g / (|g| + eps).
  EXPECT_NEAR(1.0 - ps[0].value.item(), 1e-3, 1e-10);
  EXPECT_NEAR(1.0 - ps[1].value.item(), 1e-2, 1e-10);
}

TEST(AdamW, ScalarQuadraticConverges) {
  ParameterSet ps = scalar_params(0.0, 0.0);
  AdamW opt({.weight_decay = 0.0});
  for (std::size_t i = 0; i < 500; ++i) {
    ps[0].grad = Tensor::scalar(2.0 * (ps[0].value.item() - 3.0));
    opt.step(ps, lr_schedule(i, 0, 500, 0.1));
  }
  EXPECT_NEAR(ps[0].value.item(), 3.0, 1e-6);
}

TEST(AdamW, NanGradientNamesParameter) {
  ParameterSet ps;
  ps.add("temporal.attn.wq", Tensor::scalar(1.0), ParamGroup::kHeads);
  ps[0].grad = Tensor::scalar(std::nan(""));
  AdamW opt({});
  try {
    opt.step(ps, 0.1);
    FAIL() << "expected TrainingAbort";
  } catch (const TrainingAbort& e) {
    EXPECT_NE(std::string(e.what()).find("temporal.attn.wq"), std::string::npos);
  }
}

TEST(Schedule, Examples) {
  EXPECT_EQ(lr_schedule(0, 1000, 5000, 1e-4), 0.0);
  EXPECT_EQ(lr_schedule(500, 1000, 5000, 1e-4), 0.5e-4);
  EXPECT_EQ(lr_schedule(1000, 1000, 5000, 1e-4), 1e-4);
  EXPECT_NEAR(lr_schedule(3000, 1000, 5000, 1e-4), 0.5e-4, 1e-18);
  EXPECT_EQ(lr_schedule(5000, 1000, 5000, 1e-4), 0.0);
}

TEST(Schedule, ContinuousAndBounded) {
  double prev = lr_schedule(0, 100, 1000, 1.0);
  for (std::size_t i = 1; i <= 1000; ++i) {
    const double lr = lr_schedule(i, 100, 1000, 1.0);
    EXPECT_GE(lr, 0.0);
    EXPECT_LE(lr, 1.0);
    EXPECT_LT(std::abs(lr - prev), 0.011);
    prev = lr;
  }
}

TEST(Clip, BelowThresholdUnchanged) {
  ParameterSet ps = scalar_params(0.0, 0.05);
  EXPECT_EQ(clip_gradients(ps, 0.1), 0.05);
  EXPECT_EQ(ps[0].grad.item(), 0.05);
}

TEST(Clip, ScalesToMaxNormPreservingDirection) {
  ParameterSet ps;
  ps.add("a", Tensor::from_rows({{0.6}}), ParamGroup::kHeads);
  ps.add("b", Tensor::from_rows({{0.0}}), ParamGroup::kHeads);
  ps[0].grad = Tensor::from_rows({{0.6}});
  ps[1].grad = Tensor::from_rows({{-0.8}});
  EXPECT_NEAR(clip_gradients(ps, 0.1), 1.0, 1e-15);
  EXPECT_NEAR(ps.grad_norm(), 0.1, 1e-15);
  EXPECT_NEAR(ps[0].grad.item(), 0.06, 1e-15);
  EXPECT_NEAR(ps[1].grad.item(), -0.08, 1e-15);
}

TEST(Truncation, DetachedMemoryBlocksEarlierFrames) {
  const RunConfig cfg = tiny_run();
  const auto data = generate_split(cfg.data, synth::Split::kTrain);
  const Model m(cfg.model, 1);
  for (bool detach : {true, false}) {
    Tape tape;
    const auto p = m.bind(tape, true);
    const auto& rec = data[0];
    ObjectiveOptions opts;
    opts.detach_memory = detach;
    const auto s0 = m.step(p, rec.frames[0].features, &rec.frames[0].gt, 0,
                           tape.constant(Tensor({3, 8})), model::StepMode::kTrain);
    const auto mem = detach ? numerics::detach(s0.refined) : s0.refined;
    const auto s1 = m.step(p, rec.frames[1].features, &rec.frames[1].gt, 1, mem,
                           model::StepMode::kTrain);
    const Tensor prev = s0.refined.value().row_copy(0);
    const auto terms = frame_terms(m, s1, rec, 1, 1, &prev, opts);
    tape.backward(losses::total_loss(terms, opts.weights));
    const double g = numerics::max_abs(tape.grad(s0.refined));
    if (detach) {
      EXPECT_EQ(g, 0.0);
    } else {
      EXPECT_GT(g, 0.0);
    }
  }
}

TEST(Truncation, PerFrameAndPerClipGradientsAgree) {
  const RunConfig cfg = tiny_run();
  const auto data = generate_split(cfg.data, synth::Split::kTrain);
  ObjectiveOptions opts;
  opts.weights.cos = 0.5;
  for (std::size_t start : {0u, 5u, 10u}) {
    Model a(cfg.model, 2);
    Model b(cfg.model, 2);
    a.parameters().zero_grads();
    b.parameters().zero_grads();
    const auto va = accumulate_clip_gradients(a, data[1], start, 10, opts, BackwardMode::kPerClip);
    const auto vb = accumulate_clip_gradients(b, data[1], start, 10, opts, BackwardMode::kPerFrame);
    for (std::size_t k = 0; k < losses::kTermCount; ++k) {
      EXPECT_NEAR(va.values[k], vb.values[k], 1e-12);
    }
    for (std::size_t i = 0; i < a.parameters().size(); ++i) {
      EXPECT_LE(numerics::max_abs_diff(a.parameters()[i].grad, b.parameters()[i].grad), 1e-12)
          << a.parameters()[i].name;
    }
  }
}

TEST(Train, CheckpointReproducesForwardOutputs) {
  const RunConfig cfg = tiny_run();
  const auto data = generate_split(cfg.data, synth::Split::kTrain);
  RunConfig one = cfg;
  one.train.max_iterations = 1;
  one.train.warmup_iterations = 0;
  const TrainResult r = train(one, data);
  ASSERT_EQ(r.log.size(), 1u);
  const fs::path path = scratch("one.ckpt");
  model::save_checkpoint(path, r.model);
  const Model loaded = model::load_checkpoint(path);
  ModelTracker ta(r.model);
  ModelTracker tb(loaded);
  const auto ra = track_sequence(ta, data[0], cfg.model.horizon);
  const auto rb = track_sequence(tb, data[0], cfg.model.horizon);
  ASSERT_EQ(ra.pred.size(), rb.pred.size());
  for (std::size_t t = 0; t < ra.pred.size(); ++t) EXPECT_EQ(ra.pred[t], rb.pred[t]);
  fs::remove(path);
}

TEST(Train, SameSeedSameManifest) {
  const RunConfig cfg = tiny_run();
  const auto data = generate_split(cfg.data, synth::Split::kTrain);
  const TrainResult a = train(cfg, data);
  const TrainResult b = train(cfg, data);
  EXPECT_EQ(train_manifest(cfg, a).dump(), train_manifest(cfg, b).dump());
  EXPECT_TRUE(a.model.parameters().bitwise_equal(b.model.parameters()));
  RunConfig other = cfg;
  other.train.seed = 6;
  EXPECT_FALSE(train(other, data).model.parameters().bitwise_equal(a.model.parameters()));
}

TEST(Train, WarmupMustBeShorterThanRun) {
  RunConfig cfg = tiny_run();
  cfg.train.warmup_iterations = 3;
  const auto data = generate_split(cfg.data, synth::Split::kTrain);
  EXPECT_THROW(train(cfg, data), ContractError);
}

TEST(Train, ClipEnumeration) {
  const RunConfig cfg = tiny_run();
  const auto data = generate_split(cfg.data, synth::Split::kTrain);
  const auto clips = enumerate_clips(data, 10, 5);
  ASSERT_EQ(clips.size(), 6u);
  EXPECT_EQ(clips[2].start, 10u);
  EXPECT_EQ(clips[3].sequence, 1u);
}

TEST(Evaluate, OracleScoresPerfectly) {
  const RunConfig cfg = tiny_run();
  const auto data = generate_split(cfg.data, synth::Split::kTest);
  OracleTracker oracle(cfg.model.horizon);
  const EvalReport r = evaluate(oracle, data, cfg.model.horizon);
  EXPECT_EQ(r.table.overall.auc, 100.0);
  EXPECT_EQ(r.table.overall.precision20, 100.0);
  EXPECT_EQ(r.table.overall.ade, 0.0);
}

TEST(Evaluate, ShortSequencesSkipForecastsWithNotice) {
  synth::SequenceSpec spec;
  spec.length = 5;
  spec.feature_dim = 6;
  StaticBoxTracker st(10);
  const EvalReport r = evaluate(st, {synth::generate_sequence(spec)}, 10);
  EXPECT_FALSE(r.sequences[0].forecast.has_value());
  EXPECT_EQ(r.notices.size(), 1u);
}

TEST(Evaluate, ModelTrackerMemoryStaysConstant) {
  const Model m(small_model(), 3);
  ModelTracker tracker(m);
  synth::SequenceSpec spec;
  spec.length = 200;
  spec.feature_dim = 6;
  const auto rec = synth::generate_sequence(spec);
  tracker.reset(rec, rec.frames[0].gt);
  const std::size_t bytes = tracker.memory().bytes();
  for (std::size_t t = 0; t < rec.length(); ++t) {
    tracker.track(t, rec.frames[t]);
    EXPECT_EQ(tracker.memory().bytes(), bytes);
  }
}

TEST(Profile, ConstantStateAndGrowingContrast) {
  const Model m(small_model(), 4);
  const std::vector<std::size_t> lengths = {10, 100, 1000};
  const auto rows = profile_memory(m, lengths, true, 7);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.state_bytes, 3u * 8u * 8u);
    EXPECT_EQ(r.peak_bytes, rows[0].peak_bytes);
  }
  const std::vector<std::size_t> short_lengths = {10, 20, 40};
  const auto contrast = profile_memory(m, short_lengths, false, 7);
  EXPECT_LT(contrast[0].peak_bytes, contrast[1].peak_bytes);
  EXPECT_LT(contrast[1].peak_bytes, contrast[2].peak_bytes);

  const std::string csv = memory_profile_csv(rows);
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "T,state_bytes,peak_bytes");
  EXPECT_EQ(lines[1].substr(0, 3), "10,");
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  RunConfig c = tiny_run();
  c.weights.cos = 0.25;
  EXPECT_EQ(run_config_from_json(to_json(c)), c);
  nlohmann::json j = to_json(c);
  j["train"]["learning_rate"] = 1.0;
  EXPECT_THROW(run_config_from_json(j), ParseError);
}

TEST(Config, FeatureWidthFollowsModel) {
  const nlohmann::json j = {{"model", {{"feature_dim", 12}}}};
  const RunConfig c = run_config_from_json(j);
  EXPECT_EQ(c.data.prototype.feature_dim, 12u);
  c.validate();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (out_text != nullptr) *out_text = out.str();
  return code;
}

fs::path write_tiny_config(const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path p = dir / "config.json";
  std::ofstream(p) << to_json(tiny_run()).dump(2);
  return p;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}), kExitUsage);
  EXPECT_EQ(cli({"eval"}), kExitUsage);
  EXPECT_EQ(cli({"train", "--bogus"}), kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}), kExitUsage);
  EXPECT_EQ(cli({"train", "--config", "/nonexistent/config.json"}), kExitUsage);
}

TEST(Cli, GradCheckPasses) {
  const fs::path dir = scratch("cli_grad");
  EXPECT_EQ(cli({"grad-check", "--configs", "5", "--out", dir.string()}), kExitOk);
  fs::remove_all(dir);
}

TEST(Cli, TrainEvalProfileRoundTrip) {
  const fs::path dir = scratch("cli_run");
  const fs::path cfg = write_tiny_config(dir);
  const std::string train_out = (dir / "train").string();
  ASSERT_EQ(cli({"train", "--config", cfg.string(), "--out", train_out}), kExitOk);
  const fs::path ckpt = dir / "train" / "checkpoint.bin";
  ASSERT_TRUE(fs::exists(ckpt));
  EXPECT_TRUE(fs::exists(dir / "train" / "losses.csv"));
  EXPECT_TRUE(fs::exists(dir / "train" / "manifest.json"));

  ASSERT_EQ(cli({"eval", "--config", cfg.string(), "--checkpoint", ckpt.string(), "--out",
                 (dir / "eval").string()}),
            kExitOk);
  EXPECT_TRUE(fs::exists(dir / "eval" / "metrics.csv"));

  ASSERT_EQ(cli({"profile-mem", "--config", cfg.string(), "--checkpoint", ckpt.string(), "--T",
                 "10,100,1000", "--out", (dir / "profile").string()}),
            kExitOk);
  const std::string csv = slurp(dir / "profile" / "memory_profile.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);

  ASSERT_EQ(cli({"gen-data", "--config", cfg.string(), "--out", (dir / "data").string()}),
            kExitOk);
  EXPECT_TRUE(fs::exists(dir / "data"));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace cmtrack::harness
