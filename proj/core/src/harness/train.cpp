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

#include "cmtrack/harness/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cmtrack/errors.hpp"
#include "cmtrack/harness/objective.hpp"
#include "cmtrack/harness/optimizer.hpp"
#include "cmtrack/numerics/memory_probe.hpp"
#include "cmtrack/numerics/random.hpp"

namespace cmtrack::harness {

using losses::LossValues;
using losses::LossWeights;
using losses::Term;
using numerics::MemoryProbe;

namespace {

constexpr double kBalanceMomentum = 0.9;

// Per-term gradient norms on one clip, each from its own backward sweep.
std::array<double, losses::kTermCount> term_grad_norms(const model::Model& model,
                                                       const synth::SequenceRecord& rec,
                                                       std::size_t start, std::size_t length,
                                                       const ObjectiveOptions& opts) {
  numerics::Tape tape;
  const model::BoundParams p = model.bind(tape, true);
  const ClipPass pass = run_clip(model, p, rec, start, length, opts);
  std::array<double, losses::kTermCount> norms{};
  for (std::size_t i = 0; i < losses::kTermCount; ++i) {
    const numerics::Var term = pass.term_sums.values[i];
    if (!term.requires_grad()) continue;
    tape.reset_grads();
    tape.backward(term);
    double sq = 0.0;
    for (const numerics::Var& leaf : p.leaves) {
      if (!tape.has_grad(leaf)) continue;
      for (double g : tape.grad(leaf).values()) sq += g * g;
    }
    norms[i] = std::sqrt(sq);
  }
  return norms;
}

// Weight_i = base_i * mean(norm) / norm_i over active terms.
LossWeights balanced_weights(const LossWeights& base, const std::array<double, losses::kTermCount>& norms) {
  double mean = 0.0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < losses::kTermCount; ++i) {
    if (base[static_cast<Term>(i)] > 0.0 && norms[i] > 0.0) {
      mean += norms[i];
      ++active;
    }
  }
  if (active == 0) return base;
  mean /= static_cast<double>(active);
  LossWeights w = base;
  for (std::size_t i = 0; i < losses::kTermCount; ++i) {
    const Term t = static_cast<Term>(i);
    if (base[t] > 0.0 && norms[i] > 0.0) w[t] = base[t] * mean / norms[i];
  }
  return w;
}

}  // namespace

std::vector<ClipRef> enumerate_clips(const std::vector<synth::SequenceRecord>& data,
                                     std::size_t length, std::size_t stride) {
  std::vector<ClipRef> clips;
  for (std::size_t s = 0; s < data.size(); ++s) {
    for (std::size_t start = 0; start + length <= data[s].length(); start += stride)
      clips.push_back({s, start});
  }
  return clips;
}

std::size_t total_iterations(const TrainConfig& c, std::size_t clip_count) {
  if (c.max_iterations > 0) return c.max_iterations;
  const std::size_t per_epoch = (clip_count + c.batch_size - 1) / c.batch_size;
  return per_epoch * c.epochs;
}

TrainResult train(const RunConfig& config, const std::vector<synth::SequenceRecord>& data,
                  const ProgressFn& progress) {
  config.validate();
  const TrainConfig& tc = config.train;
  const auto started = std::chrono::steady_clock::now();

  const std::vector<ClipRef> clips = enumerate_clips(data, tc.clip_length, tc.clip_stride);
  if (clips.empty()) throw ContractError("training data holds no clip of the configured length");
  for (const synth::SequenceRecord& rec : data) {
    for (const synth::Frame& f : rec.frames) {
      if (f.features.cols() != config.model.feature_dim)
        throw DimensionError("sequence '" + rec.name + "' has features " +
                             f.features.shape().to_string() + ", model expects feature_dim " +
                             std::to_string(config.model.feature_dim));
    }
  }
  const std::size_t total = total_iterations(tc, clips.size());
  if (tc.warmup_iterations >= total && tc.warmup_iterations > 0) {
    throw ContractError("warmup_iterations (" + std::to_string(tc.warmup_iterations) +
                        ") must be below the total iteration count (" + std::to_string(total) +
                        ")");
  }

  TrainResult result{model::Model(config.model, numerics::mix_seed(tc.seed, 0)), {}, config.weights,
                     0.0};
  model::Model& model = result.model;
  AdamW optimizer({tc.beta1, tc.beta2, tc.epsilon, tc.weight_decay});
  numerics::Rng shuffle_rng(numerics::mix_seed(tc.seed, 1));

  ObjectiveOptions opts;
  opts.weights = config.weights;
  opts.supervise_invisible = tc.supervise_invisible;

  std::array<double, losses::kTermCount> running_norms{};
  bool have_norms = false;

  std::vector<std::size_t> order(clips.size());
  std::size_t cursor = order.size();
  result.log.reserve(total);
  for (std::size_t iter = 0; iter < total; ++iter) {
    MemoryProbe::reset_peak();
    const std::int64_t base_bytes = MemoryProbe::live_bytes();

    std::vector<ClipRef> batch;
    while (batch.size() < tc.batch_size) {
      if (cursor == order.size()) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        // Fisher-Yates with the run's own generator keeps shuffles portable.
        for (std::size_t i = order.size(); i > 1; --i)
          std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        cursor = 0;
      }
      batch.push_back(clips[order[cursor++]]);
    }

    if (tc.balance_losses && iter % tc.balance_every == 0) {
      const ClipRef& c = batch.front();
      const auto norms = term_grad_norms(model, data[c.sequence], c.start, tc.clip_length, opts);
      for (std::size_t i = 0; i < losses::kTermCount; ++i) {
        running_norms[i] = have_norms
                               ? kBalanceMomentum * running_norms[i] + (1.0 - kBalanceMomentum) * norms[i]
                               : norms[i];
      }
      have_norms = true;
      opts.weights = balanced_weights(config.weights, running_norms);
    }

    model.parameters().zero_grads();
    LossValues sums;
    for (const ClipRef& c : batch) {
      const LossValues v = accumulate_clip_gradients(model, data[c.sequence], c.start,
                                                     tc.clip_length, opts, BackwardMode::kPerClip);
      for (std::size_t i = 0; i < losses::kTermCount; ++i) sums.values[i] += v.values[i];
    }
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (model::Parameter& p : model.parameters())
      for (double& g : p.grad.values()) g *= inv_batch;

    IterationLog row;
    row.iteration = iter;
    const double frames = static_cast<double>(batch.size() * tc.clip_length);
    for (std::size_t i = 0; i < losses::kTermCount; ++i) row.terms.values[i] = sums.values[i] / frames;
    row.total = losses::total_loss(row.terms, opts.weights);
    row.grad_norm = clip_gradients(model.parameters(), tc.max_grad_norm);
    row.lr_heads = lr_schedule(iter, tc.warmup_iterations, total, tc.lr_heads);
    row.lr_encoder = lr_schedule(iter, tc.warmup_iterations, total, tc.lr_encoder);
    optimizer.step(model.parameters(), row.lr_heads, row.lr_encoder);
    row.peak_bytes = MemoryProbe::peak_bytes() - base_bytes;

    if (iter % tc.log_every == 0 || iter + 1 == total) {
      spdlog::debug("iter {} loss {:.6f} grad_norm {:.4f} lr {:.3g}", iter, row.total,
                    row.grad_norm, row.lr_heads);
      if (progress) progress(row);
    }
    result.log.push_back(row);
  }
  result.final_weights = opts.weights;
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::string losses_csv(const std::vector<IterationLog>& log) {
  std::ostringstream out;
  out << "iteration,lr_heads,lr_encoder";
  for (std::string_view name : losses::kTermNames) out << ',' << name;
  out << ",total,grad_norm,peak_bytes\n";
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << ',' << buf;
  };
  for (const IterationLog& r : log) {
    out << r.iteration;
    num(r.lr_heads);
    num(r.lr_encoder);
    for (double v : r.terms.values) num(v);
    num(r.total);
    num(r.grad_norm);
    out << ',' << r.peak_bytes << '\n';
  }
  return out.str();
}

nlohmann::json train_manifest(const RunConfig& config, const TrainResult& result) {
  nlohmann::json curve = nlohmann::json::array();
  nlohmann::json memory = nlohmann::json::array();
  for (const IterationLog& r : result.log) {
    nlohmann::json terms = nlohmann::json::object();
    for (std::size_t i = 0; i < losses::kTermCount; ++i)
      terms[std::string(losses::kTermNames[i])] = r.terms.values[i];
    curve.push_back({{"iteration", r.iteration}, {"total", r.total}, {"terms", terms}});
    if (r.iteration % config.train.log_every == 0 || &r == &result.log.back())
      memory.push_back({{"iteration", r.iteration}, {"peak_bytes", r.peak_bytes}});
  }
  return {{"kind", "train"},
          {"config", to_json(config)},
          {"seed", config.train.seed},
          {"optimizer",
           {{"name", "adamw"},
            {"beta1", config.train.beta1},
            {"beta2", config.train.beta2},
            {"epsilon", config.train.epsilon}}},
          {"iterations", result.log.size()},
          {"final_weights", to_json(result.final_weights)},
          {"loss_curve", curve},
          {"peak_memory", memory}};
}

}  // namespace cmtrack::harness
