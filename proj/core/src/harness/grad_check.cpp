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

#include "cmtrack/harness/grad_check.hpp"

#include <algorithm>
#include <map>

#include "cmtrack/errors.hpp"
#include "cmtrack/geometry/box_ops.hpp"
#include "cmtrack/harness/objective.hpp"
#include "cmtrack/losses/losses.hpp"
#include "cmtrack/model/trajectory.hpp"
#include "cmtrack/numerics/finite_difference.hpp"
#include "cmtrack/numerics/ops.hpp"
#include "cmtrack/numerics/random.hpp"
#include "cmtrack/synth/sequence.hpp"

namespace cmtrack::harness {

using numerics::Rng;
using numerics::Shape;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;
namespace ops = numerics;

namespace {

constexpr std::size_t kMaxAttemptsPerConfig = 20;

Tensor flatten(const std::vector<Tensor>& parts) {
  std::size_t n = 0;
  for (const Tensor& t : parts) n += t.size();
  Tensor out({1, n});
  std::size_t k = 0;
  for (const Tensor& t : parts)
    for (double v : t.values()) out[k++] = v;
  return out;
}

// Sum of out * R for a fixed random R: a generic scalar readout.
Var readout(Var out, const Tensor& r) {
  return ops::sum(ops::mul(out, out.tape().constant(r)));
}

// Random model in the small configuration, every parameter perturbed so
// gains and biases are not at their initial constants.
model::Model random_model(const model::ModelConfig& cfg, Rng& rng) {
  model::Model m(cfg, rng.next_u64());
  for (model::Parameter& p : m.parameters())
    for (double& v : p.value.values()) v += rng.normal(0.0, 0.1);
  return m;
}

void zero_param(model::Model& m, const char* name) { m.parameters().find(name)->value.fill(0.0); }

bool selected(const std::string& name, std::span<const char* const> prefixes) {
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](const char* p) { return name.rfind(p, 0) == 0; });
}

using ModelFn =
    std::function<Var(const model::Model&, const model::BoundParams&, std::span<const Var>)>;

// Inputs are the parameters matching `prefixes` followed by `extras`; the
// other parameters sit on the tape as constants.
GradCase model_case(std::shared_ptr<const model::Model> m, std::vector<const char*> prefixes,
                    std::vector<Tensor> extras, ModelFn fn) {
  GradCase c;
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < m->parameters().size(); ++i) {
    if (selected(m->parameters()[i].name, prefixes)) {
      picked.push_back(i);
      c.inputs.push_back(m->parameters()[i].value);
    }
  }
  const std::size_t n_params = picked.size();
  for (Tensor& e : extras) c.inputs.push_back(std::move(e));
  c.fn = [m, picked, n_params, fn](Tape& tape, std::span<const Var> in) {
    model::BoundParams p{&tape, {}};
    std::size_t next = 0;
    for (std::size_t i = 0; i < m->parameters().size(); ++i) {
      if (next < picked.size() && picked[next] == i) {
        p.leaves.push_back(in[next++]);
      } else {
        p.leaves.push_back(tape.constant(m->parameters()[i].value));
      }
    }
    return fn(*m, p, in.subspan(n_params));
  };
  return c;
}

Tensor random_box_row(Rng& rng) {
  return Tensor({1, 4}, {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.05, 0.4),
                         rng.uniform(0.05, 0.4)});
}

geometry::BoundingBox random_box(Rng& rng) { return geometry::BoundingBox::from_tensor(random_box_row(rng)); }

using CaseFactory = std::function<GradCase(Rng&, const GradCheckOptions&)>;

std::vector<std::pair<std::string, CaseFactory>> factories() {
  std::vector<std::pair<std::string, CaseFactory>> out;

  out.emplace_back("encoder", [](Rng& rng, const GradCheckOptions& o) {
    auto m = std::make_shared<model::Model>(random_model(o.model, rng));
    const Tensor r = rng.normal_tensor({o.model.num_queries, o.model.dim}, 1.0);
    return model_case(m, {"encoder."}, {rng.normal_tensor({1, o.model.feature_dim}, 1.0)},
                      [r](const model::Model& mm, const model::BoundParams& p, std::span<const Var> x) {
                        return readout(mm.encode_frame(p, x[0]), r);
                      });
  });

  auto temporal = [](std::vector<const char*> prefixes, const char* zeroed) {
    return [prefixes, zeroed](Rng& rng, const GradCheckOptions& o) {
      auto m = std::make_shared<model::Model>(random_model(o.model, rng));
      if (zeroed != nullptr) zero_param(*m, zeroed);
      const Shape s{o.model.num_queries, o.model.dim};
      const Tensor r = rng.normal_tensor(s, 1.0);
      return model_case(m, prefixes, {rng.normal_tensor(s, 1.0), rng.normal_tensor(s, 1.0)},
                        [r](const model::Model& mm, const model::BoundParams& p, std::span<const Var> x) {
                          return readout(mm.temporal_refine(p, x[0], x[1]), r);
                        });
    };
  };
  // FFN output weights zeroed isolate attention; attention output zeroed
  // isolates the FFN.
  out.emplace_back("attention", temporal({"temporal.ln_q", "temporal.ln_m", "temporal.attn"},
                                         "temporal.ffn.w2"));
  out.emplace_back("ffn", temporal({"temporal.ln_f", "temporal.ffn"}, "temporal.attn.wo"));
  out.emplace_back("temporal_block", temporal({"temporal."}, nullptr));

  auto head = [](const char* prefix, int which) {
    return [prefix, which](Rng& rng, const GradCheckOptions& o) {
      auto m = std::make_shared<model::Model>(random_model(o.model, rng));
      const Shape s{o.model.num_queries, o.model.dim};
      const Shape out_shape = which == 0   ? Shape{o.model.num_queries, 2}
                              : which == 1 ? Shape{o.model.num_queries, 4}
                                           : Shape{o.model.horizon, 2};
      const Tensor r = rng.normal_tensor(out_shape, 1.0);
      return model_case(m, {prefix}, {rng.normal_tensor(s, 1.0)},
                        [r, which](const model::Model& mm, const model::BoundParams& p,
                                   std::span<const Var> x) {
                          const model::HeadOutputs h = mm.predict_heads(p, x[0]);
                          return readout(which == 0 ? h.logits : which == 1 ? h.boxes : h.offsets, r);
                        });
    };
  };
  out.emplace_back("head.cls", head("head.cls", 0));
  out.emplace_back("head.box", head("head.box", 1));
  out.emplace_back("head.traj", head("head.traj", 2));

  out.emplace_back("loss.ce", [](Rng& rng, const GradCheckOptions& o) {
    const std::size_t slot = rng.below(o.model.num_queries);
    const bool present = rng.uniform() < 0.8;
    return GradCase{{rng.normal_tensor({o.model.num_queries, 2}, 2.0)},
                    [slot, present](Tape&, std::span<const Var> x) {
                      return losses::classification_loss(x[0], slot, present);
                    }};
  });
  out.emplace_back("loss.l1", [](Rng& rng, const GradCheckOptions&) {
    const geometry::BoundingBox gt = random_box(rng);
    return GradCase{{random_box_row(rng)}, [gt](Tape&, std::span<const Var> x) {
                      return losses::spatial_loss(x[0], gt).l1;
                    }};
  });
  out.emplace_back("loss.giou", [](Rng& rng, const GradCheckOptions&) {
    const geometry::BoundingBox gt = random_box(rng);
    return GradCase{{random_box_row(rng)}, [gt](Tape&, std::span<const Var> x) {
                      return losses::spatial_loss(x[0], gt).giou;
                    }};
  });
  out.emplace_back("loss.anchor", [](Rng& rng, const GradCheckOptions& o) {
    const geometry::BoundingBox gt = random_box(rng);
    const std::size_t t = rng.below(o.model.burn_in);
    const std::size_t k = o.model.burn_in;
    return GradCase{{random_box_row(rng)}, [gt, t, k](Tape&, std::span<const Var> x) {
                      return losses::burn_in_anchor_loss(x[0], gt, t, k);
                    }};
  });
  auto trajectory = [](bool final_step) {
    return [final_step](Rng& rng, const GradCheckOptions& o) {
      const Tensor gt = rng.uniform_tensor({o.model.horizon, 2}, 0.0, 1.0);
      return GradCase{{rng.normal_tensor({o.model.horizon, 2}, 0.05),
                       rng.uniform_tensor({1, 2}, 0.2, 0.8)},
                      [gt, final_step](Tape&, std::span<const Var> x) {
                        const losses::TrajectoryLoss l =
                            losses::trajectory_loss(model::integrate_offsets(x[1], x[0]), gt);
                        return final_step ? l.fde : l.ade;
                      }};
    };
  };
  out.emplace_back("loss.ade", trajectory(false));
  out.emplace_back("loss.fde", trajectory(true));
  out.emplace_back("loss.cos", [](Rng& rng, const GradCheckOptions& o) {
    const Tensor previous = rng.normal_tensor({1, o.model.dim}, 1.0);
    return GradCase{{rng.normal_tensor({1, o.model.dim}, 1.0)},
                    [previous](Tape&, std::span<const Var> x) {
                      return losses::cosine_smoothness_loss(x[0], previous);
                    }};
  });
  out.emplace_back("giou_path", [](Rng& rng, const GradCheckOptions&) {
    return GradCase{{random_box_row(rng), random_box_row(rng)},
                    [](Tape&, std::span<const Var> x) { return geometry::giou(x[0], x[1]); }};
  });
  out.emplace_back("total_loss.clip", [](Rng& rng, const GradCheckOptions& o) {
    auto m = std::make_shared<model::Model>(random_model(o.model, rng));
    synth::SequenceSpec spec;
    spec.seed = rng.next_u64();
    spec.length = o.model.horizon + 3;
    spec.feature_dim = o.model.feature_dim;
    spec.motion = synth::MotionModel::kRandomWalk;
    auto rec = std::make_shared<synth::SequenceRecord>(synth::generate_sequence(spec));
    ObjectiveOptions opts;
    opts.weights.cos = 0.5;
    // Carried values are taken at the base point so the perturbed passes see
    // the same constants the detached tape does.
    auto frozen = std::make_shared<CarriedValues>();
    {
      Tape tape;
      const ClipPass base = run_clip(*m, m->bind(tape, false), *rec, 0, 2, opts);
      *frozen = base.carried;
    }
    return model_case(m, {""}, {},
                      [rec, opts, frozen](const model::Model& mm, const model::BoundParams& p,
                                          std::span<const Var>) {
                        return run_clip(mm, p, *rec, 0, 2, opts, frozen.get()).total;
                      });
  });
  return out;
}

}  // namespace

GradCheckOutcome check_gradient(const GradCase& c, double step, double kink_guard) {
  GradCheckOutcome out;
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& x : c.inputs) leaves.push_back(tape.leaf(x, true));
    const Var loss = c.fn(tape, leaves);
    if (tape.kink_margin() < kink_guard) {
      out.rejected = true;
      return out;
    }
    tape.backward(loss);
    for (const Var& v : leaves) analytic.push_back(tape.grad(v));
  }

  std::vector<Tensor> numeric;
  std::vector<Tensor> point = c.inputs;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    auto f = [&](const Tensor& xi) {
      Tape tape;
      std::vector<Var> leaves;
      for (std::size_t j = 0; j < point.size(); ++j)
        leaves.push_back(tape.constant(j == i ? xi : point[j]));
      return c.fn(tape, leaves).value().item();
    };
    numeric.push_back(numerics::finite_difference_gradient(f, c.inputs[i], step));
  }
  out.rel_error = numerics::relative_error(flatten(analytic), flatten(numeric));
  return out;
}

std::vector<std::string> grad_check_block_names() {
  std::vector<std::string> names;
  for (const auto& [name, f] : factories()) names.push_back(name);
  return names;
}

std::vector<GradCheckBlock> run_grad_check(const GradCheckOptions& options,
                                           std::span<const std::string> only) {
  options.model.validate();
  const auto all = factories();
  for (const std::string& name : only) {
    const bool known = std::any_of(all.begin(), all.end(), [&](const auto& f) { return f.first == name; });
    if (!known) throw UsageError("unknown grad-check block '" + name + "'");
  }
  std::vector<GradCheckBlock> blocks;
  for (std::size_t b = 0; b < all.size(); ++b) {
    const auto& [name, factory] = all[b];
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    GradCheckBlock block;
    block.name = name;
    Rng rng(numerics::mix_seed(options.seed, b));
    const std::size_t max_attempts = options.configs * kMaxAttemptsPerConfig;
    for (std::size_t attempt = 0; block.checked < options.configs && attempt < max_attempts;
         ++attempt) {
      const GradCase c = factory(rng, options);
      const GradCheckOutcome r = check_gradient(c, options.step, options.kink_guard);
      if (r.rejected) {
        ++block.rejected;
        continue;
      }
      ++block.checked;
      block.max_rel_error = std::max(block.max_rel_error, r.rel_error);
    }
    block.passed = block.checked == options.configs && block.max_rel_error < options.tolerance;
    blocks.push_back(block);
  }
  return blocks;
}

nlohmann::json to_json(const std::vector<GradCheckBlock>& blocks) {
  nlohmann::json arr = nlohmann::json::array();
  for (const GradCheckBlock& b : blocks) {
    arr.push_back({{"block", b.name},
                   {"checked", b.checked},
                   {"rejected", b.rejected},
                   {"max_rel_error", b.max_rel_error},
                   {"passed", b.passed}});
  }
  return arr;
}

}  // namespace cmtrack::harness
