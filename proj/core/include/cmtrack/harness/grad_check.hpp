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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmtrack/model/model.hpp"
#include "cmtrack/numerics/tape.hpp"

namespace cmtrack::harness {

/// A scalar function of tape leaves, checked at `inputs`.
struct GradCase {
  std::vector<numerics::Tensor> inputs;
  std::function<numerics::Var(numerics::Tape&, std::span<const numerics::Var>)> fn;
};

struct GradCheckOutcome {
  bool rejected = false;  // a kink lies within the guard distance
  double rel_error = 0.0;
};

/// Reverse mode against central differences over all inputs jointly; the
/// relative error is normalised by the gradient's infinity norm.
GradCheckOutcome check_gradient(const GradCase& c, double step = 1e-5, double kink_guard = 1e-3);

struct GradCheckOptions {
  std::size_t configs = 100;
  std::uint64_t seed = 0;
  double step = 1e-5;
  double tolerance = 1e-4;
  double kink_guard = 1e-3;
  /// Model used for the network blocks.
  model::ModelConfig model{.num_queries = 3,
                           .dim = 8,
                           .heads = 2,
                           .horizon = 3,
                           .burn_in = 3,
                           .feature_dim = 6,
                           .encoder_hidden = 8,
                           .ffn_hidden = 12,
                           .head_hidden = 8};
};

struct GradCheckBlock {
  std::string name;
  std::size_t checked = 0;
  std::size_t rejected = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

std::vector<std::string> grad_check_block_names();

/// Runs every block (or the named subset) over `configs` accepted random
/// configurations each.
std::vector<GradCheckBlock> run_grad_check(const GradCheckOptions& options,
                                           std::span<const std::string> only = {});

nlohmann::json to_json(const std::vector<GradCheckBlock>& blocks);

}  // namespace cmtrack::harness
