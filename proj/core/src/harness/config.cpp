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

#include "cmtrack/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "cmtrack/errors.hpp"
#include "cmtrack/model/checkpoint.hpp"

namespace cmtrack::harness {

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                    const char* section) {
  if (!j.is_object()) throw ParseError(std::string(section) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ParseError(std::string("unknown key '") + key + "' in " + section);
  }
}

void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) throw ContractError(std::string(what) + " must be > 0");
}

}  // namespace

void TrainConfig::validate() const {
  if (clip_length < 1) throw ContractError("clip_length must be >= 1");
  if (clip_stride < 1) throw ContractError("clip_stride must be >= 1");
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  require_positive(lr_heads, "lr_heads");
  require_positive(lr_encoder, "lr_encoder");
  require_positive(max_grad_norm, "max_grad_norm");
  require_positive(epsilon, "epsilon");
  if (!std::isfinite(weight_decay) || weight_decay < 0.0)
    throw ContractError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ContractError("betas must lie in [0, 1)");
  if (epochs < 1 && max_iterations == 0) throw ContractError("epochs must be >= 1");
  if (balance_losses && balance_every < 1) throw ContractError("balance_every must be >= 1");
  if (log_every < 1) throw ContractError("log_every must be >= 1");
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  weights.validate();
  data.prototype.validate();
  if (data.prototype.feature_dim != model.feature_dim) {
    throw ContractError("data feature_dim " + std::to_string(data.prototype.feature_dim) +
                        " differs from model feature_dim " + std::to_string(model.feature_dim));
  }
  if (train.clip_length > data.prototype.length) {
    throw ContractError("clip_length exceeds sequence length");
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"clip_length", c.clip_length},
          {"clip_stride", c.clip_stride},
          {"batch_size", c.batch_size},
          {"lr_heads", c.lr_heads},
          {"lr_encoder", c.lr_encoder},
          {"weight_decay", c.weight_decay},
          {"warmup_iterations", c.warmup_iterations},
          {"epochs", c.epochs},
          {"max_iterations", c.max_iterations},
          {"max_grad_norm", c.max_grad_norm},
          {"seed", c.seed},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"supervise_invisible", c.supervise_invisible},
          {"balance_losses", c.balance_losses},
          {"balance_every", c.balance_every},
          {"log_every", c.log_every}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"clip_length", "clip_stride", "batch_size", "lr_heads", "lr_encoder",
                  "weight_decay", "warmup_iterations", "epochs", "max_iterations",
                  "max_grad_norm", "seed", "beta1", "beta2", "epsilon", "supervise_invisible",
                  "balance_losses", "balance_every", "log_every"},
                 "train");
  TrainConfig c;
  read_field(j, "clip_length", c.clip_length);
  read_field(j, "clip_stride", c.clip_stride);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "lr_heads", c.lr_heads);
  read_field(j, "lr_encoder", c.lr_encoder);
  read_field(j, "weight_decay", c.weight_decay);
  read_field(j, "warmup_iterations", c.warmup_iterations);
  read_field(j, "epochs", c.epochs);
  read_field(j, "max_iterations", c.max_iterations);
  read_field(j, "max_grad_norm", c.max_grad_norm);
  read_field(j, "seed", c.seed);
  read_field(j, "beta1", c.beta1);
  read_field(j, "beta2", c.beta2);
  read_field(j, "epsilon", c.epsilon);
  read_field(j, "supervise_invisible", c.supervise_invisible);
  read_field(j, "balance_losses", c.balance_losses);
  read_field(j, "balance_every", c.balance_every);
  read_field(j, "log_every", c.log_every);
  return c;
}

nlohmann::json to_json(const losses::LossWeights& w) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < losses::kTermCount; ++i)
    j[std::string(losses::kTermNames[i])] = w[static_cast<losses::Term>(i)];
  return j;
}

losses::LossWeights loss_weights_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"ce", "l1", "giou", "anchor", "ade", "fde", "cos"}, "weights");
  losses::LossWeights w;
  for (std::size_t i = 0; i < losses::kTermCount; ++i)
    read_field(j, std::string(losses::kTermNames[i]).c_str(), w[static_cast<losses::Term>(i)]);
  return w;
}

nlohmann::json to_json(const DataConfig& d) {
  return {{"prototype", synth::to_json(d.prototype)},
          {"base_seed", d.base_seed},
          {"train_count", d.train_count},
          {"val_count", d.val_count},
          {"test_count", d.test_count}};
}

DataConfig data_config_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"prototype", "base_seed", "train_count", "val_count", "test_count"}, "data");
  DataConfig d;
  if (j.contains("prototype")) d.prototype = synth::spec_from_json(j["prototype"]);
  read_field(j, "base_seed", d.base_seed);
  read_field(j, "train_count", d.train_count);
  read_field(j, "val_count", d.val_count);
  read_field(j, "test_count", d.test_count);
  return d;
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"model", model::to_json(c.model)},
          {"train", to_json(c.train)},
          {"weights", to_json(c.weights)},
          {"data", to_json(c.data)}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"model", "train", "weights", "data"}, "config");
  RunConfig c;
  if (j.contains("model")) c.model = model::model_config_from_json(j["model"]);
  if (j.contains("train")) c.train = train_config_from_json(j["train"]);
  if (j.contains("weights")) c.weights = loss_weights_from_json(j["weights"]);
  if (j.contains("data")) {
    c.data = data_config_from_json(j["data"]);
    // A data section without an explicit width follows the model.
    if (!j["data"].contains("prototype") || !j["data"]["prototype"].contains("feature_dim"))
      c.data.prototype.feature_dim = c.model.feature_dim;
  } else {
    c.data.prototype.feature_dim = c.model.feature_dim;
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::size_t split_count(const DataConfig& d, synth::Split s) {
  switch (s) {
    case synth::Split::kTrain: return d.train_count;
    case synth::Split::kVal: return d.val_count;
    case synth::Split::kTest: return d.test_count;
  }
  return 0;
}

std::vector<synth::SequenceSpec> split_specs(const DataConfig& d, synth::Split s) {
  return synth::make_split(d.prototype, s, split_count(d, s), d.base_seed);
}

std::vector<synth::SequenceRecord> generate_split(const DataConfig& d, synth::Split s) {
  std::vector<synth::SequenceRecord> out;
  for (const synth::SequenceSpec& spec : split_specs(d, s)) out.push_back(synth::generate_sequence(spec));
  return out;
}

}  // namespace cmtrack::harness
