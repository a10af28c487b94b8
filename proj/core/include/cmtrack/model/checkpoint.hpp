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

#include <filesystem>

#include <nlohmann/json.hpp>

#include "cmtrack/model/model.hpp"

namespace cmtrack::model {

nlohmann::json to_json(const ModelConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j);

// Checkpoint layout (all integers little-endian):
//   8 bytes   magic "CMTRCKP1"
//   u64       header length n
//   n bytes   JSON header {"config": {...}, "parameters": [{"name", "rows", "cols"}...]}
//   payload   every parameter's float64 values, row-major, in header order
//
// Values are stored as raw IEEE-754 bits, so a save/load cycle is bit-exact.
void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace cmtrack::model
