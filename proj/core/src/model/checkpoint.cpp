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

#include "cmtrack/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "cmtrack/errors.hpp"

namespace cmtrack::model {
namespace {

constexpr char kMagic[8] = {'C', 'M', 'T', 'R', 'C', 'K', 'P', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

}  // namespace

nlohmann::json to_json(const ModelConfig& c) {
  return {{"num_queries", c.num_queries}, {"dim", c.dim},
          {"heads", c.heads},             {"horizon", c.horizon},
          {"burn_in", c.burn_in},         {"feature_dim", c.feature_dim},
          {"encoder_hidden", c.encoder_hidden}, {"ffn_hidden", c.ffn_hidden},
          {"head_hidden", c.head_hidden}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "num_queries") c.num_queries = value.get<std::size_t>();
    else if (key == "dim") c.dim = value.get<std::size_t>();
    else if (key == "heads") c.heads = value.get<std::size_t>();
    else if (key == "horizon") c.horizon = value.get<std::size_t>();
    else if (key == "burn_in") c.burn_in = value.get<std::size_t>();
    else if (key == "feature_dim") c.feature_dim = value.get<std::size_t>();
    else if (key == "encoder_hidden") c.encoder_hidden = value.get<std::size_t>();
    else if (key == "ffn_hidden") c.ffn_hidden = value.get<std::size_t>();
    else if (key == "head_hidden") c.head_hidden = value.get<std::size_t>();
    else throw ParseError("unknown model config key '" + key + "'");
  }
  c.validate();
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  nlohmann::json header;
  header["config"] = to_json(model.config());
  header["parameters"] = nlohmann::json::array();
  for (const Parameter& p : model.parameters()) {
    header["parameters"].push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  const std::uint64_t n = text.size();
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Parameter& p : model.parameters()) {
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.bytes()));
  }
  out.flush();
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a cmtrack checkpoint: " + path.string());
  }
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n > (1u << 26)) throw ParseError("corrupt checkpoint header: " + path.string());
  std::string text(n, '\0');
  in.read(text.data(), static_cast<std::streamsize>(n));
  if (!in) throw ParseError("truncated checkpoint header: " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
  const ModelConfig config = model_config_from_json(header.at("config"));
  ParameterSet params;
  for (const auto& entry : header.at("parameters")) {
    const numerics::Shape shape{entry.at("rows").get<std::size_t>(),
                                entry.at("cols").get<std::size_t>()};
    numerics::Tensor value(shape);
    in.read(reinterpret_cast<char*>(value.data()), static_cast<std::streamsize>(value.bytes()));
    if (!in) throw ParseError("truncated checkpoint payload: " + path.string());
    params.add(entry.at("name").get<std::string>(), std::move(value), ParamGroup::kHeads);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("trailing bytes in checkpoint: " + path.string());
  }
  return Model(config, std::move(params));
}

}  // namespace cmtrack::model
