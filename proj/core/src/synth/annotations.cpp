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

#include "cmtrack/synth/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "cmtrack/errors.hpp"

namespace cmtrack::synth {

namespace fs = std::filesystem;
using geometry::BoundingBox;

namespace {

constexpr std::uint64_t kSplitStride = 1'000'000;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("'" + path.string() + "' is empty", 0);
  return lines;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& field, const fs::path& path, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  while (used < field.size() && (field[used] == ' ' || field[used] == '\t')) ++used;
  if (field.empty() || used != field.size() || !std::isfinite(v)) {
    throw ParseError(path.filename().string() + ": bad number '" + field + "'", line);
  }
  return v;
}

}  // namespace

void write_annotations(const SequenceRecord& rec, const fs::path& dir) {
  fs::create_directories(dir);
  const double pw = rec.extent.width, ph = rec.extent.height;

  const fs::path gt_path = dir / "groundtruth.txt";
  std::ofstream gt = open_out(gt_path);
  for (const Frame& f : rec.frames) {
    const geometry::Corners c = geometry::to_corners(f.gt);
    gt << format_double(c.x1 * pw) << ',' << format_double(c.y1 * ph) << ','
       << format_double(f.gt.w * pw) << ',' << format_double(f.gt.h * ph) << '\n';
  }
  close_out(gt, gt_path);

  const fs::path vis_path = dir / "visibility.txt";
  std::ofstream vis = open_out(vis_path);
  for (const Frame& f : rec.frames) vis << (f.visible ? '1' : '0') << '\n';
  close_out(vis, vis_path);

  nlohmann::json attrs = nlohmann::json::array();
  for (Attribute a : rec.attributes) attrs.push_back(std::string(to_string(a)));
  const nlohmann::json meta = {{"name", rec.name},
                               {"attributes", attrs},
                               {"width", rec.extent.width},
                               {"height", rec.extent.height},
                               {"length", rec.length()}};
  const fs::path meta_path = dir / "meta.json";
  std::ofstream mo = open_out(meta_path);
  mo << meta.dump(2) << '\n';
  close_out(mo, meta_path);
}

SequenceRecord read_annotations(const fs::path& dir) {
  SequenceRecord rec;
  rec.name = dir.filename().string();

  const fs::path meta_path = dir / "meta.json";
  if (fs::exists(meta_path)) {
    std::ifstream in(meta_path);
    try {
      const nlohmann::json meta = nlohmann::json::parse(in);
      rec.name = meta.value("name", rec.name);
      rec.extent.width = meta.value("width", rec.extent.width);
      rec.extent.height = meta.value("height", rec.extent.height);
      for (const auto& tag : meta.value("attributes", nlohmann::json::array()))
        rec.attributes.push_back(parse_attribute(tag.get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("meta.json: " + std::string(e.what()));
    }
  }
  const double pw = rec.extent.width, ph = rec.extent.height;

  const fs::path gt_path = dir / "groundtruth.txt";
  const std::vector<std::string> lines = read_lines(gt_path);
  rec.frames.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    std::vector<std::string> fields;
    std::stringstream ss(lines[i]);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 4) {
      throw ParseError("groundtruth.txt: expected 4 fields, got " + std::to_string(fields.size()),
                       line_no);
    }
    const double x = parse_double(fields[0], gt_path, line_no);
    const double y = parse_double(fields[1], gt_path, line_no);
    const double w = parse_double(fields[2], gt_path, line_no);
    const double h = parse_double(fields[3], gt_path, line_no);
    if (w <= 0.0 || h <= 0.0) {
      throw ParseError("groundtruth.txt: non-positive extent", line_no);
    }
    Frame f;
    f.gt = {(x + 0.5 * w) / pw, (y + 0.5 * h) / ph, w / pw, h / ph};
    rec.frames.push_back(std::move(f));
  }

  const fs::path vis_path = dir / "visibility.txt";
  if (fs::exists(vis_path)) {
    const std::vector<std::string> vis = read_lines(vis_path);
    if (vis.size() != rec.frames.size()) {
      throw ParseError("visibility.txt: " + std::to_string(vis.size()) + " lines for " +
                           std::to_string(rec.frames.size()) + " frames",
                       std::min(vis.size(), rec.frames.size()) + 1);
    }
    for (std::size_t i = 0; i < vis.size(); ++i) {
      if (vis[i] != "0" && vis[i] != "1") {
        throw ParseError("visibility.txt: expected 0 or 1", i + 1);
      }
      rec.frames[i].visible = vis[i] == "1";
    }
  }
  return rec;
}

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

std::uint64_t split_seed(std::uint64_t base_seed, Split s, std::size_t index) {
  if (index >= kSplitStride) throw ContractError("split index exceeds seed stride");
  return base_seed + static_cast<std::uint64_t>(s) * kSplitStride + index;
}

std::vector<SequenceSpec> make_split(const SequenceSpec& prototype, Split s, std::size_t count,
                                     std::uint64_t base_seed) {
  std::vector<SequenceSpec> out(count, prototype);
  for (std::size_t i = 0; i < count; ++i) out[i].seed = split_seed(base_seed, s, i);
  return out;
}

void write_spec_list(const std::vector<SequenceSpec>& specs, const fs::path& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SequenceSpec& s : specs) arr.push_back(to_json(s));
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out = open_out(path);
  out << nlohmann::json{{"sequences", arr}}.dump(2) << '\n';
  close_out(out, path);
}

std::vector<SequenceSpec> read_spec_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open spec list '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.contains("sequences") || !j["sequences"].is_array()) {
    throw ParseError(path.string() + ": missing 'sequences' array");
  }
  std::vector<SequenceSpec> specs;
  for (const auto& s : j["sequences"]) specs.push_back(spec_from_json(s));
  return specs;
}

}  // namespace cmtrack::synth
