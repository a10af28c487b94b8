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

#include "cmtrack/harness/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cmtrack/errors.hpp"
#include "cmtrack/harness/config.hpp"
#include "cmtrack/harness/evaluate.hpp"
#include "cmtrack/harness/grad_check.hpp"
#include "cmtrack/harness/profile.hpp"
#include "cmtrack/harness/train.hpp"
#include "cmtrack/model/checkpoint.hpp"
#include "cmtrack/synth/annotations.hpp"

namespace cmtrack::harness {

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutRootEnv = "CMTRACK_OUT_ROOT";

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "JSON run configuration");
  sub->add_option("--seed", f.seed, "Override the configured seed");
  sub->add_option("--out", f.out, "Output directory");
}

RunConfig resolve_config(const CommonFlags& f) {
  RunConfig c;
  if (!f.config.empty()) {
    if (!fs::exists(f.config)) throw UsageError("config file '" + f.config + "' not found");
    c = load_run_config(f.config);
  } else {
    c.data.prototype.feature_dim = c.model.feature_dim;
  }
  if (f.seed) c.train.seed = *f.seed;
  c.validate();
  return c;
}

fs::path resolve_out(const CommonFlags& f, const char* subcommand) {
  fs::path dir = f.out;
  if (dir.empty()) {
    const char* root = std::getenv(kOutRootEnv);
    dir = fs::path(root != nullptr && *root != '\0' ? root : "cmtrack_out") / subcommand;
  }
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<std::size_t> parse_lengths(const std::string& list) {
  std::vector<std::size_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v == 0) throw UsageError("--T expects positive integers, got '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw UsageError("--T needs at least one length");
  return out;
}

int cmd_gen_data(const CommonFlags& f, const std::string& spec_list, std::ostream& out) {
  RunConfig c = resolve_config(f);
  if (f.seed) c.data.base_seed = *f.seed;
  const fs::path dir = resolve_out(f, "gen-data");
  std::size_t written = 0;
  auto emit = [&](const std::vector<synth::SequenceSpec>& specs, const fs::path& root) {
    synth::write_spec_list(specs, root / "specs.json");
    for (const synth::SequenceSpec& s : specs) {
      synth::write_annotations(synth::generate_sequence(s), root / synth::sequence_name(s));
      ++written;
    }
  };
  if (!spec_list.empty()) {
    if (!fs::exists(spec_list)) throw UsageError("spec list '" + spec_list + "' not found");
    emit(synth::read_spec_list(spec_list), dir);
  } else {
    for (synth::Split s : {synth::Split::kTrain, synth::Split::kVal, synth::Split::kTest})
      emit(split_specs(c.data, s), dir / std::string(synth::to_string(s)));
  }
  out << "wrote " << written << " sequences to " << dir.string() << "\n";
  return kExitOk;
}

nlohmann::json evaluate_into(const model::Model& m, const std::vector<synth::SequenceRecord>& data,
                             bool ablate, const fs::path& dir, const std::string& stem) {
  ModelTracker tracker(m, {ablate});
  const EvalReport report = evaluate(tracker, data, m.config().horizon);
  for (const std::string& n : report.notices) spdlog::warn("{}", n);
  write_text(dir / (stem + ".csv"), metrics::attribute_table_csv(report.table));
  return eval_manifest(report);
}

int cmd_train(const CommonFlags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f);
  const fs::path dir = resolve_out(f, "train");
  const std::vector<synth::SequenceRecord> data = generate_split(c.data, synth::Split::kTrain);
  const TrainResult result = train(c, data, [&](const IterationLog& row) {
    out << "iter " << row.iteration << " loss " << row.total << "\n";
  });
  model::save_checkpoint(dir / "checkpoint.bin", result.model);
  write_text(dir / "losses.csv", losses_csv(result.log));
  nlohmann::json manifest = train_manifest(c, result);
  const std::vector<synth::SequenceRecord> val = generate_split(c.data, synth::Split::kVal);
  if (!val.empty()) manifest["final_metrics"] = evaluate_into(result.model, val, false, dir, "val_metrics");
  write_json(dir / "manifest.json", manifest);
  write_json(dir / "timing.json", {{"train_seconds", result.seconds}});
  out << "checkpoint " << (dir / "checkpoint.bin").string() << "\n";
  return kExitOk;
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint, const std::string& tracker_name,
             bool ablate, std::ostream& out) {
  if (checkpoint.empty()) throw UsageError("eval requires --checkpoint");
  if (!fs::exists(checkpoint)) throw UsageError("checkpoint '" + checkpoint + "' not found");
  const RunConfig c = resolve_config(f);
  const fs::path dir = resolve_out(f, "eval");
  const model::Model m = model::load_checkpoint(checkpoint);
  DataConfig data_cfg = c.data;
  data_cfg.prototype.feature_dim = m.config().feature_dim;
  const std::vector<synth::SequenceRecord> data = generate_split(data_cfg, synth::Split::kTest);
  if (data.empty()) throw UsageError("test split is empty");

  std::unique_ptr<Tracker> tracker;
  if (tracker_name == "model") tracker = std::make_unique<ModelTracker>(m, ModelTrackerOptions{ablate});
  else if (tracker_name == "static") tracker = std::make_unique<StaticBoxTracker>(m.config().horizon);
  else if (tracker_name == "oracle") tracker = std::make_unique<OracleTracker>(m.config().horizon);
  else throw UsageError("unknown tracker '" + tracker_name + "'");

  const EvalReport report = evaluate(*tracker, data, m.config().horizon);
  for (const std::string& n : report.notices) spdlog::warn("{}", n);
  nlohmann::json manifest = eval_manifest(report);
  manifest["tracker"] = tracker_name;
  manifest["ablate_memory"] = ablate;
  write_json(dir / "eval_manifest.json", manifest);
  write_text(dir / "metrics.csv", metrics::attribute_table_csv(report.table));
  out << metrics::attribute_table_csv(report.table);
  return kExitOk;
}

int cmd_profile(const CommonFlags& f, const std::string& checkpoint, const std::string& lengths_arg,
                std::ostream& out) {
  const RunConfig c = resolve_config(f);
  const fs::path dir = resolve_out(f, "profile-mem");
  if (!checkpoint.empty() && !fs::exists(checkpoint))
    throw UsageError("checkpoint '" + checkpoint + "' not found");
  const model::Model m = checkpoint.empty() ? model::Model(c.model, c.train.seed)
                                            : model::load_checkpoint(checkpoint);
  const std::vector<std::size_t> lengths = parse_lengths(lengths_arg);
  const auto rows = profile_memory(m, lengths, true, c.train.seed);
  const auto contrast = profile_memory(m, lengths, false, c.train.seed);
  write_text(dir / "memory_profile.csv", memory_profile_csv(rows));
  write_text(dir / "memory_contrast.csv", memory_profile_csv(contrast));
  write_json(dir / "profile.json", {{"kind", "profile-mem"},
                                    {"model", model::to_json(m.config())},
                                    {"detached", to_json(rows)},
                                    {"contrast_no_detach", to_json(contrast)}});
  out << memory_profile_csv(rows);
  return kExitOk;
}

int cmd_grad_check(const CommonFlags& f, std::size_t configs, std::ostream& out) {
  GradCheckOptions o;
  o.configs = configs;
  if (f.seed) o.seed = *f.seed;
  const auto blocks = run_grad_check(o);
  bool ok = true;
  for (const GradCheckBlock& b : blocks) {
    char line[160];
    std::snprintf(line, sizeof line, "%-16s checked=%zu rejected=%zu max_rel_error=%.3e %s\n",
                  b.name.c_str(), b.checked, b.rejected, b.max_rel_error, b.passed ? "PASS" : "FAIL");
    out << line;
    ok = ok && b.passed;
  }
  if (!f.out.empty()) write_json(resolve_out(f, "grad-check") / "grad_check.json", to_json(blocks));
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cmtrack: constant-memory temporal tracker"};
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags, eval_flags, prof_flags, grad_flags;
  std::string spec_list, eval_checkpoint, prof_checkpoint, tracker = "model";
  std::string lengths = "10,100,1000";
  bool ablate = false;
  std::size_t configs = 100;

  CLI::App* gen = app.add_subcommand("gen-data", "Write synthetic sequences and annotations");
  add_common(gen, gen_flags);
  gen->add_option("--specs", spec_list, "Spec list file; default derives splits from the config");

  CLI::App* tr = app.add_subcommand("train", "Train a model and write a checkpoint and manifest");
  add_common(tr, train_flags);

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_common(ev, eval_flags);
  ev->add_option("--checkpoint", eval_checkpoint, "Checkpoint to evaluate");
  ev->add_option("--tracker", tracker, "model, static or oracle");
  ev->add_flag("--ablate-memory", ablate, "Zero the temporal memory after every frame");

  CLI::App* pr = app.add_subcommand("profile-mem", "Tensor memory versus sequence length");
  add_common(pr, prof_flags);
  pr->add_option("--checkpoint", prof_checkpoint, "Checkpoint; default a fresh model");
  pr->add_option("--T", lengths, "Comma-separated sequence lengths");

  CLI::App* gc = app.add_subcommand("grad-check", "Finite-difference gradient suite");
  add_common(gc, grad_flags);
  gc->add_option("--configs", configs, "Accepted random configurations per block");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "cmtrack: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_flags, spec_list, out);
    if (tr->parsed()) return cmd_train(train_flags, out);
    if (ev->parsed()) return cmd_eval(eval_flags, eval_checkpoint, tracker, ablate, out);
    if (pr->parsed()) return cmd_profile(prof_flags, prof_checkpoint, lengths, out);
    if (gc->parsed()) return cmd_grad_check(grad_flags, configs, out);
  } catch (const UsageError& e) {
    err << "cmtrack: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "cmtrack: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace cmtrack::harness
