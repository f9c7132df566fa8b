// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tntc/tntc.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kNumeric = 4 };

int exit_code_for(tntc_status s) {
  switch (s) {
    case TNTC_OK: return kOk;
    case TNTC_ERR_INVALID_ARGUMENT:
    case TNTC_ERR_CONFIG: return kUsage;
    case TNTC_ERR_PARSE:
    case TNTC_ERR_SCHEMA:
    case TNTC_ERR_STRATIFICATION:
    case TNTC_ERR_CONTRACT:
    case TNTC_ERR_IO:
    case TNTC_ERR_UNAVAILABLE: return kData;
    case TNTC_ERR_NUMERIC: return kNumeric;
    default: return kInternal;
  }
}

struct Failure {
  int code;
  std::string message;
};

void check(tntc_status s, const std::string& context) {
  if (s != TNTC_OK) throw Failure{exit_code_for(s), context + ": " + tntc_last_error()};
}

struct DatasetDeleter {
  void operator()(tntc_dataset* d) const { tntc_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(tntc_model* m) const { tntc_model_free(m); }
};
using DatasetPtr = std::unique_ptr<tntc_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<tntc_model, ModelDeleter>;

// Takes ownership of a library-allocated JSON string.
json take_json(char* text) {
  std::unique_ptr<char, void (*)(char*)> guard(text, tntc_string_free);
  return json::parse(text);
}

std::string hash_file(const fs::path& path) {
  char out[41];
  check(tntc_hash_file(path.string().c_str(), out), "hashing " + path.string());
  return out;
}

std::string hash_text(const std::string& text) {
  char out[41];
  check(tntc_hash_bytes(text.data(), text.size(), out), "hashing manifest");
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kData, "cannot open '" + path.string() + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{kData, "cannot write '" + path.string() + "'"};
  out << text;
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> profile;
  std::string out = "tntc-out";
  bool quiet = false;
};

/// Records inputs and outputs of one invocation and writes manifest.json.
class Run {
 public:
  Run(std::string command, const Globals& g) : command_(std::move(command)), dir_(g.out), quiet_(g.quiet) {
    fs::create_directories(dir_);
  }

  const fs::path& dir() const { return dir_; }
  bool quiet() const { return quiet_; }

  void input(const std::string& role, const fs::path& path) {
    inputs_.push_back({{"role", role}, {"path", path.generic_string()}, {"hash", hash_file(path)}});
  }
  void output(const std::string& rel) { outputs_.push_back(rel); }
  void write(const std::string& rel, const std::string& text) {
    write_text(dir_ / rel, text);
    output(rel);
  }
  void write_json(const std::string& rel, const json& j) { write(rel, j.dump(2) + "\n"); }
  void note(const std::string& line) {
    notes_.push_back(line);
    std::cerr << line << "\n";
  }
  void set_config(json cfg) { config_ = std::move(cfg); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  void finish() {
    json outputs = json::array();
    for (const auto& rel : outputs_) outputs.push_back({{"path", rel}, {"hash", hash_file(dir_ / rel)}});
    json m{{"tool", "tntc"},
           {"version", tntc_version()},
           {"command", command_},
           {"config", config_},
           {"seed", seed_},
           {"inputs", inputs_},
           {"outputs", outputs},
           {"notes", notes_}};
    m["manifest_hash"] = hash_text(m.dump());
    write_text(dir_ / "manifest.json", m.dump(2) + "\n");
    if (!quiet_) std::cout << "wrote " << (dir_ / "manifest.json").string() << "\n";
  }

 private:
  std::string command_;
  fs::path dir_;
  bool quiet_;
  json config_ = json::object();
  json seed_ = nullptr;
  json inputs_ = json::array();
  std::vector<std::string> outputs_;
  std::vector<std::string> notes_;
};

void progress_printer(const char* event_json, void* user) {
  if (static_cast<Run*>(user)->quiet()) return;
  const auto ev = json::parse(event_json);
  const std::string kind = ev.value("event", "");
  if (kind == "epoch") {
    std::fprintf(stderr, "  epoch %3d  lr %.3g  loss %.4f  train_acc %.3f\n", ev["epoch"].get<int>(),
                 ev["lr"].get<double>(), ev["loss"].get<double>(), ev["train_acc"].get<double>());
  } else if (kind == "fold") {
    std::fprintf(stderr, "  fold %d  accuracy %.4f\n", ev["fold"].get<int>() + 1, ev["accuracy"].get<double>());
  } else if (kind == "ablation_row") {
    std::fprintf(stderr, "  %-32s %s\n", ev["name"].get<std::string>().c_str(), ev["summary"].get<std::string>().c_str());
  }
}

std::string jsonl(const json& epochs) {
  std::string out;
  for (const auto& e : epochs) out += e.dump() + "\n";
  return out;
}

// Loads and resolves a config file; relative dataset paths are taken
// relative to the config file's directory.
struct LoadedConfig {
  json resolved;
  fs::path dataset;
};

LoadedConfig load_config(const fs::path& path, const Globals& g) {
  const std::string text = read_text(path);
  const std::uint64_t* seed = g.seed ? &*g.seed : nullptr;
  char* out = nullptr;
  check(tntc_config_resolve(text.c_str(), seed, g.profile ? g.profile->c_str() : nullptr, 1, &out),
        "config '" + path.string() + "'");
  LoadedConfig cfg{take_json(out), {}};
  fs::path ds = cfg.resolved.at("dataset").get<std::string>();
  if (ds.is_relative()) ds = path.parent_path() / ds;
  cfg.dataset = ds.lexically_normal();
  return cfg;
}

DatasetPtr load_dataset(const fs::path& path, const std::optional<std::string>& format) {
  tntc_dataset* d = nullptr;
  check(tntc_dataset_load(path.string().c_str(), format ? format->c_str() : nullptr, &d),
        "dataset '" + path.string() + "'");
  return DatasetPtr(d);
}

std::optional<std::string> config_format(const json& cfg) {
  if (cfg.contains("dataset_format") && cfg["dataset_format"].is_string()) return cfg["dataset_format"].get<std::string>();
  return std::nullopt;
}

void print_warnings(Run& run, const json& result) {
  if (result.contains("warnings"))
    for (const auto& w : result["warnings"]) run.note("warning: " + w.get<std::string>());
}

// ---------------------------------------------------------------- commands

struct EncodeArgs {
  std::string input;
  std::optional<std::string> format;
  bool png = false;
};

void cmd_encode(const EncodeArgs& a, const Globals& g) {
  Run run("encode", g);
  run.input("dataset", a.input);
  auto data = load_dataset(a.input, a.format);
  char* out = nullptr;
  check(tntc_export_encodings(data.get(), run.dir().string().c_str(), a.png ? 1 : 0, &out), "encode");
  const auto result = take_json(out);
  for (const auto& f : result["files"]) run.output(f.get<std::string>());
  print_warnings(run, result);
  run.set_config({{"format", a.format ? json(*a.format) : json(nullptr)}, {"png", a.png}});
  run.finish();
  if (!g.quiet) std::cout << "encoded " << tntc_dataset_size(data.get()) << " samples\n";
}

struct TrainArgs {
  std::string config;
  bool skip_cv = false;
};

void cmd_train(const TrainArgs& a, const Globals& g) {
  Run run("train", g);
  const auto cfg = load_config(a.config, g);
  run.input("config", a.config);
  run.input("dataset", cfg.dataset);
  run.set_config(cfg.resolved);
  run.set_seed(cfg.resolved["train"]["seed"].get<std::uint64_t>());
  auto data = load_dataset(cfg.dataset, config_format(cfg.resolved));
  const std::string cfg_text = cfg.resolved.dump();

  if (!a.skip_cv) {
    if (!g.quiet) std::cerr << "cross-validation (" << cfg.resolved["folds"] << " folds)\n";
    char* out = nullptr;
    check(tntc_cross_validate(cfg_text.c_str(), data.get(), progress_printer, &run, &out), "cross-validation");
    auto report = take_json(out);
    print_warnings(run, report);
    fs::create_directories(run.dir() / "folds");
    for (const auto& f : report["folds"])
      run.write("folds/fold" + std::to_string(f["fold"].get<int>() + 1) + ".jsonl", jsonl(f["log"]["epochs"]));
    report.erase("warnings");
    run.write_json("fold_report.json", report);
    if (!g.quiet) std::cout << "cross-validation accuracy " << report["summary"].get<std::string>() << "\n";
  }

  if (!g.quiet) std::cerr << "training on all samples\n";
  tntc_model* raw = nullptr;
  check(tntc_model_create(cfg_text.c_str(), &raw), "model");
  ModelPtr model(raw);
  char* out = nullptr;
  check(tntc_model_train(model.get(), data.get(), cfg_text.c_str(), progress_printer, &run, &out), "training");
  const auto log = take_json(out);
  if (a.skip_cv) print_warnings(run, log);
  run.write("train_log.jsonl", jsonl(log["epochs"]));
  const std::string extra = json{{"config", cfg.resolved}, {"steps", log["steps"]}}.dump();
  check(tntc_model_save(model.get(), (run.dir() / "model.ckpt").string().c_str(), extra.c_str()), "checkpoint");
  run.output("model.ckpt");
  run.finish();
}

struct EvalArgs {
  std::string config;
  std::string checkpoint;
};

void cmd_eval(const EvalArgs& a, const Globals& g) {
  Run run("eval", g);
  const auto cfg = load_config(a.config, g);
  run.input("config", a.config);
  run.input("dataset", cfg.dataset);
  run.input("checkpoint", a.checkpoint);
  run.set_config(cfg.resolved);
  auto data = load_dataset(cfg.dataset, config_format(cfg.resolved));
  tntc_model* raw = nullptr;
  check(tntc_model_load(a.checkpoint.c_str(), &raw), "checkpoint '" + a.checkpoint + "'");
  ModelPtr model(raw);
  char* info = nullptr;
  check(tntc_model_info(model.get(), &info), "model");
  run.set_seed(take_json(info)["seed"].get<std::uint64_t>());
  char* out = nullptr;
  check(tntc_model_evaluate(model.get(), data.get(), &out), "evaluation");
  auto result = take_json(out);
  print_warnings(run, result);
  result.erase("warnings");
  run.write_json("evaluation.json", result);
  run.finish();
  if (!g.quiet) std::cout << "accuracy " << result["accuracy"].get<double>() << " (" << result["n_correct"] << "/"
                          << result["n_samples"] << ")\n";
}

void cmd_ablate(const std::string& config, const Globals& g) {
  Run run("ablate", g);
  const auto cfg = load_config(config, g);
  run.input("config", config);
  run.input("dataset", cfg.dataset);
  run.set_config(cfg.resolved);
  run.set_seed(cfg.resolved["train"]["seed"].get<std::uint64_t>());
  auto data = load_dataset(cfg.dataset, config_format(cfg.resolved));
  char* out = nullptr;
  check(tntc_run_ablation(cfg.resolved.dump().c_str(), data.get(), progress_printer, &run, &out), "ablation");
  auto result = take_json(out);
  print_warnings(run, result);
  result.erase("warnings");
  run.write_json("ablation.json", result);
  run.write("ablation.txt", result["table"].get<std::string>());
  run.finish();
  if (!g.quiet) std::cout << result["table"].get<std::string>();
}

struct VisualizeArgs {
  std::string checkpoint;
  std::string dataset;
  std::optional<std::string> format;
  std::optional<std::string> sample;
};

void cmd_visualize(const VisualizeArgs& a, const Globals& g) {
  Run run("visualize-attention", g);
  run.input("checkpoint", a.checkpoint);
  run.input("dataset", a.dataset);
  auto data = load_dataset(a.dataset, a.format);
  if (tntc_dataset_size(data.get()) == 0) throw Failure{kData, "dataset '" + a.dataset + "' is empty"};
  tntc_model* raw = nullptr;
  check(tntc_model_load(a.checkpoint.c_str(), &raw), "checkpoint '" + a.checkpoint + "'");
  ModelPtr model(raw);
  char* info = nullptr;
  check(tntc_model_info(model.get(), &info), "model");
  const auto model_info = take_json(info);
  run.set_seed(model_info["seed"].get<std::uint64_t>());

  std::size_t index = 0;
  if (a.sample) check(tntc_dataset_find(data.get(), a.sample->c_str(), &index), "sample");
  const char* id = nullptr;
  check(tntc_dataset_sample(data.get(), index, &id, nullptr, nullptr), "sample");
  run.set_config({{"sample", id}, {"ablation", model_info["ablation"]}});

  for (int level = 1; level <= 4; ++level) {
    int tokens = 0;
    const tntc_status s = tntc_model_attention(model.get(), data.get(), index, level, nullptr, 0, &tokens);
    if (s == TNTC_ERR_UNAVAILABLE) {
      run.note("skipping level " + std::to_string(level) + ": no TCM in this model");
      continue;
    }
    check(s, "attention level " + std::to_string(level));
    std::vector<double> m(static_cast<std::size_t>(tokens) * tokens);
    check(tntc_model_attention(model.get(), data.get(), index, level, m.data(), m.size(), &tokens),
          "attention level " + std::to_string(level));
    const std::string stem = "attention_level" + std::to_string(level);
    check(tntc_write_heatmap_png(m.data(), tokens, (run.dir() / (stem + ".png")).string().c_str()), "heatmap");
    run.output(stem + ".png");
    std::string csv;
    char buf[32];
    for (int r = 0; r < tokens; ++r) {
      for (int c = 0; c < tokens; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", m[static_cast<std::size_t>(r) * tokens + c]);
        if (c) csv += ',';
        csv += buf;
      }
      csv += '\n';
    }
    run.write(stem + ".csv", csv);
    if (!g.quiet) std::cout << "level " << level << ": " << tokens << "x" << tokens << " attention map\n";
  }
  run.finish();
}

struct SynthesizeArgs {
  int per_class = 10;
  int frames = 240;
  std::string format = "csv";
};

void cmd_synthesize(const SynthesizeArgs& a, const Globals& g) {
  Run run("synthesize", g);
  const std::uint64_t seed = g.seed.value_or(0);
  run.set_seed(seed);
  run.set_config({{"per_class", a.per_class}, {"frames", a.frames}, {"format", a.format}});
  tntc_dataset* raw = nullptr;
  check(tntc_dataset_synthesize(a.per_class, a.frames, seed, &raw), "synthesize");
  DatasetPtr data(raw);
  const std::string name = a.format == "csv" ? "synthetic.csv" : "synthetic.bin";
  check(tntc_dataset_save(data.get(), (run.dir() / name).string().c_str(), a.format.c_str()), "save");
  run.output(name);
  run.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stream gait emotion recognition: encoding, training, evaluation, ablation and attention export"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  std::string profile;
  auto* seed_opt = app.add_option("--seed", seed, "Seed overriding the configuration")->option_text("UINT");
  auto* profile_opt =
      app.add_option("--profile", profile, "Default profile: paper or desk")->check(CLI::IsMember({"paper", "desk"}));
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "Only print errors");

  EncodeArgs encode;
  auto* c_encode = app.add_subcommand("encode", "Encode every sample into SJI/AFI arrays");
  c_encode->add_option("input", encode.input, "Dataset file (.csv or binary)")->required();
  c_encode->add_option("--format", encode.format, "csv or binary (default: by extension)")
      ->check(CLI::IsMember({"csv", "binary"}));
  c_encode->add_flag("--png", encode.png, "Also write 8-bit PNG previews");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Cross-validate, then train and checkpoint a model on all samples");
  c_train->add_option("config", train.config, "Run configuration (JSON)")->required();
  c_train->add_flag("--skip-cv", train.skip_cv, "Skip the k-fold protocol");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint on the configured dataset");
  c_eval->add_option("config", eval.config, "Run configuration (JSON)")->required();
  c_eval->add_option("--checkpoint", eval.checkpoint, "Model checkpoint")->required();

  std::string ablate_config;
  auto* c_ablate = app.add_subcommand("ablate", "Run the seven-row ablation suite");
  c_ablate->add_option("config", ablate_config, "Run configuration (JSON)")->required();

  VisualizeArgs vis;
  auto* c_vis = app.add_subcommand("visualize-attention", "Export per-level TCM attention heatmaps");
  c_vis->add_option("--checkpoint", vis.checkpoint, "Model checkpoint")->required();
  c_vis->add_option("--dataset", vis.dataset, "Dataset containing the sample")->required();
  c_vis->add_option("--format", vis.format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}));
  c_vis->add_option("--sample", vis.sample, "Sample id (default: first sample)");

  SynthesizeArgs synth;
  auto* c_synth = app.add_subcommand("synthesize", "Write a synthetic labelled gait dataset");
  c_synth->add_option("--per-class", synth.per_class, "Sequences per emotion")->check(CLI::PositiveNumber);
  c_synth->add_option("--frames", synth.frames, "Frames per sequence")->check(CLI::PositiveNumber);
  c_synth->add_option("--format", synth.format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}));

  for (auto* sub : {c_encode, c_train, c_eval, c_ablate, c_vis, c_synth}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  if (seed_opt->count()) g.seed = seed;
  if (profile_opt->count()) g.profile = profile;

  try {
    if (*c_encode) cmd_encode(encode, g);
    if (*c_train) cmd_train(train, g);
    if (*c_eval) cmd_eval(eval, g);
    if (*c_ablate) cmd_ablate(ablate_config, g);
    if (*c_vis) cmd_visualize(vis, g);
    if (*c_synth) cmd_synthesize(synth, g);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}
