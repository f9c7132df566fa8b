// SPDX-License-Identifier: Apache-2.0
#include "tntc/config.hpp"

#include <set>
#include <vector>

#include "tntc/errors.hpp"

namespace tntc {

using nlohmann::json;

Profile parse_profile(const std::string& name) {
  if (name == "paper") return Profile::paper;
  if (name == "desk") return Profile::desk;
  throw ConfigError("profile: expected 'paper' or 'desk', got '" + name + "'");
}

std::string profile_name(Profile p) { return p == Profile::paper ? "paper" : "desk"; }

ExperimentConfig profile_defaults(Profile p) {
  ExperimentConfig e;
  if (p == Profile::paper) {
    e.network = NetworkConfig::paper();
    e.train = TrainConfig::paper();
  } else {
    e.network = NetworkConfig::reduced();
    e.train = TrainConfig::desk();
  }
  return e;
}

DataFormat RunConfig::resolved_format() const { return dataset_format ? *dataset_format : format_from_path(dataset); }

namespace {

// Reads typed fields and accumulates a message per offending key.
class FieldReader {
 public:
  explicit FieldReader(std::vector<std::string>& problems) : problems_(problems) {}

  void problem(const std::string& key, const std::string& what) { problems_.push_back(key + ": " + what); }

  void check_keys(const json& obj, const std::string& prefix, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : obj.items())
      if (!allowed.count(k)) problem(prefix + k, "unknown key");
  }

  template <typename Int>
  void integer(const json& obj, const std::string& key, const std::string& path, Int& out, long long min_value) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) return problem(path, "expected an integer");
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (min_value > 0 && u < static_cast<std::uint64_t>(min_value))
        return problem(path, "must be >= " + std::to_string(min_value));
      out = static_cast<Int>(u);
      return;
    }
    const auto x = v.get<long long>();
    if (x < min_value) return problem(path, "must be >= " + std::to_string(min_value));
    out = static_cast<Int>(x);
  }

  void real(const json& obj, const std::string& key, const std::string& path, double& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number()) return problem(path, "expected a number");
    out = v.get<double>();
  }

  void boolean(const json& obj, const std::string& key, const std::string& path, bool& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) return problem(path, "expected true or false");
    out = v.get<bool>();
  }

  template <std::size_t N>
  void int_array(const json& obj, const std::string& key, const std::string& path, std::array<int, N>& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != N) return problem(path, "expected an array of " + std::to_string(N) + " integers");
    for (std::size_t i = 0; i < N; ++i) {
      if (!v[i].is_number_integer() || v[i].get<long long>() <= 0)
        return problem(path, "expected an array of " + std::to_string(N) + " positive integers");
      out[i] = v[i].get<int>();
    }
  }

 private:
  std::vector<std::string>& problems_;
};

void read_network(const json& j, NetworkConfig& cfg, FieldReader& r) {
  if (!j.is_object()) return r.problem("network", "expected an object");
  r.check_keys(j, "network.", {"channel_widths", "blocks_per_level", "input_size", "zero_init_residual", "tcm_depth",
                               "tcm_heads", "tcm_mlp_ratio", "head_hidden"});
  r.int_array(j, "channel_widths", "network.channel_widths", cfg.backbone.channel_widths);
  r.int_array(j, "blocks_per_level", "network.blocks_per_level", cfg.backbone.blocks_per_level);
  r.integer(j, "input_size", "network.input_size", cfg.backbone.input_size, 1);
  r.boolean(j, "zero_init_residual", "network.zero_init_residual", cfg.backbone.zero_init_residual);
  r.integer(j, "tcm_depth", "network.tcm_depth", cfg.tcm_depth, 1);
  r.integer(j, "tcm_heads", "network.tcm_heads", cfg.tcm_heads, 1);
  r.real(j, "tcm_mlp_ratio", "network.tcm_mlp_ratio", cfg.tcm_mlp_ratio);
  std::array<int, 2> hidden{cfg.head.hidden1, cfg.head.hidden2};
  r.int_array(j, "head_hidden", "network.head_hidden", hidden);
  cfg.head = {hidden[0], hidden[1]};
}

void read_train(const json& j, TrainConfig& cfg, FieldReader& r) {
  if (!j.is_object()) return r.problem("train", "expected an object");
  r.check_keys(j, "train.", {"epochs", "lr0", "lr_decay", "decay_every", "momentum", "weight_decay", "batch_size", "seed",
                             "ablation"});
  r.integer(j, "epochs", "train.epochs", cfg.epochs, 1);
  r.real(j, "lr0", "train.lr0", cfg.lr0);
  r.real(j, "lr_decay", "train.lr_decay", cfg.lr_decay);
  r.integer(j, "decay_every", "train.decay_every", cfg.decay_every, 1);
  r.real(j, "momentum", "train.momentum", cfg.momentum);
  r.real(j, "weight_decay", "train.weight_decay", cfg.weight_decay);
  r.integer(j, "batch_size", "train.batch_size", cfg.batch_size, 1);
  r.integer(j, "seed", "train.seed", cfg.seed, 0);
  if (j.contains("ablation")) {
    if (!j["ablation"].is_string()) {
      r.problem("train.ablation", "expected a string");
    } else {
      try {
        cfg.ablation = Ablation::parse(j["ablation"].get<std::string>());
      } catch (const ConfigError& e) {
        r.problem("train.ablation", e.what());
      }
    }
  }
}

}  // namespace

RunConfig parse_run_config(const json& doc, const ConfigOverrides& overrides, bool require_dataset) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  std::vector<std::string> problems;
  FieldReader r(problems);
  r.check_keys(doc, "", {"dataset", "dataset_format", "profile", "seed", "folds", "split_seed", "max_steps", "network", "train"});

  RunConfig cfg;
  if (overrides.profile) {
    cfg.profile = *overrides.profile;
  } else if (doc.contains("profile")) {
    if (!doc["profile"].is_string())
      r.problem("profile", "expected \"paper\" or \"desk\"");
    else
      try {
        cfg.profile = parse_profile(doc["profile"].get<std::string>());
      } catch (const ConfigError& e) {
        r.problem("profile", e.what());
      }
  }
  cfg.experiment = profile_defaults(cfg.profile);

  if (doc.contains("dataset")) {
    if (!doc["dataset"].is_string() || doc["dataset"].get<std::string>().empty())
      r.problem("dataset", "expected a non-empty path string");
    else
      cfg.dataset = doc["dataset"].get<std::string>();
  } else if (require_dataset) {
    r.problem("dataset", "missing required key");
  }
  if (doc.contains("dataset_format")) {
    const auto& f = doc["dataset_format"];
    if (f == "csv")
      cfg.dataset_format = DataFormat::csv;
    else if (f == "binary")
      cfg.dataset_format = DataFormat::binary;
    else
      r.problem("dataset_format", "expected \"csv\" or \"binary\"");
  }

  auto& e = cfg.experiment;
  if (doc.contains("network")) read_network(doc["network"], e.network, r);
  if (doc.contains("train")) read_train(doc["train"], e.train, r);

  std::uint64_t seed = e.train.seed;
  r.integer(doc, "seed", "seed", seed, 0);
  if (overrides.seed) seed = *overrides.seed;
  if (doc.contains("seed") || overrides.seed) e.train.seed = seed;
  e.split_seed = e.train.seed;
  r.integer(doc, "split_seed", "split_seed", e.split_seed, 0);
  r.integer(doc, "folds", "folds", e.folds, 2);
  r.integer(doc, "max_steps", "max_steps", e.max_steps, 0);

  if (problems.empty()) {
    try {
      e.network.validate();
    } catch (const ConfigError& err) {
      problems.push_back(err.what());
    }
    try {
      e.train.validate();
    } catch (const ConfigError& err) {
      problems.push_back(err.what());
    }
  }

  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return cfg;
}

json to_json(const NetworkConfig& cfg) {
  return json{{"channel_widths", cfg.backbone.channel_widths},
              {"blocks_per_level", cfg.backbone.blocks_per_level},
              {"input_size", cfg.backbone.input_size},
              {"zero_init_residual", cfg.backbone.zero_init_residual},
              {"tcm_depth", cfg.tcm_depth},
              {"tcm_heads", cfg.tcm_heads},
              {"tcm_mlp_ratio", cfg.tcm_mlp_ratio},
              {"head_hidden", {cfg.head.hidden1, cfg.head.hidden2}}};
}

json to_json(const TrainConfig& cfg) {
  return json{{"epochs", cfg.epochs},         {"lr0", cfg.lr0},
              {"lr_decay", cfg.lr_decay},     {"decay_every", cfg.decay_every},
              {"momentum", cfg.momentum},     {"weight_decay", cfg.weight_decay},
              {"batch_size", cfg.batch_size}, {"seed", cfg.seed},
              {"ablation", cfg.ablation.name()}};
}

json to_json(const RunConfig& cfg) {
  json j{{"profile", profile_name(cfg.profile)},
         {"seed", cfg.experiment.train.seed},
         {"split_seed", cfg.experiment.split_seed},
         {"folds", cfg.experiment.folds},
         {"max_steps", cfg.experiment.max_steps},
         {"network", to_json(cfg.experiment.network)},
         {"train", to_json(cfg.experiment.train)}};
  if (!cfg.dataset.empty()) j["dataset"] = cfg.dataset;
  if (cfg.dataset_format) j["dataset_format"] = *cfg.dataset_format == DataFormat::csv ? "csv" : "binary";
  return j;
}

NetworkConfig network_from_json(const json& j) {
  std::vector<std::string> problems;
  FieldReader r(problems);
  NetworkConfig cfg = NetworkConfig::paper();
  read_network(j, cfg, r);
  if (!problems.empty()) throw ConfigError("invalid network config: " + problems.front());
  cfg.validate();
  return cfg;
}

TrainConfig train_from_json(const json& j) {
  std::vector<std::string> problems;
  FieldReader r(problems);
  TrainConfig cfg;
  read_train(j, cfg, r);
  if (!problems.empty()) throw ConfigError("invalid train config: " + problems.front());
  cfg.validate();
  return cfg;
}

json to_json(const Evaluation& ev) {
  return json{{"accuracy", ev.accuracy}, {"n_correct", ev.n_correct}, {"n_samples", ev.n_samples}, {"confusion", ev.confusion}};
}

json to_json(const FoldReport& report) {
  return json{{"per_fold_accuracy", report.per_fold_accuracy},
              {"mean", report.mean},
              {"std", report.std},
              {"confusion", report.confusion},
              {"summary", report.render()}};
}

}  // namespace tntc
