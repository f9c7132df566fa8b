// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "tntc/gait_data.hpp"
#include "tntc/training.hpp"

namespace tntc {

enum class Profile { paper, desk };

Profile parse_profile(const std::string& name);
std::string profile_name(Profile p);

/// Network and training defaults of a profile.
ExperimentConfig profile_defaults(Profile p);

/// A parsed run configuration document. See docs/config.md for the schema.
struct RunConfig {
  std::string dataset;
  std::optional<DataFormat> dataset_format;
  Profile profile = Profile::desk;
  ExperimentConfig experiment;

  DataFormat resolved_format() const;
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<Profile> profile;
};

/// Validates `doc` against the schema. Every unknown, mistyped or
/// out-of-range key is collected and reported in a single ConfigError whose
/// message lists the offending keys. `require_dataset` makes a missing
/// "dataset" key an error.
RunConfig parse_run_config(const nlohmann::json& doc, const ConfigOverrides& overrides = {}, bool require_dataset = true);

/// Canonical snapshot of a resolved configuration (all defaults filled in).
nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const NetworkConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);

NetworkConfig network_from_json(const nlohmann::json& j);
TrainConfig train_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FoldReport& report);
nlohmann::json to_json(const Evaluation& ev);

}  // namespace tntc
