// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "json.hpp"
#include "tntc/network.hpp"

namespace tntc {

/// Archive layout: 8-byte magic "TNTCCKPT", u32 little-endian header length,
/// UTF-8 JSON header, then every parameter and buffer as little-endian
/// float32 in header order. The header records the network config, the
/// ablation, the seed and each tensor's name, shape and element offset.
void save_checkpoint(TwoStreamNetwork& model, const std::filesystem::path& path, const nlohmann::json& extra = {});
TwoStreamNetwork load_checkpoint(const std::filesystem::path& path);

/// Reads only the JSON header.
nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

}  // namespace tntc
