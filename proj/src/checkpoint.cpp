// SPDX-License-Identifier: Apache-2.0
#include "tntc/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "tntc/config.hpp"
#include "tntc/errors.hpp"

namespace tntc {

namespace {

constexpr char kMagic[8] = {'T', 'N', 'T', 'C', 'C', 'K', 'P', 'T'};

struct Entry {
  std::string name;
  Tensor* tensor;
};

std::vector<Entry> entries(TwoStreamNetwork& model) {
  std::vector<Entry> out;
  for (auto& p : model.parameters()) out.push_back({p.name, &p.param->value});
  for (auto& b : model.buffers()) out.push_back({b.name, b.value});
  return out;
}

nlohmann::json read_header(std::ifstream& in, const std::filesystem::path& path) {
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw ParseError("'" + path.string() + "' is not a checkpoint archive");
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (!in) throw ParseError("truncated checkpoint header in '" + path.string() + "'");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad checkpoint header: " + std::string(e.what()));
  }
}

}  // namespace

void save_checkpoint(TwoStreamNetwork& model, const std::filesystem::path& path, const nlohmann::json& extra) {
  auto list = entries(model);
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& e : list) {
    tensors.push_back({{"name", e.name}, {"shape", e.tensor->shape()}, {"offset", offset}});
    offset += e.tensor->size();
  }
  nlohmann::json header{{"format", "tntc-checkpoint"},
                        {"version", 1},
                        {"seed", model.seed()},
                        {"ablation", model.ablation().name()},
                        {"network", to_json(model.config())},
                        {"tensors", tensors}};
  if (!extra.is_null()) header["extra"] = extra;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out.write(kMagic, 8);
  const auto len = static_cast<std::uint32_t>(text.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::vector<float> buf;
  for (const auto& e : list) {
    buf.assign(e.tensor->values().begin(), e.tensor->values().end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

nlohmann::json read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  return read_header(in, path);
}

TwoStreamNetwork load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const auto header = read_header(in, path);
  try {
    TwoStreamNetwork model(network_from_json(header.at("network")), Ablation::parse(header.at("ablation").get<std::string>()),
                           header.at("seed").get<std::uint64_t>());
    auto list = entries(model);
    const auto& tensors = header.at("tensors");
    if (tensors.size() != list.size())
      throw ParseError("checkpoint has " + std::to_string(tensors.size()) + " tensors, model expects " +
                       std::to_string(list.size()));
    std::vector<float> buf;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& t = tensors[i];
      if (t.at("name").get<std::string>() != list[i].name ||
          t.at("shape").get<std::vector<int>>() != list[i].tensor->shape())
        throw ParseError("checkpoint tensor '" + t.at("name").get<std::string>() + "' does not match model tensor '" +
                         list[i].name + "'");
      buf.resize(list[i].tensor->size());
      in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
      if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float))
        throw ParseError("truncated checkpoint data at '" + list[i].name + "'");
      std::copy(buf.begin(), buf.end(), list[i].tensor->data());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad checkpoint header: " + std::string(e.what()));
  }
}

}  // namespace tntc
