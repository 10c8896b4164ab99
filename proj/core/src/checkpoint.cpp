// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/checkpoint.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tabmixer/errors.hpp"
#include "tabmixer/random.hpp"
#include "tabmixer/tbmx.hpp"

namespace tabmixer {

namespace fs = std::filesystem;

std::string config_hash(const std::string& text) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

void save_checkpoint(const ParamRegistry& registry, const fs::path& dir,
                     const CheckpointInfo& info) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json params = nlohmann::json::array();
  for (const auto& entry : registry.entries()) {
    const std::string file = entry.name + ".tbmx";
    write_tbmx(dir / file, entry.tensor);
    params.push_back({{"name", entry.name}, {"shape", entry.tensor.shape()}, {"file", file}});
  }
  const nlohmann::json doc{{"dtype", std::string(to_string(registry.dtype()))},
                           {"seed", info.seed},
                           {"config_hash", info.config_hash},
                           {"params", std::move(params)}};
  std::ofstream out(dir / "params.json", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "params.json").string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + (dir / "params.json").string());
}

CheckpointInfo load_checkpoint(ParamRegistry& registry, const fs::path& dir,
                               const std::string& expected_hash) {
  const fs::path index = dir / "params.json";
  std::ifstream in(index, std::ios::binary);
  if (!in) throw IoError("cannot open " + index.string());
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(index.string() + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }

  CheckpointInfo info;
  try {
    info.dtype = parse_dtype(doc.at("dtype").get<std::string>());
    info.seed = doc.at("seed").get<std::uint64_t>();
    info.config_hash = doc.at("config_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(index.string() + ": " + e.what());
  }
  if (info.dtype != registry.dtype()) {
    throw ValidationError("checkpoint dtype " + std::string(to_string(info.dtype)) +
                          " does not match model dtype " +
                          std::string(to_string(registry.dtype())));
  }
  if (!expected_hash.empty() && expected_hash != info.config_hash) {
    throw ValidationError("checkpoint config hash " + info.config_hash +
                          " does not match expected " + expected_hash);
  }

  const auto& stored = doc.at("params");
  if (stored.size() != registry.size()) {
    throw ValidationError("checkpoint holds " + std::to_string(stored.size()) +
                          " parameters, model has " + std::to_string(registry.size()));
  }
  for (const auto& item : stored) {
    const std::string name = item.at("name").get<std::string>();
    const ParamEntry* entry = registry.find(name);
    if (!entry) throw ValidationError("checkpoint parameter '" + name + "' is not in the model");
    const Tensor loaded = read_tbmx(dir / item.at("file").get<std::string>());
    if (loaded.shape() != entry->tensor.shape() || loaded.dtype() != entry->tensor.dtype()) {
      throw DimensionError("checkpoint parameter '" + name + "' has shape " +
                           shape_str(loaded.shape()) + ", model expects " +
                           shape_str(entry->tensor.shape()));
    }
    Tensor target = entry->tensor;
    const auto src = loaded.values();
    std::copy(src.begin(), src.end(), target.mutable_values().begin());
  }
  return info;
}

}  // namespace tabmixer
