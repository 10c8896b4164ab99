// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint directory:
//   params.json   {"dtype", "seed", "config_hash", "params": [{"name", "shape", "file"}]}
//   <name>.tbmx   one tensor file per parameter

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tabmixer/nn.hpp"

namespace tabmixer {

struct CheckpointInfo {
  DType dtype = DType::f64;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// FNV-1a of `text` as 16 lowercase hex digits.
std::string config_hash(const std::string& text);

void save_checkpoint(const ParamRegistry& registry, const std::filesystem::path& dir,
                     const CheckpointInfo& info);

/// Loads values into an already-built registry. Names, shapes and dtype must
/// match exactly; a non-empty `expected_hash` must equal the stored hash.
CheckpointInfo load_checkpoint(ParamRegistry& registry, const std::filesystem::path& dir,
                               const std::string& expected_hash = {});

}  // namespace tabmixer
