// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// TBMX tensor container, used for videos, checkpoints and fixtures:
//
//   offset 0   4 bytes  magic "TBMX"
//   offset 4   u16      version (1)
//   offset 6   u8       dtype (1 = f32, 2 = f64)
//   offset 7   u8       rank
//   offset 8   rank x u64 extents
//   ...        row-major payload
//
// All integers and floats are little-endian.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "tabmixer/tensor.hpp"

namespace tabmixer {

inline constexpr std::uint16_t kTbmxVersion = 1;

std::vector<std::uint8_t> encode_tbmx(const Tensor& tensor);

/// `source` names the origin in error messages.
Tensor decode_tbmx(std::span<const std::uint8_t> bytes, std::string_view source = "<memory>");

void write_tbmx(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tbmx(const std::filesystem::path& path);

}  // namespace tabmixer
