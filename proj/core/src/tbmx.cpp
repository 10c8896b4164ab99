// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/tbmx.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "tabmixer/errors.hpp"

namespace tabmixer {

namespace {

constexpr char kMagic[4] = {'T', 'B', 'M', 'X'};
constexpr std::size_t kFixedHeader = 8;

template <class U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <class U>
U get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(static_cast<U>(bytes[offset + i]) << (8 * i));
  }
  return value;
}

[[noreturn]] void fail(std::string_view source, std::size_t offset, const std::string& what) {
  throw ParseError(std::string(source) + ": byte " + std::to_string(offset) + ": " + what);
}

}  // namespace

std::vector<std::uint8_t> encode_tbmx(const Tensor& tensor) {
  const auto& shape = tensor.shape();
  if (shape.size() > 255) throw ValidationError("TBMX supports rank <= 255");
  const std::size_t width = tensor.dtype() == DType::f32 ? 4 : 8;
  std::vector<std::uint8_t> out;
  out.reserve(kFixedHeader + 8 * shape.size() + width * tensor.numel());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(out, kTbmxVersion);
  out.push_back(static_cast<std::uint8_t>(tensor.dtype()));
  out.push_back(static_cast<std::uint8_t>(shape.size()));
  for (auto e : shape) put_le<std::uint64_t>(out, e);
  for (double v : tensor.values()) {
    if (tensor.dtype() == DType::f32) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

Tensor decode_tbmx(std::span<const std::uint8_t> bytes, std::string_view source) {
  if (bytes.size() < kFixedHeader) fail(source, bytes.size(), "truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(source, 0, "bad magic (expected TBMX)");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kTbmxVersion) {
    fail(source, 4, "unsupported version " + std::to_string(version));
  }
  const std::uint8_t code = bytes[6];
  if (code != 1 && code != 2) fail(source, 6, "unknown dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const std::size_t rank = bytes[7];
  if (rank == 0) fail(source, 7, "rank must be at least 1");

  std::size_t offset = kFixedHeader;
  if (bytes.size() < offset + 8 * rank) fail(source, bytes.size(), "truncated extents");
  Shape shape(rank);
  std::size_t count = 1;
  for (std::size_t d = 0; d < rank; ++d) {
    const auto e = get_le<std::uint64_t>(bytes, offset);
    if (e == 0) fail(source, offset, "zero extent on axis " + std::to_string(d));
    shape[d] = static_cast<std::size_t>(e);
    count *= shape[d];
    offset += 8;
  }

  const std::size_t width = dtype == DType::f32 ? 4 : 8;
  const std::size_t expected = offset + width * count;
  if (bytes.size() != expected) {
    fail(source, std::min(bytes.size(), expected),
         "payload size mismatch: expected " + std::to_string(expected) + " bytes, file has " +
             std::to_string(bytes.size()));
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i, offset += width) {
    values[i] = dtype == DType::f32
                    ? static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset)))
                    : std::bit_cast<double>(get_le<std::uint64_t>(bytes, offset));
  }
  return Tensor(std::move(shape), std::move(values), dtype);
}

void write_tbmx(const std::filesystem::path& path, const Tensor& tensor) {
  const auto bytes = encode_tbmx(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor read_tbmx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_tbmx(bytes, path.string());
}

}  // namespace tabmixer
