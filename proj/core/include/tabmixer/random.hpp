// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string_view>
#include <utility>
#include <vector>

namespace tabmixer {

/// 64-bit FNV-1a hash; used to derive stream ids from names.
std::uint64_t fnv1a64(std::string_view text);

/// PCG32 (XSH-RR, 64-bit state, 32-bit output). Each (seed, stream) pair
/// selects an independent sequence. Integer-only state evolution, so a given
/// (seed, stream) yields the same bits on every platform.
class Pcg32 {
 public:
  using result_type = std::uint32_t;

  Pcg32(std::uint64_t seed, std::uint64_t stream);

  /// Stream keyed by name, e.g. a parameter path or a sample id.
  static Pcg32 keyed(std::uint64_t seed, std::string_view key) {
    return Pcg32(seed, fnv1a64(key));
  }

  std::uint32_t operator()() { return next_u32(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<std::uint32_t>::max(); }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (two uniforms per draw, no caching).
  double normal();

  /// Uniform integer on [0, n), rejection-sampled.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

/// Fisher-Yates shuffle driven by `rng`.
template <class T>
void shuffle(std::vector<T>& items, Pcg32& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace tabmixer
