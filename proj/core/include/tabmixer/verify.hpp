// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded end-to-end gradient checks. Each scenario builds one module in f64,
// initializes it from the seed (affine scales and shifts are randomized too),
// draws random inputs and a random target, and compares reverse-mode
// gradients of mean((out - target)^2) against central differences for every
// parameter and input.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "tabmixer/fusion.hpp"
#include "tabmixer/gradcheck.hpp"

namespace tabmixer {

struct GradScenario {
  /// tabmixer, film, daft, backbone or model.
  std::string module = "tabmixer";
  std::uint64_t seed = 0;
  /// Feature-map extents at the fusion point, and the tabular width.
  std::size_t C = 8;
  std::size_t T = 4;
  std::size_t H = 4;
  std::size_t W = 4;
  std::size_t D = 5;
  bool enable_spatial = true;
  bool enable_temporal = true;
  bool enable_channel = true;
  bool enable_tabular = true;
  /// Fusion of the full model scenario.
  FusionKind fusion = FusionKind::tabmixer;
  /// Perturb at most this many scalars per tensor (0 = all).
  std::size_t max_per_param = 0;
};

/// Backbone and model scenarios use a (2, 8, 8)-patch backbone with C
/// channels whose output is [C, T, H, W], i.e. video [1, 2T, 8H, 8W].
GradCheckResult run_gradcheck(const GradScenario& scenario);

}  // namespace tabmixer
