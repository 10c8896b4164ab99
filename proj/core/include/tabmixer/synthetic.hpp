// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic multimodal regression task. Each sample carries two latents:
//   u ~ U(0,1), visible only in the video as the peak amplitude of a Gaussian
//     blob moving along a periodic trajectory;
//   v ~ U(0,1), visible only in the tabular record as the "marker" feature.
// Target: y = 20 + 15 * (a_img * u + a_tab * v) / (a_img + a_tab) + noise_std * N(0,1).
// Distractor numerics n1.. are N(0,1); categoricals c1.. take levels A/B/C.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tabmixer/dataset.hpp"

namespace tabmixer {

struct SyntheticConfig {
  std::size_t n_samples = 550;
  std::uint64_t seed = 0;
  std::size_t frames = 8;
  std::size_t height = 32;
  std::size_t width = 32;
  /// Numeric features including the marker.
  std::size_t n_numeric = 4;
  std::size_t n_categorical = 1;
  double a_img = 1.0;
  double a_tab = 1.0;
  double noise_std = 1.0;
  std::vector<double> bin_edges{20.0, 25.0, 30.0};
  /// Probability that a sample reuses the previous sample's patient id.
  double repeat_patient_prob = 0.1;

  void validate() const;
};

struct SampleLatents {
  double u = 0.0;
  double v = 0.0;
};

struct SyntheticData {
  Dataset dataset;
  std::vector<SampleLatents> latents;  // parallel to dataset.samples
};

SyntheticData make_synthetic(const SyntheticConfig& cfg);

/// make_synthetic, then write_dataset into `dir` plus latents.csv (id,u,v).
SyntheticData generate_synthetic(const SyntheticConfig& cfg, const std::filesystem::path& dir);

}  // namespace tabmixer
