// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Noise-robustness sweep. For every sigma and repeat, Gaussian noise is added
// to the evaluation inputs only:
//   imaging: x += sigma * std(video) * N(0,1) per pixel, std over that video;
//   tabular: x += sigma * N(0,1) on standardized numeric columns, which have
//            unit training std (one-hot columns are left untouched).
// Each sample draws from its own stream keyed by (seed, sigma index, repeat,
// sample id). sigma = 0 adds nothing, so its row equals plain evaluation.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tabmixer/train.hpp"

namespace tabmixer {

enum class NoiseTarget { imaging, tabular, both };

std::string_view to_string(NoiseTarget target);
NoiseTarget parse_noise_target(std::string_view name);

struct NoiseSweepConfig {
  NoiseTarget target = NoiseTarget::imaging;
  std::vector<double> sigmas{0.0, 0.25, 0.5, 1.0, 2.0};
  std::uint64_t seed = 0;
  std::size_t repeats = 5;

  void validate() const;
};

struct NoiseRow {
  double sigma = 0.0;
  std::size_t repeats = 0;
  double mae_mean = 0.0;
  double mae_sd = 0.0;  // 1/(n-1) over repeats, 0 for a single repeat
  double rmse_mean = 0.0;
  std::vector<double> maes;
};

/// Copy of `samples` with noise for one (sigma index, repeat) cell.
std::vector<PreparedSample> add_noise(const std::vector<PreparedSample>& samples,
                                      const std::vector<bool>& numeric_mask,
                                      const NoiseSweepConfig& cfg, std::size_t sigma_index,
                                      std::size_t repeat);

std::vector<NoiseRow> noise_sweep(const TrainedRun& run,
                                  const std::vector<PreparedSample>& samples,
                                  const NoiseSweepConfig& cfg, std::size_t workers = 1);

/// sigma,target,repeats,mae_mean,mae_sd,rmse_mean
std::string noise_csv(const std::vector<NoiseRow>& rows, NoiseTarget target);

}  // namespace tabmixer
