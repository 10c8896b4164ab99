// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tabmixer {

struct MetricsReport {
  double mae = 0.0;
  double rmse = 0.0;
  /// Percent; targets equal to zero are left out and counted in mape_excluded.
  double mape = 0.0;
  std::vector<double> abs_errors;
  std::size_t n = 0;
  std::size_t mape_excluded = 0;
};

/// Errors accumulate in input order, so equal inputs give bit-identical reports.
MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> target);

}  // namespace tabmixer
