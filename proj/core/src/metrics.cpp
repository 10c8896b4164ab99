// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tabmixer/errors.hpp"

namespace tabmixer {

MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw DimensionError("metrics need equal lengths, got " + std::to_string(pred.size()) +
                         " and " + std::to_string(target.size()));
  }
  if (pred.empty()) throw ValidationError("metrics need at least one prediction");
  MetricsReport r;
  r.n = pred.size();
  r.abs_errors.resize(r.n);
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double pct_sum = 0.0;
  std::size_t pct_n = 0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double e = pred[i] - target[i];
    const double a = std::fabs(e);
    r.abs_errors[i] = a;
    abs_sum += a;
    sq_sum += e * e;
    if (target[i] == 0.0) {
      ++r.mape_excluded;
    } else {
      pct_sum += a / std::fabs(target[i]);
      ++pct_n;
    }
  }
  const double n = static_cast<double>(r.n);
  r.mae = abs_sum / n;
  // Rounding can leave the root an ulp below the mean when all errors are equal.
  r.rmse = std::max(std::sqrt(sq_sum / n), r.mae);
  r.mape = pct_n > 0 ? 100.0 * pct_sum / static_cast<double>(pct_n) : 0.0;
  return r;
}

}  // namespace tabmixer
