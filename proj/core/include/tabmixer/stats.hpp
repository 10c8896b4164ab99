// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

namespace tabmixer {

/// I_x(a, b) for a, b > 0 and x in [0, 1], by Lentz's continued fraction in
/// extended precision.
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_tailed_p(double t, double df);

/// P(F' >= f) for the F distribution with (d1, d2) degrees of freedom.
double f_survival(double f, double d1, double d2);

struct PairedTTest {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
  double mean_diff = 0.0;
  /// Set when every difference is equal and non-zero (t is infinite, p = 0).
  bool degenerate = false;
};

/// Two-tailed paired t-test on d = a - b with the 1/(n-1) standard deviation.
PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b);

inline constexpr double kFRegressionCap = 1e12;

struct FRegression {
  double r = 0.0;
  double f = 0.0;
  double p = 1.0;
  /// False for a constant feature or target; such features are never selected.
  bool valid = false;
};

/// Univariate F-test: r = pearson(x, y), F = r^2 / (1 - r^2) * (n - 2) capped
/// at kFRegressionCap, p from F(1, n - 2).
FRegression f_regression(std::span<const double> x, std::span<const double> y);

}  // namespace tabmixer
