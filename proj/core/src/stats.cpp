// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tabmixer/errors.hpp"

namespace tabmixer {

namespace {

using real = long double;

// Continued fraction for I_x(a, b), valid for x < (a + 1) / (a + b + 2).
real beta_cf(real a, real b, real x) {
  constexpr real tiny = 1e-300L;
  constexpr real eps = std::numeric_limits<real>::epsilon();
  real c = 1.0L;
  real d = 1.0L - (a + b) * x / (a + 1.0L);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0L / d;
  real h = d;
  for (int m = 1; m <= 10000; ++m) {
    const real rm = static_cast<real>(m);
    const real m2 = 2.0L * rm;
    real aa = rm * (b - rm) * x / ((a + m2 - 1.0L) * (a + m2));
    d = 1.0L + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0L + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0L / d;
    h *= d * c;
    aa = -(a + rm) * (a + b + rm) * x / ((a + m2) * (a + m2 + 1.0L));
    d = 1.0L + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0L + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0L / d;
    const real delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0L) < eps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw ValidationError("incomplete beta needs a, b > 0 and x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const real la = a;
  const real lb = b;
  const real lx = x;
  const real log_front = std::lgamma(la + lb) - std::lgamma(la) - std::lgamma(lb) +
                         la * std::log(lx) + lb * std::log1p(-lx);
  const real front = std::exp(log_front);
  if (lx < (la + 1.0L) / (la + lb + 2.0L)) {
    return static_cast<double>(front * beta_cf(la, lb, lx) / la);
  }
  return static_cast<double>(1.0L - front * beta_cf(lb, la, 1.0L - lx) / lb);
}

double student_t_two_tailed_p(double t, double df) {
  if (!(df > 0.0)) throw ValidationError("Student t needs df > 0");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

double f_survival(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw ValidationError("F distribution needs d1, d2 > 0");
  if (f <= 0.0) return 1.0;
  return regularized_incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("paired t-test needs equal lengths, got " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()));
  }
  const std::size_t n = a.size();
  if (n < 2) throw ValidationError("paired t-test needs at least two pairs");
  real mean = 0.0L;
  for (std::size_t i = 0; i < n; ++i) mean += static_cast<real>(a[i]) - b[i];
  mean /= static_cast<real>(n);
  real ss = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const real d = static_cast<real>(a[i]) - b[i] - mean;
    ss += d * d;
  }
  PairedTTest out;
  out.df = n - 1;
  out.mean_diff = static_cast<double>(mean);
  const real sd = std::sqrt(ss / static_cast<real>(n - 1));
  if (sd == 0.0L) {
    if (mean == 0.0L) return out;
    out.t = mean > 0.0L ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
    out.p = 0.0;
    out.degenerate = true;
    return out;
  }
  out.t = static_cast<double>(mean / (sd / std::sqrt(static_cast<real>(n))));
  out.p = student_t_two_tailed_p(out.t, static_cast<double>(out.df));
  return out;
}

FRegression f_regression(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionError("f_regression needs equal lengths, got " + std::to_string(x.size()) +
                         " and " + std::to_string(y.size()));
  }
  const std::size_t n = x.size();
  if (n < 3) throw ValidationError("f_regression needs at least three samples");
  real mx = 0.0L;
  real my = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<real>(n);
  my /= static_cast<real>(n);
  real sxy = 0.0L;
  real sxx = 0.0L;
  real syy = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const real dx = x[i] - mx;
    const real dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  FRegression out;
  if (sxx == 0.0L || syy == 0.0L) return out;
  out.valid = true;
  real r = sxy / std::sqrt(sxx * syy);
  if (r > 1.0L) r = 1.0L;
  if (r < -1.0L) r = -1.0L;
  out.r = static_cast<double>(r);
  const real r2 = r * r;
  const real df = static_cast<real>(n - 2);
  const real f = r2 >= 1.0L ? static_cast<real>(kFRegressionCap) : r2 / (1.0L - r2) * df;
  out.f = static_cast<double>(std::min(f, static_cast<real>(kFRegressionCap)));
  out.p = f_survival(out.f, 1.0, static_cast<double>(n - 2));
  return out;
}

}  // namespace tabmixer
