// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/noise.hpp"

#include <charconv>
#include <cmath>
#include <tuple>

#include "tabmixer/errors.hpp"
#include "tabmixer/random.hpp"

namespace tabmixer {

std::string_view to_string(NoiseTarget target) {
  switch (target) {
    case NoiseTarget::imaging: return "imaging";
    case NoiseTarget::tabular: return "tabular";
    case NoiseTarget::both: return "both";
  }
  return "imaging";
}

NoiseTarget parse_noise_target(std::string_view name) {
  for (auto t : {NoiseTarget::imaging, NoiseTarget::tabular, NoiseTarget::both}) {
    if (to_string(t) == name) return t;
  }
  throw ValidationError("unknown noise target '" + std::string(name) +
                        "' (expected imaging, tabular or both)");
}

void NoiseSweepConfig::validate() const {
  if (sigmas.empty()) throw ValidationError("noise sweep needs at least one sigma");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] >= 0.0) || !std::isfinite(sigmas[i])) {
      throw ValidationError("noise sigmas must be finite and non-negative");
    }
    if (i > 0 && !(sigmas[i] > sigmas[i - 1])) {
      throw ValidationError("noise sigmas must be strictly ascending");
    }
  }
  if (repeats == 0) throw ValidationError("noise sweep needs at least one repeat");
}

namespace {

Tensor noisy_video(const Tensor& video, double sigma, Pcg32& rng) {
  const auto v = video.values();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double scale = sigma * std::sqrt(ss / static_cast<double>(v.size()));
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x += scale * rng.normal();
  return Tensor(video.shape(), std::move(out), video.dtype());
}

Tensor noisy_tab(const Tensor& tab, const std::vector<bool>& numeric, double sigma, Pcg32& rng) {
  const auto v = tab.values();
  std::vector<double> out(v.begin(), v.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (numeric[i]) out[i] += sigma * rng.normal();
  }
  return Tensor(tab.shape(), std::move(out), tab.dtype());
}

// Mean and sd shifted by the first value: identical inputs give that value
// exactly and a zero sd.
std::pair<double, double> shifted_mean_sd(const std::vector<double>& xs) {
  const double x0 = xs.front();
  double s = 0.0;
  for (double x : xs) s += x - x0;
  const double n = static_cast<double>(xs.size());
  const double mean = x0 + s / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<PreparedSample> add_noise(const std::vector<PreparedSample>& samples,
                                      const std::vector<bool>& numeric_mask,
                                      const NoiseSweepConfig& cfg, std::size_t sigma_index,
                                      std::size_t repeat) {
  const double sigma = cfg.sigmas.at(sigma_index);
  std::vector<PreparedSample> out = samples;
  if (sigma == 0.0) return out;
  const bool imaging = cfg.target != NoiseTarget::tabular;
  const bool tabular = cfg.target != NoiseTarget::imaging;
  for (auto& s : out) {
    Pcg32 rng = Pcg32::keyed(cfg.seed, "noise/" + std::to_string(sigma_index) + "/" +
                                           std::to_string(repeat) + "/" + s.id);
    if (imaging) s.video = noisy_video(s.video, sigma, rng);
    if (tabular && s.tab.defined()) {
      if (numeric_mask.size() != s.tab.numel()) {
        throw DimensionError("numeric mask width " + std::to_string(numeric_mask.size()) +
                             " does not match tabular width " + std::to_string(s.tab.numel()));
      }
      s.tab = noisy_tab(s.tab, numeric_mask, sigma, rng);
    }
  }
  return out;
}

std::vector<NoiseRow> noise_sweep(const TrainedRun& run,
                                  const std::vector<PreparedSample>& samples,
                                  const NoiseSweepConfig& cfg, std::size_t workers) {
  cfg.validate();
  const std::vector<bool> mask = run.schema.numeric_mask();
  std::vector<NoiseRow> rows;
  for (std::size_t si = 0; si < cfg.sigmas.size(); ++si) {
    NoiseRow row;
    row.sigma = cfg.sigmas[si];
    row.repeats = cfg.repeats;
    std::vector<double> rmses;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      const Evaluation e = evaluate(run, add_noise(samples, mask, cfg, si, r), workers);
      row.maes.push_back(e.metrics.mae);
      rmses.push_back(e.metrics.rmse);
    }
    std::tie(row.mae_mean, row.mae_sd) = shifted_mean_sd(row.maes);
    row.rmse_mean = shifted_mean_sd(rmses).first;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string noise_csv(const std::vector<NoiseRow>& rows, NoiseTarget target) {
  std::string out = "sigma,target,repeats,mae_mean,mae_sd,rmse_mean\n";
  for (const auto& r : rows) {
    out += fmt(r.sigma) + "," + std::string(to_string(target)) + "," +
           std::to_string(r.repeats) + "," + fmt(r.mae_mean) + "," + fmt(r.mae_sd) + "," +
           fmt(r.rmse_mean) + "\n";
  }
  return out;
}

}  // namespace tabmixer
