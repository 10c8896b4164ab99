// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/synthetic.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "tabmixer/errors.hpp"
#include "tabmixer/random.hpp"

namespace tabmixer {

void SyntheticConfig::validate() const {
  if (n_samples == 0) throw ValidationError("synthetic task needs at least one sample");
  if (frames == 0 || height == 0 || width == 0) {
    throw ValidationError("synthetic video extents must be positive");
  }
  if (n_numeric == 0) throw ValidationError("synthetic task needs the marker feature");
  if (!(a_img >= 0.0) || !(a_tab >= 0.0) || a_img + a_tab <= 0.0) {
    throw ValidationError("signal weights must be non-negative with a positive sum");
  }
  if (!(noise_std >= 0.0)) throw ValidationError("noise_std must be non-negative");
  if (!(repeat_patient_prob >= 0.0 && repeat_patient_prob <= 1.0)) {
    throw ValidationError("repeat_patient_prob must lie in [0, 1]");
  }
  for (std::size_t i = 1; i < bin_edges.size(); ++i) {
    if (!(bin_edges[i] > bin_edges[i - 1])) {
      throw ValidationError("bin edges must be strictly ascending");
    }
  }
}

namespace {

std::string sample_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%05zu", i);
  return buf;
}

std::string patient_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "p%05zu", i);
  return buf;
}

Tensor make_video(const SyntheticConfig& cfg, double u, Pcg32& rng) {
  const double w = static_cast<double>(cfg.width);
  const double h = static_cast<double>(cfg.height);
  const double sigma = w / 8.0;
  const double radius = w / 16.0;
  const double cx0 = w / 2.0 + rng.uniform(-w / 8.0, w / 8.0);
  const double cy0 = h / 2.0 + rng.uniform(-h / 8.0, h / 8.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double peak = 0.5 + u;

  std::vector<double> data(cfg.frames * cfg.height * cfg.width);
  std::size_t k = 0;
  for (std::size_t t = 0; t < cfg.frames; ++t) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(t) /
                         static_cast<double>(cfg.frames);
    const double amp = peak * (0.7 + 0.3 * std::cos(angle));
    const double cx = cx0 + radius * std::cos(angle + phase);
    const double cy = cy0 + radius * std::sin(angle + phase);
    for (std::size_t y = 0; y < cfg.height; ++y) {
      for (std::size_t x = 0; x < cfg.width; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - cx;
        const double dy = static_cast<double>(y) + 0.5 - cy;
        data[k++] = amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)) +
                    0.05 * rng.normal();
      }
    }
  }
  return Tensor({1, cfg.frames, cfg.height, cfg.width}, std::move(data), DType::f32);
}

}  // namespace

SyntheticData make_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  SyntheticData out;
  Dataset& ds = out.dataset;
  ds.bin_edges = cfg.bin_edges;
  for (std::size_t j = 0; j < cfg.n_categorical; ++j) {
    ds.features.push_back({"c" + std::to_string(j + 1), FeatureKind::categorical});
  }
  ds.features.push_back({"marker", FeatureKind::numeric});
  for (std::size_t j = 1; j < cfg.n_numeric; ++j) {
    ds.features.push_back({"n" + std::to_string(j), FeatureKind::numeric});
  }

  Pcg32 patients = Pcg32::keyed(cfg.seed, "synthetic/patients");
  std::size_t next_patient = 0;
  std::string current_patient;
  static constexpr const char* kLevels[] = {"A", "B", "C"};

  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    MultimodalSample s;
    s.id = sample_id(i);
    const bool repeat = i > 0 && patients.uniform() < cfg.repeat_patient_prob;
    if (!repeat) current_patient = patient_name(next_patient++);
    s.patient_id = current_patient;

    Pcg32 rng = Pcg32::keyed(cfg.seed, "synthetic/" + s.id);
    const double u = rng.uniform();
    const double v = rng.uniform();
    s.video = make_video(cfg, u, rng);
    s.tabular["marker"] = v;
    for (std::size_t j = 1; j < cfg.n_numeric; ++j) {
      s.tabular["n" + std::to_string(j)] = rng.normal();
    }
    for (std::size_t j = 0; j < cfg.n_categorical; ++j) {
      s.tabular["c" + std::to_string(j + 1)] = std::string(kLevels[rng.below(3)]);
    }
    const double signal = (cfg.a_img * u + cfg.a_tab * v) / (cfg.a_img + cfg.a_tab);
    s.target = 20.0 + 15.0 * signal;
    if (cfg.noise_std > 0.0) s.target += cfg.noise_std * rng.normal();
    ds.samples.push_back(std::move(s));
    out.latents.push_back({u, v});
  }
  return out;
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg, const std::filesystem::path& dir) {
  SyntheticData data = make_synthetic(cfg);
  write_dataset(data.dataset, dir);
  std::ofstream out(dir / "latents.csv", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "latents.csv").string());
  out << "id,u,v\n";
  char buf[64];
  for (std::size_t i = 0; i < data.latents.size(); ++i) {
    out << data.dataset.samples[i].id;
    for (double x : {data.latents[i].u, data.latents[i].v}) {
      auto res = std::to_chars(buf, buf + sizeof(buf), x);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + (dir / "latents.csv").string());
  return data;
}

}  // namespace tabmixer
