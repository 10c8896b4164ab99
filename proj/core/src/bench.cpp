// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <thread>

#include "tabmixer/errors.hpp"
#include "tabmixer/fusion.hpp"
#include "tabmixer/nn.hpp"
#include "tabmixer/random.hpp"
#include "tabmixer/tabmixer.hpp"

namespace tabmixer {

void BenchConfig::validate() const {
  if (iters < 10) throw ValidationError("bench needs at least 10 timed iterations");
  if (C == 0 || T == 0 || H == 0 || W == 0) {
    throw ValidationError("bench feature-map extents must be positive");
  }
  if (modules.empty()) throw ValidationError("bench needs at least one module");
  for (const auto& name : modules) {
    if (name != "film" && name != "daft" && name != "tabmixer" && name != "tabmixer_wo_cm") {
      throw ValidationError("unknown bench module '" + name +
                            "' (expected film, daft, tabmixer or tabmixer_wo_cm)");
    }
  }
}

HardwareInfo hardware_fingerprint() {
  HardwareInfo info;
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) info.cpu = line.substr(colon + 2);
      break;
    }
  }
  if (info.cpu.empty()) info.cpu = "unknown";
  info.threads = std::thread::hardware_concurrency();
#if defined(__clang__)
  info.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  info.compiler = "gcc " __VERSION__;
#else
  info.compiler = "unknown";
#endif
#ifdef NDEBUG
  info.build = "optimized";
#else
  info.build = "debug";
#endif
  return info;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(q / 100.0 * static_cast<double>(values.size()));
  const auto idx = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
  return values[std::min(idx, values.size() - 1)];
}

namespace {

Tensor random_tensor(Shape shape, Pcg32& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal();
  return Tensor(std::move(shape), std::move(v), DType::f32);
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
  cfg.validate();
  Pcg32 rng = Pcg32::keyed(cfg.seed, "bench/input");
  const Tensor x = random_tensor({cfg.C, cfg.T, cfg.H, cfg.W}, rng);
  const Tensor tab = cfg.D > 0 ? random_tensor({cfg.D}, rng) : Tensor{};

  std::vector<BenchRow> rows;
  for (const auto& name : cfg.modules) {
    ParamRegistry registry(DType::f32);
    std::function<Tensor()> forward;
    std::unique_ptr<TabMixer> mixer;
    std::unique_ptr<FilmModule> film;
    std::unique_ptr<DaftModule> daft;
    if (name == "tabmixer" || name == "tabmixer_wo_cm") {
      TabMixerConfig mc{cfg.C, cfg.T, cfg.H, cfg.W, cfg.D};
      mc.enable_channel = name == "tabmixer";
      mixer = std::make_unique<TabMixer>(mc, registry);
      forward = [&] { return mixer->forward(x, tab); };
    } else if (name == "film") {
      film = std::make_unique<FilmModule>(cfg.C, cfg.D, kDefaultAuxHidden, registry);
      forward = [&] { return film->forward(x, tab); };
    } else if (name == "daft") {
      daft = std::make_unique<DaftModule>(cfg.C, cfg.D, kDefaultAuxHidden, registry);
      forward = [&] { return daft->forward(x, tab); };
    } else {
      throw ValidationError("unknown bench module '" + name +
                            "' (expected film, daft, tabmixer or tabmixer_wo_cm)");
    }
    init_params(registry, cfg.seed);

    NoGradGuard guard;
    for (std::size_t i = 0; i < cfg.warmup; ++i) forward();
    BenchRow row;
    row.module = name;
    row.params = registry.total();
    row.iters = cfg.iters;
    for (std::size_t i = 0; i < cfg.iters; ++i) {
      const auto start = std::chrono::steady_clock::now();
      const Tensor out = forward();
      const auto stop = std::chrono::steady_clock::now();
      row.samples_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    double total = 0.0;
    for (double v : row.samples_ms) total += v;
    row.mean_ms = total / static_cast<double>(row.samples_ms.size());
    row.p50_ms = percentile(row.samples_ms, 50.0);
    row.p95_ms = percentile(row.samples_ms, 95.0);
    row.min_ms = *std::min_element(row.samples_ms.begin(), row.samples_ms.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "module,params,iters,mean_ms,p50_ms,p95_ms,min_ms\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%.6f,%.6f,%.6f,%.6f\n", r.module.c_str(),
                  r.params, r.iters, r.mean_ms, r.p50_ms, r.p95_ms, r.min_ms);
    out += buf;
  }
  return out;
}

}  // namespace tabmixer
