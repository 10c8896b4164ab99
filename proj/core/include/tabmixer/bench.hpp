// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Wall-clock latency of a single fusion-module forward on feature maps
// [C,T,H,W] with a tabular vector [D], gradients disabled.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tabmixer {

struct BenchConfig {
  std::size_t C = 1024;
  std::size_t T = 4;
  std::size_t H = 6;
  std::size_t W = 6;
  std::size_t D = 29;
  std::size_t iters = 100;
  std::size_t warmup = 3;
  std::uint64_t seed = 0;
  /// Any of film, daft, tabmixer, tabmixer_wo_cm.
  std::vector<std::string> modules{"tabmixer_wo_cm", "film", "daft", "tabmixer"};

  void validate() const;
};

struct BenchRow {
  std::string module;
  std::size_t params = 0;
  std::size_t iters = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double min_ms = 0.0;
  std::vector<double> samples_ms;  // timed iterations only
};

struct HardwareInfo {
  std::string cpu;
  unsigned threads = 0;
  std::string compiler;
  std::string build;
};

HardwareInfo hardware_fingerprint();

/// Nearest-rank percentile (q in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double q);

std::vector<BenchRow> run_bench(const BenchConfig& cfg);

/// module,params,iters,mean_ms,p50_ms,p95_ms,min_ms
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace tabmixer
