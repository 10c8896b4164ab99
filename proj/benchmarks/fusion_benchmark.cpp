// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

// Forward latency of each fusion module at C=1024, T=4, H=6, W=6, D=29.

#include <benchmark/benchmark.h>

#include "tabmixer/fusion.hpp"
#include "tabmixer/random.hpp"
#include "tabmixer/tabmixer.hpp"

namespace {

using namespace tabmixer;

constexpr std::size_t kC = 1024;
constexpr std::size_t kT = 4;
constexpr std::size_t kH = 6;
constexpr std::size_t kW = 6;
constexpr std::size_t kD = 29;

Tensor input(Shape shape, const char* key) {
  Pcg32 rng = Pcg32::keyed(0, key);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal();
  return Tensor(std::move(shape), std::move(v), DType::f32);
}

template <class Module>
void run(benchmark::State& state, const Module& module, ParamRegistry& registry) {
  init_params(registry, 0);
  const Tensor x = input({kC, kT, kH, kW}, "bench/x");
  const Tensor tab = input({kD}, "bench/tab");
  NoGradGuard guard;
  for (auto _ : state) {
    Tensor out = module.forward(x, tab);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.counters["params"] = static_cast<double>(registry.total());
}

void BM_TabMixer(benchmark::State& state) {
  ParamRegistry registry(DType::f32);
  TabMixer module({kC, kT, kH, kW, kD}, registry);
  run(state, module, registry);
}

void BM_TabMixerWithoutChannelMixing(benchmark::State& state) {
  TabMixerConfig cfg{kC, kT, kH, kW, kD};
  cfg.enable_channel = false;
  ParamRegistry registry(DType::f32);
  TabMixer module(cfg, registry);
  run(state, module, registry);
}

void BM_Film(benchmark::State& state) {
  ParamRegistry registry(DType::f32);
  FilmModule module(kC, kD, kDefaultAuxHidden, registry);
  run(state, module, registry);
}

void BM_Daft(benchmark::State& state) {
  ParamRegistry registry(DType::f32);
  DaftModule module(kC, kD, kDefaultAuxHidden, registry);
  run(state, module, registry);
}

BENCHMARK(BM_TabMixer)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TabMixerWithoutChannelMixing)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Film)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Daft)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
