// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/verify.hpp"

#include <functional>
#include <memory>

#include "tabmixer/backbone.hpp"
#include "tabmixer/errors.hpp"
#include "tabmixer/model.hpp"
#include "tabmixer/ops.hpp"
#include "tabmixer/random.hpp"
#include "tabmixer/tabmixer.hpp"

namespace tabmixer {

namespace {

Tensor random_leaf(Shape shape, Pcg32& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal();
  return Tensor(std::move(shape), std::move(v), DType::f64, true);
}

void randomize_affine(ParamRegistry& registry, std::uint64_t seed) {
  for (const auto& e : registry.entries()) {
    if (e.role != ParamRole::affine_scale && e.role != ParamRole::affine_shift) continue;
    Pcg32 rng = Pcg32::keyed(seed, "gradcheck/affine/" + e.name);
    Tensor t = e.tensor;
    const double center = e.role == ParamRole::affine_scale ? 1.0 : 0.0;
    for (double& x : t.mutable_values()) x = center + rng.uniform(-0.5, 0.5);
  }
}

BackboneConfig scenario_backbone(const GradScenario& s) {
  BackboneConfig cfg;
  cfg.frames = 2 * s.T;
  cfg.height = 8 * s.H;
  cfg.width = 8 * s.W;
  cfg.channels = s.C;
  return cfg;
}

}  // namespace

GradCheckResult run_gradcheck(const GradScenario& s) {
  Pcg32 rng = Pcg32::keyed(s.seed, "gradcheck/inputs/" + s.module);
  std::vector<NamedTensor> leaves;
  std::function<Tensor()> forward;

  // Owners kept alive for the duration of the check.
  auto registry = std::make_shared<ParamRegistry>(DType::f64);
  std::shared_ptr<void> owner;
  Tensor tab;
  if (s.D > 0) {
    tab = random_leaf({s.D}, rng);
  }

  if (s.module == "tabmixer") {
    TabMixerConfig cfg{s.C, s.T, s.H, s.W, s.D, s.enable_spatial, s.enable_temporal,
                       s.enable_channel, s.enable_tabular};
    auto m = std::make_shared<TabMixer>(cfg, *registry);
    owner = m;
    const Tensor x = random_leaf({s.C, s.T, s.H, s.W}, rng);
    leaves.push_back({"input", x});
    forward = [m, x, tab] { return m->forward(x, tab); };
  } else if (s.module == "film") {
    auto m = std::make_shared<FilmModule>(s.C, s.D, kDefaultAuxHidden, *registry);
    owner = m;
    const Tensor x = random_leaf({s.C, s.T, s.H, s.W}, rng);
    leaves.push_back({"input", x});
    forward = [m, x, tab] { return m->forward(x, tab); };
  } else if (s.module == "daft") {
    auto m = std::make_shared<DaftModule>(s.C, s.D, kDefaultAuxHidden, *registry);
    owner = m;
    const Tensor x = random_leaf({s.C, s.T, s.H, s.W}, rng);
    leaves.push_back({"input", x});
    forward = [m, x, tab] { return m->forward(x, tab); };
  } else if (s.module == "backbone") {
    const BackboneConfig cfg = scenario_backbone(s);
    auto m = std::make_shared<Backbone>(cfg, *registry);
    owner = m;
    const Tensor video = random_leaf({1, cfg.frames, cfg.height, cfg.width}, rng);
    leaves.push_back({"input", video});
    forward = [m, video] { return m->forward(video); };
  } else if (s.module == "model") {
    ModelConfig cfg;
    cfg.fusion = s.fusion;
    cfg.backbone = scenario_backbone(s);
    cfg.tab_dim = s.D;
    cfg.enable_spatial = s.enable_spatial;
    cfg.enable_temporal = s.enable_temporal;
    cfg.enable_channel = s.enable_channel;
    cfg.enable_tabular = s.enable_tabular;
    cfg.dtype = DType::f64;
    auto m = std::make_shared<MultimodalModel>(cfg, s.seed);
    owner = m;
    registry = std::shared_ptr<ParamRegistry>(m, &m->params());
    const Tensor video = random_leaf({1, cfg.backbone.frames, cfg.backbone.height,
                                      cfg.backbone.width}, rng);
    leaves.push_back({"input", video});
    forward = [m, video, tab] { return m->forward(video, tab); };
  } else {
    throw ValidationError("unknown gradcheck module '" + s.module +
                          "' (expected tabmixer, film, daft, backbone or model)");
  }

  if (s.module != "model") init_params(*registry, s.seed);
  randomize_affine(*registry, s.seed);
  if (tab.defined()) leaves.push_back({"tab", tab});
  for (const auto& p : registry->named()) leaves.push_back(p);

  Shape out_shape;
  {
    NoGradGuard probe;
    out_shape = forward().shape();
  }
  const Tensor target = random_leaf(out_shape, rng).detach();
  const std::size_t n = target.numel();
  auto loss = [forward, target, n] {
    Tensor d = reshape(sub(forward(), target), {n});
    return mean(mul(d, d));
  };
  return grad_check(loss, leaves, s.max_per_param, s.seed);
}

}  // namespace tabmixer
