// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/tabmixer.hpp"

#include <nlohmann/json.hpp>

#include "tabmixer/errors.hpp"
#include "tabmixer/ops.hpp"

namespace tabmixer {

void TabMixerConfig::validate() const {
  if (C == 0 || T == 0 || H == 0 || W == 0) {
    throw ValidationError("TabMixer extents C,T,H,W must be positive");
  }
  if (H % 2 != 0 || W % 2 != 0) {
    throw ValidationError("TabMixer needs even H and W, got H=" + std::to_string(H) +
                          " W=" + std::to_string(W));
  }
}

void to_json(nlohmann::json& j, const TabMixerConfig& cfg) {
  j = nlohmann::json{{"C", cfg.C},
                     {"T", cfg.T},
                     {"H", cfg.H},
                     {"W", cfg.W},
                     {"D", cfg.D},
                     {"enable_spatial", cfg.enable_spatial},
                     {"enable_temporal", cfg.enable_temporal},
                     {"enable_channel", cfg.enable_channel},
                     {"enable_tabular", cfg.enable_tabular}};
}

void from_json(const nlohmann::json& j, TabMixerConfig& cfg) {
  try {
    cfg.C = j.at("C").get<std::size_t>();
    cfg.T = j.at("T").get<std::size_t>();
    cfg.H = j.at("H").get<std::size_t>();
    cfg.W = j.at("W").get<std::size_t>();
    cfg.D = j.value("D", std::size_t{0});
    cfg.enable_spatial = j.value("enable_spatial", true);
    cfg.enable_temporal = j.value("enable_temporal", true);
    cfg.enable_channel = j.value("enable_channel", true);
    cfg.enable_tabular = j.value("enable_tabular", true);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid TabMixer config: ") + e.what());
  }
}

namespace {
std::size_t block_params(std::size_t in, std::size_t out) {
  const std::size_t hidden = bottleneck_width(out);
  return in * hidden + hidden + hidden * out + out;
}
}  // namespace

std::size_t param_count_formula(const TabMixerConfig& cfg) {
  const std::size_t d = cfg.tab_width();
  std::size_t total = d > 0 ? block_params(d, d) : 0;
  const std::array<std::pair<bool, std::size_t>, 3> layers{
      {{cfg.enable_spatial, cfg.S()}, {cfg.enable_temporal, cfg.T}, {cfg.enable_channel, cfg.C}}};
  for (const auto& [enabled, n] : layers) {
    if (enabled) total += 2 * n + block_params(n + d, n);
  }
  return total;
}

Tensor mixer_sublayer(const Tensor& cube, const Tensor& tab_embed, const MixingLayer& layer) {
  if (cube.rank() != 3 || cube.dim(2) != layer.extent) {
    throw DimensionError("mixing layer '" + layer.name + "' expects a rank-3 cube ending in " +
                         std::to_string(layer.extent) + ", got " + shape_str(cube.shape()));
  }
  if (!layer.enabled) return permute(cube, layer.permutation);
  Tensor z = concat_last(affine_forward(cube, layer.affine), tab_embed);
  Tensor updated = add(cube, mlp_block_forward(z, layer.block));
  return permute(updated, layer.permutation);
}

TabMixer::TabMixer(const TabMixerConfig& cfg, ParamRegistry& registry, const std::string& prefix)
    : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg_.tab_width();
  if (d > 0) {
    tab_block_ = MlpBlock::create(registry, prefix + ".tab", d, bottleneck_width(d), d);
  }
  const std::array<bool, 3> enabled{cfg_.enable_spatial, cfg_.enable_temporal,
                                    cfg_.enable_channel};
  const std::array<std::size_t, 3> extents{cfg_.S(), cfg_.T, cfg_.C};
  const std::array<const char*, 3> names{"spatial", "temporal", "channel"};
  // (C,T,S) -> (C,S,T) -> (S,T,C) -> (C,T,S)
  const std::array<std::vector<std::size_t>, 3> perms{
      std::vector<std::size_t>{0, 2, 1}, std::vector<std::size_t>{1, 2, 0},
      std::vector<std::size_t>{2, 1, 0}};
  for (std::size_t i = 0; i < 3; ++i) {
    MixingLayer& layer = layers_[i];
    layer.name = names[i];
    layer.enabled = enabled[i];
    layer.extent = extents[i];
    layer.permutation = perms[i];
    if (!layer.enabled) continue;
    const std::string base = prefix + "." + names[i];
    const std::size_t n = extents[i];
    layer.affine = AffineParams::create(registry, base + ".affine", n);
    layer.block = MlpBlock::create(registry, base + ".mlp", n + d, bottleneck_width(n), n);
  }
}

FeatureCube TabMixer::embed_input(const Tensor& x) const {
  const Shape expected{cfg_.C, cfg_.T, cfg_.H, cfg_.W};
  if (x.shape() != expected) {
    throw DimensionError("TabMixer input " + shape_str(x.shape()) + " does not match configured " +
                         shape_str(expected));
  }
  return FeatureCube(reshape(avg_pool_spatial2(x), {cfg_.C, cfg_.T, cfg_.S()}));
}

Tensor TabMixer::embed_tabular(const Tensor& tab) const {
  if (!uses_tabular()) {
    throw ValidationError("embed_tabular called on a TabMixer without tabular mixing");
  }
  if (!tab.defined() || tab.shape() != Shape{cfg_.D}) {
    throw DimensionError("TabMixer tabular input must have shape (" + std::to_string(cfg_.D) +
                         "), got " + (tab.defined() ? shape_str(tab.shape()) : "none"));
  }
  return mlp_block_forward(tab, tab_block_);
}

Tensor TabMixer::mix(const FeatureCube& cube, const Tensor& tab_embed) const {
  Tensor x = cube.values();
  for (const auto& layer : layers_) x = mixer_sublayer(x, tab_embed, layer);
  return x;
}

Tensor TabMixer::restore(const Tensor& cube) const {
  return upsample_bilinear2(reshape(cube, {cfg_.C, cfg_.T, cfg_.H / 2, cfg_.W / 2}));
}

Tensor TabMixer::forward(const Tensor& x, const Tensor& tab) const {
  FeatureCube cube = embed_input(x);
  Tensor tab_embed = uses_tabular() ? embed_tabular(tab) : Tensor{};
  return restore(mix(cube, tab_embed));
}

std::size_t TabMixer::param_count() const {
  std::size_t n = 0;
  if (uses_tabular()) {
    n += tab_block_.fc1.weight.numel() + tab_block_.fc1.bias.numel() +
         tab_block_.fc2.weight.numel() + tab_block_.fc2.bias.numel();
  }
  for (const auto& layer : layers_) {
    if (!layer.enabled) continue;
    n += layer.affine.alpha.numel() + layer.affine.beta.numel();
    n += layer.block.fc1.weight.numel() + layer.block.fc1.bias.numel() +
         layer.block.fc2.weight.numel() + layer.block.fc2.bias.numel();
  }
  return n;
}

}  // namespace tabmixer
