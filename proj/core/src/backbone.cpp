// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/backbone.hpp"

#include <nlohmann/json.hpp>

#include "tabmixer/errors.hpp"
#include "tabmixer/ops.hpp"

namespace tabmixer {

Shape BackboneConfig::output_shape() const {
  return {channels, frames / patch_t, height / patch_h, width / patch_w};
}

std::size_t BackboneConfig::tokens() const {
  return (frames / patch_t) * (height / patch_h) * (width / patch_w);
}

void BackboneConfig::validate() const {
  for (std::size_t v : {frames, height, width, patch_t, patch_h, patch_w, channels}) {
    if (v == 0) throw ValidationError("backbone extents and patch sizes must be positive");
  }
  if (frames % patch_t != 0 || height % patch_h != 0 || width % patch_w != 0) {
    throw ValidationError("video (" + std::to_string(frames) + "," + std::to_string(height) +
                          "," + std::to_string(width) + ") is not divisible by patch (" +
                          std::to_string(patch_t) + "," + std::to_string(patch_h) + "," +
                          std::to_string(patch_w) + ")");
  }
  const Shape out = output_shape();
  if (out[2] % 2 != 0 || out[3] % 2 != 0) {
    throw ValidationError("backbone output " + shape_str(out) +
                          " must have even height and width");
  }
}

void to_json(nlohmann::json& j, const BackboneConfig& cfg) {
  j = nlohmann::json{{"frames", cfg.frames},   {"height", cfg.height},
                     {"width", cfg.width},     {"patch_t", cfg.patch_t},
                     {"patch_h", cfg.patch_h}, {"patch_w", cfg.patch_w},
                     {"channels", cfg.channels}, {"stages", cfg.stages}};
}

void from_json(const nlohmann::json& j, BackboneConfig& cfg) {
  const BackboneConfig defaults;
  try {
    cfg.frames = j.value("frames", defaults.frames);
    cfg.height = j.value("height", defaults.height);
    cfg.width = j.value("width", defaults.width);
    cfg.patch_t = j.value("patch_t", defaults.patch_t);
    cfg.patch_h = j.value("patch_h", defaults.patch_h);
    cfg.patch_w = j.value("patch_w", defaults.patch_w);
    cfg.channels = j.value("channels", defaults.channels);
    cfg.stages = j.value("stages", defaults.stages);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid backbone config: ") + e.what());
  }
}

Backbone::Backbone(const BackboneConfig& cfg, ParamRegistry& registry, const std::string& prefix)
    : cfg_(cfg) {
  cfg_.validate();
  const std::size_t patch = cfg_.patch_t * cfg_.patch_h * cfg_.patch_w;
  const std::size_t n = cfg_.tokens();
  const std::size_t c = cfg_.channels;
  embed_ = LinearLayer::create(registry, prefix + ".embed", patch, c);
  for (std::size_t s = 0; s < cfg_.stages; ++s) {
    const std::string base = prefix + ".stage" + std::to_string(s);
    stages_.push_back({MlpBlock::create(registry, base + ".token", n, bottleneck_width(n), n),
                       MlpBlock::create(registry, base + ".channel", c, bottleneck_width(c), c)});
  }
}

Tensor Backbone::forward(const Tensor& video) const {
  const Shape expected{1, cfg_.frames, cfg_.height, cfg_.width};
  if (video.shape() != expected) {
    throw DimensionError("backbone expects video " + shape_str(expected) + ", got " +
                         shape_str(video.shape()));
  }
  const Shape out = cfg_.output_shape();
  const std::size_t t = out[1];
  const std::size_t h = out[2];
  const std::size_t w = out[3];
  Tensor x = reshape(video, {t, cfg_.patch_t, h, cfg_.patch_h, w, cfg_.patch_w});
  x = permute(x, {0, 2, 4, 1, 3, 5});
  x = reshape(x, {t * h * w, cfg_.patch_t * cfg_.patch_h * cfg_.patch_w});
  x = embed_.forward(x);  // [N, C']
  for (const auto& stage : stages_) {
    Tensor tokens = permute(x, {1, 0});  // [C', N]
    tokens = add(tokens, mlp_block_forward(tokens, stage.token_mlp));
    x = permute(tokens, {1, 0});
    x = add(x, mlp_block_forward(x, stage.channel_mlp));
  }
  return reshape(permute(x, {1, 0}), out);
}

}  // namespace tabmixer
