// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small all-MLP video backbone:
//   video[1,T0,H0,W0] -> non-overlapping (pt,ph,pw) patches -> tokens[N, P]
//   -> linear embed -> tokens[N, C'] -> stages of
//        tokens += token_mlp(tokens^T)^T     (mixes the N = T'H'W' tokens)
//        tokens += channel_mlp(tokens)       (mixes the C' channels)
//   -> feature maps[C', T', H', W'] with T' = T0/pt, H' = H0/ph, W' = W0/pw.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tabmixer/nn.hpp"
#include "tabmixer/tensor.hpp"

namespace tabmixer {

struct BackboneConfig {
  std::size_t frames = 16;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t patch_t = 2;
  std::size_t patch_h = 8;
  std::size_t patch_w = 8;
  std::size_t channels = 64;
  std::size_t stages = 2;

  /// [C', T', H', W']
  Shape output_shape() const;
  std::size_t tokens() const;
  void validate() const;

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

void to_json(nlohmann::json& j, const BackboneConfig& cfg);
void from_json(const nlohmann::json& j, BackboneConfig& cfg);

struct MixerStage {
  MlpBlock token_mlp;
  MlpBlock channel_mlp;
};

class Backbone {
 public:
  Backbone(const BackboneConfig& cfg, ParamRegistry& registry,
           const std::string& prefix = "backbone");

  const BackboneConfig& config() const { return cfg_; }
  const LinearLayer& embed() const { return embed_; }
  const std::vector<MixerStage>& stages() const { return stages_; }

  /// [1, T0, H0, W0] -> [C', T', H', W']
  Tensor forward(const Tensor& video) const;

 private:
  BackboneConfig cfg_;
  LinearLayer embed_;
  std::vector<MixerStage> stages_;
};

}  // namespace tabmixer
