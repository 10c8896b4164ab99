// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// TabMixer: refines backbone feature maps X[C,T,H,W] with a tabular vector
// Tab[D] through three MLP mixing sub-layers over the spatial, temporal and
// channel axes of a pooled feature cube.
//
//   X[C,T,H,W] --pool 2x2, flatten--> cube[C,T,S]          S = H*W/4
//   L_s: over S   then permute (C,T,S) -> (C,S,T)
//   L_t: over T   then permute (C,S,T) -> (S,T,C)
//   L_c: over C   then permute (S,T,C) -> (C,T,S)
//   cube --reshape [C,T,H/2,W/2], bilinear 2x--> out[C,T,H,W]
//
// Each sub-layer computes in + MLP(concat(Affine(in), Tab')) where
// Tab' = MLP_tab(Tab) is computed once per forward and the MLP is shared
// over every vector along the mixed axis.

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tabmixer/nn.hpp"
#include "tabmixer/tensor.hpp"

namespace tabmixer {

struct TabMixerConfig {
  std::size_t C = 1;
  std::size_t T = 1;
  std::size_t H = 2;
  std::size_t W = 2;
  std::size_t D = 0;
  bool enable_spatial = true;
  bool enable_temporal = true;
  bool enable_channel = true;
  bool enable_tabular = true;

  std::size_t S() const { return H * W / 4; }
  /// Width concatenated onto every sub-layer input (0 without tabular mixing).
  std::size_t tab_width() const { return enable_tabular ? D : 0; }
  void validate() const;

  friend bool operator==(const TabMixerConfig&, const TabMixerConfig&) = default;
};

void to_json(nlohmann::json& j, const TabMixerConfig& cfg);
void from_json(const nlohmann::json& j, TabMixerConfig& cfg);

/// Closed-form parameter count of a TabMixer built from `cfg`.
std::size_t param_count_formula(const TabMixerConfig& cfg);

/// Pooled C x T x S view of the feature maps; only TabMixer::embed_input makes one.
class FeatureCube {
 public:
  const Tensor& values() const { return values_; }

 private:
  friend class TabMixer;
  explicit FeatureCube(Tensor values) : values_(std::move(values)) {}
  Tensor values_;
};

struct MixingLayer {
  std::string name;
  bool enabled = true;
  std::size_t extent = 0;  // length of the mixed (last) axis
  AffineParams affine;
  MlpBlock block;
  std::vector<std::size_t> permutation;  // applied after the residual update
};

/// One mixing sub-layer: permute(in + MLP(concat(Affine(in), tab_embed))).
/// A disabled layer only permutes. `tab_embed` may be undefined.
Tensor mixer_sublayer(const Tensor& cube, const Tensor& tab_embed, const MixingLayer& layer);

class TabMixer {
 public:
  TabMixer(const TabMixerConfig& cfg, ParamRegistry& registry,
           const std::string& prefix = "tabmixer");

  const TabMixerConfig& config() const { return cfg_; }
  const std::array<MixingLayer, 3>& layers() const { return layers_; }
  const MlpBlock& tab_block() const { return tab_block_; }
  bool uses_tabular() const { return cfg_.tab_width() > 0; }

  FeatureCube embed_input(const Tensor& x) const;
  /// Tab' for a rank-1 `tab` of length D.
  Tensor embed_tabular(const Tensor& tab) const;
  /// L_c(L_t(L_s(cube))), returning a cube in (C,T,S) layout.
  Tensor mix(const FeatureCube& cube, const Tensor& tab_embed) const;
  /// Reshape (C,T,S) -> (C,T,H/2,W/2) and upsample to (C,T,H,W).
  Tensor restore(const Tensor& cube) const;

  /// Refined feature maps of the input shape. `tab` is ignored when tabular
  /// mixing is disabled.
  Tensor forward(const Tensor& x, const Tensor& tab) const;

  std::size_t param_count() const;

 private:
  TabMixerConfig cfg_;
  MlpBlock tab_block_;
  std::array<MixingLayer, 3> layers_;
};

}  // namespace tabmixer
