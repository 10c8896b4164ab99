// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Regression model: backbone -> fusion on feature maps (tabmixer, film, daft)
// -> global average pool -> optional concat with the tabular vector -> linear
// head -> scalar.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>

#include <nlohmann/json_fwd.hpp>

#include "tabmixer/backbone.hpp"
#include "tabmixer/fusion.hpp"
#include "tabmixer/nn.hpp"
#include "tabmixer/tabmixer.hpp"

namespace tabmixer {

struct ModelConfig {
  FusionKind fusion = FusionKind::tabmixer;
  BackboneConfig backbone;
  std::size_t tab_dim = 0;
  bool enable_spatial = true;
  bool enable_temporal = true;
  bool enable_channel = true;
  bool enable_tabular = true;
  std::size_t aux_hidden = kDefaultAuxHidden;
  DType dtype = DType::f32;

  /// TabMixer config at the backbone output.
  TabMixerConfig mixer_config() const;
  /// Whether forward() reads the tabular vector at all.
  bool uses_tabular() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& cfg);
void from_json(const nlohmann::json& j, ModelConfig& cfg);

class MultimodalModel {
 public:
  /// Builds the model and initializes every parameter from `seed`.
  MultimodalModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamRegistry& params() { return registry_; }
  const ParamRegistry& params() const { return registry_; }
  const Backbone& backbone() const { return *backbone_; }
  const TabMixer* tabmixer() const { return tabmixer_.get(); }
  const LinearLayer& head() const { return head_; }

  /// Fused feature maps [C', T', H', W'] before pooling.
  Tensor features(const Tensor& video, const Tensor& tab) const;
  /// Prediction of shape [1].
  Tensor forward(const Tensor& video, const Tensor& tab) const;

 private:
  ModelConfig cfg_;
  ParamRegistry registry_;
  std::unique_ptr<Backbone> backbone_;
  std::unique_ptr<TabMixer> tabmixer_;
  std::unique_ptr<FilmModule> film_;
  std::unique_ptr<DaftModule> daft_;
  LinearLayer head_;
};

}  // namespace tabmixer
