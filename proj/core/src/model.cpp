// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/model.hpp"

#include <nlohmann/json.hpp>

#include "tabmixer/errors.hpp"
#include "tabmixer/ops.hpp"

namespace tabmixer {

TabMixerConfig ModelConfig::mixer_config() const {
  const Shape out = backbone.output_shape();
  TabMixerConfig cfg;
  cfg.C = out[0];
  cfg.T = out[1];
  cfg.H = out[2];
  cfg.W = out[3];
  cfg.D = tab_dim;
  cfg.enable_spatial = enable_spatial;
  cfg.enable_temporal = enable_temporal;
  cfg.enable_channel = enable_channel;
  cfg.enable_tabular = enable_tabular;
  return cfg;
}

bool ModelConfig::uses_tabular() const {
  switch (fusion) {
    case FusionKind::none: return false;
    case FusionKind::tabmixer: return enable_tabular && tab_dim > 0;
    case FusionKind::daft:
    case FusionKind::concat: return tab_dim > 0;
    case FusionKind::film: return true;
  }
  return false;
}

void ModelConfig::validate() const {
  backbone.validate();
  if (fusion == FusionKind::film && tab_dim == 0) {
    throw ValidationError("FiLM fusion needs at least one tabular feature");
  }
  if ((fusion == FusionKind::film || fusion == FusionKind::daft) && aux_hidden == 0) {
    throw ValidationError("aux_hidden must be positive");
  }
}

void to_json(nlohmann::json& j, const ModelConfig& cfg) {
  j = nlohmann::json{{"fusion", std::string(to_string(cfg.fusion))},
                     {"backbone", cfg.backbone},
                     {"tab_dim", cfg.tab_dim},
                     {"enable_spatial", cfg.enable_spatial},
                     {"enable_temporal", cfg.enable_temporal},
                     {"enable_channel", cfg.enable_channel},
                     {"enable_tabular", cfg.enable_tabular},
                     {"aux_hidden", cfg.aux_hidden},
                     {"dtype", std::string(to_string(cfg.dtype))}};
}

void from_json(const nlohmann::json& j, ModelConfig& cfg) {
  try {
    cfg.fusion = parse_fusion(j.value("fusion", std::string("tabmixer")));
    if (j.contains("backbone")) cfg.backbone = j.at("backbone").get<BackboneConfig>();
    cfg.tab_dim = j.value("tab_dim", std::size_t{0});
    cfg.enable_spatial = j.value("enable_spatial", true);
    cfg.enable_temporal = j.value("enable_temporal", true);
    cfg.enable_channel = j.value("enable_channel", true);
    cfg.enable_tabular = j.value("enable_tabular", true);
    cfg.aux_hidden = j.value("aux_hidden", kDefaultAuxHidden);
    cfg.dtype = parse_dtype(j.value("dtype", std::string("f32")));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid model config: ") + e.what());
  }
}

MultimodalModel::MultimodalModel(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), registry_(cfg.dtype) {
  cfg_.validate();
  backbone_ = std::make_unique<Backbone>(cfg_.backbone, registry_, "backbone");
  const std::size_t channels = cfg_.backbone.channels;
  std::size_t head_in = channels;
  switch (cfg_.fusion) {
    case FusionKind::none: break;
    case FusionKind::concat: head_in += cfg_.tab_dim; break;
    case FusionKind::film:
      film_ = std::make_unique<FilmModule>(channels, cfg_.tab_dim, cfg_.aux_hidden, registry_,
                                           "film");
      break;
    case FusionKind::daft:
      daft_ = std::make_unique<DaftModule>(channels, cfg_.tab_dim, cfg_.aux_hidden, registry_,
                                           "daft");
      break;
    case FusionKind::tabmixer:
      tabmixer_ = std::make_unique<TabMixer>(cfg_.mixer_config(), registry_, "tabmixer");
      break;
  }
  head_ = LinearLayer::create(registry_, "head", head_in, 1);
  init_params(registry_, seed);
}

Tensor MultimodalModel::features(const Tensor& video, const Tensor& tab) const {
  Tensor x = backbone_->forward(video);
  switch (cfg_.fusion) {
    case FusionKind::none:
    case FusionKind::concat: return x;
    case FusionKind::film: return film_->forward(x, tab);
    case FusionKind::daft: return daft_->forward(x, tab);
    case FusionKind::tabmixer: return tabmixer_->forward(x, tab);
  }
  return x;
}

Tensor MultimodalModel::forward(const Tensor& video, const Tensor& tab) const {
  Tensor pooled = global_average_pool(features(video, tab));
  if (cfg_.fusion == FusionKind::concat && cfg_.tab_dim > 0) {
    if (!tab.defined() || tab.shape() != Shape{cfg_.tab_dim}) {
      throw DimensionError("concat fusion expects tabular input of shape (" +
                           std::to_string(cfg_.tab_dim) + "), got " +
                           (tab.defined() ? shape_str(tab.shape()) : std::string("none")));
    }
    pooled = concat_forward(pooled, tab);
  }
  return head_.forward(pooled);
}

}  // namespace tabmixer
