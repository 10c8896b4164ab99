// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/fusion.hpp"

#include <array>
#include <numeric>
#include <vector>

#include "tabmixer/errors.hpp"
#include "tabmixer/ops.hpp"

namespace tabmixer {

std::string_view to_string(FusionKind kind) {
  switch (kind) {
    case FusionKind::none: return "none";
    case FusionKind::concat: return "concat";
    case FusionKind::film: return "film";
    case FusionKind::daft: return "daft";
    case FusionKind::tabmixer: return "tabmixer";
  }
  return "none";
}

FusionKind parse_fusion(std::string_view name) {
  for (auto kind : {FusionKind::none, FusionKind::concat, FusionKind::film, FusionKind::daft,
                    FusionKind::tabmixer}) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("unknown fusion '" + std::string(name) +
                        "' (expected none, concat, film, daft or tabmixer)");
}

Tensor channel_scale_shift(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  const std::size_t c = x.dim(0);
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c}) {
    throw DimensionError("channel scale/shift: feature maps " + shape_str(x.shape()) +
                         " vs gamma " + shape_str(gamma.shape()) + ", beta " +
                         shape_str(beta.shape()));
  }
  Shape column(x.rank(), 1);
  column[0] = c;
  return add(mul(x, reshape(gamma, column)), reshape(beta, column));
}

Tensor global_average_pool(const Tensor& x) {
  if (x.rank() < 2) {
    throw DimensionError("global average pool needs rank >= 2, got " + shape_str(x.shape()));
  }
  std::vector<std::size_t> axes(x.rank() - 1);
  std::iota(axes.begin(), axes.end(), std::size_t{1});
  return mean(x, axes);
}

namespace {
void check_maps(const Tensor& x, std::size_t channels, std::string_view who) {
  if (x.rank() != 4 || x.dim(0) != channels) {
    throw DimensionError(std::string(who) + " expects feature maps [" + std::to_string(channels) +
                         ",T,H,W], got " + shape_str(x.shape()));
  }
}

void check_tab(const Tensor& tab, std::size_t tab_dim, std::string_view who) {
  if (!tab.defined() || tab.shape() != Shape{tab_dim}) {
    throw DimensionError(std::string(who) + " expects tabular input of shape (" +
                         std::to_string(tab_dim) + "), got " +
                         (tab.defined() ? shape_str(tab.shape()) : std::string("none")));
  }
}
}  // namespace

FilmModule::FilmModule(std::size_t channels, std::size_t tab_dim, std::size_t hidden,
                       ParamRegistry& registry, const std::string& prefix)
    : channels_(channels), tab_dim_(tab_dim) {
  if (channels == 0 || tab_dim == 0 || hidden == 0) {
    throw ValidationError("FiLM needs positive channels, tabular width and hidden width");
  }
  aux_ = MlpBlock::create(registry, prefix + ".aux", tab_dim, hidden, 2 * channels);
}

std::pair<Tensor, Tensor> FilmModule::modulation(const Tensor& tab) const {
  check_tab(tab, tab_dim_, "FiLM");
  Tensor out = mlp_block_forward(tab, aux_);
  return {slice(out, 0, channels_), slice(out, channels_, 2 * channels_)};
}

Tensor FilmModule::forward(const Tensor& x, const Tensor& tab) const {
  check_maps(x, channels_, "FiLM");
  auto [gamma, beta] = modulation(tab);
  return channel_scale_shift(x, gamma, beta);
}

DaftModule::DaftModule(std::size_t channels, std::size_t tab_dim, std::size_t hidden,
                       ParamRegistry& registry, const std::string& prefix)
    : channels_(channels), tab_dim_(tab_dim) {
  if (channels == 0 || hidden == 0) {
    throw ValidationError("DAFT needs positive channels and hidden width");
  }
  aux_ = MlpBlock::create(registry, prefix + ".aux", channels + tab_dim, hidden, 2 * channels);
}

std::pair<Tensor, Tensor> DaftModule::modulation(const Tensor& x, const Tensor& tab) const {
  check_maps(x, channels_, "DAFT");
  Tensor pooled = global_average_pool(x);
  Tensor v = pooled;
  if (tab_dim_ > 0) {
    check_tab(tab, tab_dim_, "DAFT");
    const std::array<Tensor, 2> parts{pooled, tab};
    v = concat(parts);
  }
  Tensor out = mlp_block_forward(v, aux_);
  return {slice(out, 0, channels_), slice(out, channels_, 2 * channels_)};
}

Tensor DaftModule::forward(const Tensor& x, const Tensor& tab) const {
  auto [gamma, beta] = modulation(x, tab);
  return channel_scale_shift(x, gamma, beta);
}

Tensor concat_forward(const Tensor& pooled, const Tensor& tab) {
  if (pooled.rank() != 1) {
    throw DimensionError("concat fusion expects rank-1 pooled features, got " +
                         shape_str(pooled.shape()));
  }
  if (!tab.defined()) return pooled;
  const std::array<Tensor, 2> parts{pooled, tab};
  return concat(parts);
}

std::size_t film_param_count(std::size_t channels, std::size_t tab_dim, std::size_t hidden) {
  return tab_dim * hidden + hidden + hidden * 2 * channels + 2 * channels;
}

std::size_t daft_param_count(std::size_t channels, std::size_t tab_dim, std::size_t hidden) {
  return (channels + tab_dim) * hidden + hidden + hidden * 2 * channels + 2 * channels;
}

}  // namespace tabmixer
