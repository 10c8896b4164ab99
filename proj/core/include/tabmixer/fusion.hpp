// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Baseline imaging/tabular fusion modules inserted at the same point as
// TabMixer: channel-wise FiLM and DAFT conditioning on feature maps, and
// plain concatenation of the pooled features with the tabular vector.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>

#include "tabmixer/nn.hpp"
#include "tabmixer/tensor.hpp"

namespace tabmixer {

enum class FusionKind { none, concat, film, daft, tabmixer };

std::string_view to_string(FusionKind kind);
FusionKind parse_fusion(std::string_view name);

inline constexpr std::size_t kDefaultAuxHidden = 6;

/// y[c, ...] = gamma[c] * x[c, ...] + beta[c]
Tensor channel_scale_shift(const Tensor& x, const Tensor& gamma, const Tensor& beta);

/// Global average over every axis except the leading channel axis.
Tensor global_average_pool(const Tensor& x);

/// FiLM: (gamma, beta) = fc2(gelu(fc1(tab))), fc1: D -> h, fc2: h -> 2C.
/// gamma is used as is (no 1 + gamma reparameterization).
class FilmModule {
 public:
  FilmModule(std::size_t channels, std::size_t tab_dim, std::size_t hidden,
             ParamRegistry& registry, const std::string& prefix = "film");

  std::pair<Tensor, Tensor> modulation(const Tensor& tab) const;
  Tensor forward(const Tensor& x, const Tensor& tab) const;

  const MlpBlock& aux() const { return aux_; }
  std::size_t channels() const { return channels_; }

 private:
  std::size_t channels_;
  std::size_t tab_dim_;
  MlpBlock aux_;
};

/// DAFT: like FiLM, but the auxiliary network sees concat(GAP(x), tab), so
/// fc1 maps C + D -> h.
class DaftModule {
 public:
  DaftModule(std::size_t channels, std::size_t tab_dim, std::size_t hidden,
             ParamRegistry& registry, const std::string& prefix = "daft");

  std::pair<Tensor, Tensor> modulation(const Tensor& x, const Tensor& tab) const;
  Tensor forward(const Tensor& x, const Tensor& tab) const;

  const MlpBlock& aux() const { return aux_; }
  std::size_t channels() const { return channels_; }

 private:
  std::size_t channels_;
  std::size_t tab_dim_;
  MlpBlock aux_;
};

/// [pooled..., tab...]; an undefined `tab` leaves `pooled` unchanged.
Tensor concat_forward(const Tensor& pooled, const Tensor& tab);

std::size_t film_param_count(std::size_t channels, std::size_t tab_dim,
                             std::size_t hidden = kDefaultAuxHidden);
std::size_t daft_param_count(std::size_t channels, std::size_t tab_dim,
                             std::size_t hidden = kDefaultAuxHidden);

}  // namespace tabmixer
