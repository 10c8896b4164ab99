// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "tabmixer/nn.hpp"
#include "tabmixer/tensor.hpp"

namespace tabmixer {

/// mean((pred - target)^2) over rank-1 tensors of equal length.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

struct AdamWOptions {
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One decoupled-weight-decay Adam update at step t >= 1:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * theta
/// Throws NumericalError naming `name` on a non-finite gradient.
void adamw_step(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                std::span<double> v, std::size_t t, double lr, const AdamWOptions& options,
                std::string_view name = "parameter");

/// AdamW over every parameter of a registry (weight decay applies to all).
class AdamW {
 public:
  AdamW(ParamRegistry& registry, AdamWOptions options = {});

  /// Applies one update with learning rate `lr` and returns the new step count.
  std::size_t step(double lr);
  std::size_t steps() const { return t_; }

 private:
  ParamRegistry* registry_;
  AdamWOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

/// lr_min + 0.5 (lr_max - lr_min)(1 + cos(pi t / total)), 0 <= t <= total.
double cosine_lr(std::size_t t, std::size_t total, double lr_max, double lr_min = 0.0);

}  // namespace tabmixer
