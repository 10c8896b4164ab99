// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/optim.hpp"

#include <cmath>
#include <numbers>

#include "tabmixer/errors.hpp"
#include "tabmixer/ops.hpp"

namespace tabmixer {

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.rank() != 1 || pred.shape() != target.shape() || pred.numel() == 0) {
    throw DimensionError("mse_loss expects equal rank-1 shapes, got " + shape_str(pred.shape()) +
                         " and " + shape_str(target.shape()));
  }
  Tensor d = sub(pred, target);
  return mean(mul(d, d));
}

void adamw_step(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                std::span<double> v, std::size_t t, double lr, const AdamWOptions& options,
                std::string_view name) {
  if (t == 0) throw ValidationError("AdamW step index starts at 1");
  if (grad.size() != theta.size() || m.size() != theta.size() || v.size() != theta.size()) {
    throw DimensionError("AdamW state size mismatch for '" + std::string(name) + "'");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericalError("non-finite gradient in '" + std::string(name) + "' at index " +
                           std::to_string(i));
    }
  }
  const double td = static_cast<double>(t);
  const double c1 = 1.0 - std::pow(options.beta1, td);
  const double c2 = 1.0 - std::pow(options.beta2, td);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g;
    v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    theta[i] = theta[i] - lr * m_hat / (std::sqrt(v_hat) + options.eps) -
               lr * options.weight_decay * theta[i];
  }
}

AdamW::AdamW(ParamRegistry& registry, AdamWOptions options)
    : registry_(&registry), options_(options) {
  for (const auto& entry : registry.entries()) {
    m_.emplace_back(entry.tensor.numel(), 0.0);
    v_.emplace_back(entry.tensor.numel(), 0.0);
  }
}

std::size_t AdamW::step(double lr) {
  ++t_;
  const auto& entries = registry_->entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    Tensor param = entries[k].tensor;
    std::span<double> theta = param.mutable_values();
    if (!param.has_grad()) {
      const std::vector<double> zero(theta.size(), 0.0);
      adamw_step(theta, zero, m_[k], v_[k], t_, lr, options_, entries[k].name);
    } else {
      adamw_step(theta, param.grad(), m_[k], v_[k], t_, lr, options_, entries[k].name);
    }
    if (param.dtype() == DType::f32) {
      for (double& x : theta) x = static_cast<double>(static_cast<float>(x));
    }
  }
  return t_;
}

double cosine_lr(std::size_t t, std::size_t total, double lr_max, double lr_min) {
  if (total == 0) throw ValidationError("cosine schedule needs a positive step count");
  if (t > total) throw ValidationError("cosine schedule step exceeds the total");
  const double ratio = static_cast<double>(t) / static_cast<double>(total);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * ratio));
}

}  // namespace tabmixer
