// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tabmixer/tensor.hpp"

namespace tabmixer {

/// Standard normal CDF, 0.5 * erfc(-x / sqrt(2)).
double normal_cdf(double x);

// Elementwise arithmetic with numpy-style broadcasting (right-aligned, extents
// equal or 1). Gradients are reduced back over the broadcast axes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& x, double s);
Tensor mul_scalar(const Tensor& x, double s);

/// a[..., m, k] x b[k, n] -> [..., m, n]. `b` is shared across the leading axes of `a`.
Tensor matmul(const Tensor& a, const Tensor& b);

/// x[..., in] -> x W^T + bias, with weight [out, in] and bias [out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Exact GELU, x * Phi(x).
Tensor gelu(const Tensor& x);

/// Materialized axis permutation: out.shape[i] = x.shape[axes[i]].
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor reshape(const Tensor& x, Shape shape);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Mean over the listed axes; those axes are removed from the result.
Tensor mean(const Tensor& x, const std::vector<std::size_t>& axes);

/// Non-overlapping 2x2 mean over the last two axes. Both must be even.
Tensor avg_pool_spatial2(const Tensor& x);

/// 2x bilinear upsampling of the last two axes, half-pixel centers: output
/// coordinate o samples input coordinate (o + 0.5) / 2 - 0.5 clamped to [0, n-1].
Tensor upsample_bilinear2(const Tensor& x);

/// Appends the rank-1 `tail` to the last axis of `x`, repeated over every
/// leading position. An undefined `tail` is treated as empty.
Tensor concat_last(const Tensor& x, const Tensor& tail);

/// Concatenation of rank-1 tensors.
Tensor concat(std::span<const Tensor> parts);

/// Elements [begin, end) of a rank-1 tensor.
Tensor slice(const Tensor& x, std::size_t begin, std::size_t end);

/// Inverse of a permutation vector.
std::vector<std::size_t> inverse_permutation(const std::vector<std::size_t>& axes);

}  // namespace tabmixer
