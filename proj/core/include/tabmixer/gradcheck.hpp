// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tabmixer/tensor.hpp"

namespace tabmixer {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients of the scalar `loss_fn()` against central
/// differences with step h = 1e-5 * max(1, |theta|) for every scalar of every
/// parameter. The error of one scalar is |a - n| / max(1e-12, |a| + |n|).
///
/// All parameters must be f64 leaves. Their gradients are reset on entry and
/// hold the analytic gradient on return.
///
/// With `max_per_param` > 0, tensors larger than that have only a seeded
/// random subset of that many scalars perturbed.
GradCheckResult grad_check(const std::function<Tensor()>& loss_fn,
                           const std::vector<NamedTensor>& params, std::size_t max_per_param = 0,
                           std::uint64_t subset_seed = 0);

}  // namespace tabmixer
