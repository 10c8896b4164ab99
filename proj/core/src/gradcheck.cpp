// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabmixer/errors.hpp"
#include "tabmixer/random.hpp"

namespace tabmixer {

namespace {
double evaluate(const std::function<Tensor()>& loss_fn) {
  Tensor loss = loss_fn();
  const double v = loss.item();
  if (!std::isfinite(v)) throw NumericalError("grad_check: loss is not finite");
  return v;
}
}  // namespace

GradCheckResult grad_check(const std::function<Tensor()>& loss_fn,
                           const std::vector<NamedTensor>& params, std::size_t max_per_param,
                           std::uint64_t subset_seed) {
  std::vector<Tensor> handles;
  for (const auto& p : params) {
    if (p.tensor.dtype() != DType::f64) {
      throw ValidationError("grad_check requires f64 parameters; '" + p.name + "' is f32");
    }
    if (!p.tensor.is_leaf()) {
      throw ValidationError("grad_check parameter '" + p.name + "' is not a leaf");
    }
    Tensor t = p.tensor;
    t.set_requires_grad(true);
    t.zero_grad();
    handles.push_back(t);
  }

  Tensor loss = loss_fn();
  if (!std::isfinite(loss.item())) throw NumericalError("grad_check: loss is not finite");
  loss.backward();

  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < handles.size(); ++k) {
    Tensor& t = handles[k];
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());

    auto values = t.mutable_values();
    std::vector<std::size_t> indices(values.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (max_per_param > 0 && indices.size() > max_per_param) {
      Pcg32 rng = Pcg32::keyed(subset_seed, "gradcheck/" + params[k].name);
      shuffle(indices, rng);
      indices.resize(max_per_param);
      std::sort(indices.begin(), indices.end());
    }
    for (std::size_t i : indices) {
      const double theta = values[i];
      const double h = 1e-5 * std::max(1.0, std::abs(theta));
      const double up = theta + h;
      const double down = theta - h;
      values[i] = up;
      const double f_up = evaluate(loss_fn);
      values[i] = down;
      const double f_down = evaluate(loss_fn);
      values[i] = theta;

      const double numeric = (f_up - f_down) / (up - down);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
      ++result.checked;
      if (result.worst_param.empty() || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = params[k].name;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace tabmixer
