// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <string_view>
#include <vector>

#include "tabmixer/tensor.hpp"

namespace tabmixer::detail {

/// Receives the output gradient and accumulates into the parents' buffers.
using BackwardFn = std::function<void(const std::vector<double>& grad_out)>;

struct TensorImpl {
  Shape shape;
  DType dtype = DType::f64;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;

  // Set only on non-leaf nodes.
  std::vector<std::shared_ptr<TensorImpl>> parents;
  BackwardFn backward_fn;
};

struct Access {
  static TensorImpl& impl(const Tensor& t);
  static const std::shared_ptr<TensorImpl>& handle(const Tensor& t);
  static Tensor wrap(std::shared_ptr<TensorImpl> impl);
};

/// Zero-initialized (on first use) gradient buffer of `node`.
std::vector<double>& grad_buffer(TensorImpl& node);

/// Wraps an op result: rounds to the output dtype, rejects non-finite values
/// and, when any input needs a gradient, attaches `backward` to the output.
/// `backward` is invoked with the output gradient; it may capture the parents
/// by raw pointer because the output keeps them alive.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> data, DType dtype,
                   std::initializer_list<const Tensor*> inputs, BackwardFn backward);

/// Same as above for a variable number of inputs.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> data, DType dtype,
                   const std::vector<const Tensor*>& inputs, BackwardFn backward);

/// True when the result of an op over these inputs will be recorded.
bool needs_graph(std::initializer_list<const Tensor*> inputs);

void round_to_dtype(std::vector<double>& data, DType dtype);

}  // namespace tabmixer::detail
