// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "tabmixer/errors.hpp"
#include "tensor_impl.hpp"

namespace tabmixer {

namespace {
thread_local bool t_grad_enabled = true;

detail::TensorImpl& checked(const std::shared_ptr<detail::TensorImpl>& impl) {
  if (!impl) throw ValidationError("use of an undefined tensor");
  return *impl;
}
}  // namespace

std::string_view to_string(DType dtype) { return dtype == DType::f32 ? "f32" : "f64"; }

DType parse_dtype(std::string_view name) {
  if (name == "f32" || name == "float32") return DType::f32;
  if (name == "f64" || name == "float64") return DType::f64;
  throw ValidationError("unknown dtype '" + std::string(name) + "' (expected f32 or f64)");
}

DType promote(DType a, DType b) {
  return (a == DType::f64 || b == DType::f64) ? DType::f64 : DType::f32;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

namespace detail {

TensorImpl& Access::impl(const Tensor& t) { return checked(t.impl_); }
const std::shared_ptr<TensorImpl>& Access::handle(const Tensor& t) {
  checked(t.impl_);
  return t.impl_;
}
Tensor Access::wrap(std::shared_ptr<TensorImpl> impl) { return Tensor(std::move(impl)); }

std::vector<double>& grad_buffer(TensorImpl& node) {
  if (node.grad.empty()) node.grad.assign(node.data.size(), 0.0);
  return node.grad;
}

void round_to_dtype(std::vector<double>& data, DType dtype) {
  if (dtype != DType::f32) return;
  for (auto& v : data) v = static_cast<double>(static_cast<float>(v));
}

namespace {
Tensor finish(std::string_view op, Shape shape, std::vector<double> data, DType dtype,
              bool record, std::vector<std::shared_ptr<TensorImpl>> parents, BackwardFn backward) {
  round_to_dtype(data, dtype);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw NumericalError("non-finite value " + std::to_string(data[i]) + " produced by " +
                           std::string(op) + " at flat index " + std::to_string(i));
    }
  }
  auto out = std::make_shared<TensorImpl>();
  out->shape = std::move(shape);
  out->dtype = dtype;
  out->data = std::move(data);
  if (record) {
    out->requires_grad = true;
    out->parents = std::move(parents);
    out->backward_fn = std::move(backward);
  }
  return Access::wrap(std::move(out));
}
}  // namespace

bool needs_graph(std::initializer_list<const Tensor*> inputs) {
  if (!t_grad_enabled) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor make_result(std::string_view op, Shape shape, std::vector<double> data, DType dtype,
                   std::initializer_list<const Tensor*> inputs, BackwardFn backward) {
  return make_result(op, std::move(shape), std::move(data), dtype,
                     std::vector<const Tensor*>(inputs), std::move(backward));
}

Tensor make_result(std::string_view op, Shape shape, std::vector<double> data, DType dtype,
                   const std::vector<const Tensor*>& inputs, BackwardFn backward) {
  bool record = false;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  if (t_grad_enabled) {
    for (const Tensor* t : inputs) {
      if (t->requires_grad()) record = true;
    }
  }
  if (record) {
    parents.reserve(inputs.size());
    for (const Tensor* t : inputs) parents.push_back(Access::handle(*t));
  }
  return finish(op, std::move(shape), std::move(data), dtype, record, std::move(parents),
                record ? std::move(backward) : BackwardFn{});
}

}  // namespace detail

Tensor::Tensor(Shape shape, std::vector<double> values, DType dtype, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor of shape " + shape_str(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  for (auto e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  }
  detail::round_to_dtype(values, dtype);
  impl_ = std::make_shared<detail::TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->dtype = dtype;
  impl_->data = std::move(values);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, DType dtype, bool requires_grad) {
  auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), dtype, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, DType dtype) {
  auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), dtype);
}

Tensor Tensor::scalar(double value, DType dtype) { return Tensor({1}, {value}, dtype); }

Tensor Tensor::vector(std::vector<double> values, DType dtype) {
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values), dtype);
}

const Shape& Tensor::shape() const { return checked(impl_).shape; }
std::size_t Tensor::numel() const { return checked(impl_).data.size(); }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(s));
  }
  return s[axis];
}

DType Tensor::dtype() const { return checked(impl_).dtype; }
std::span<const double> Tensor::values() const { return checked(impl_).data; }
std::span<double> Tensor::mutable_values() { return checked(impl_).data; }

double Tensor::item() const {
  const auto& d = checked(impl_).data;
  if (d.size() != 1) {
    throw DimensionError("item() needs a single-element tensor, shape is " + shape_str(shape()));
  }
  return d[0];
}

double Tensor::at(std::size_t flat_index) const {
  const auto& d = checked(impl_).data;
  if (flat_index >= d.size()) throw DimensionError("flat index out of range");
  return d[flat_index];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  auto& impl = checked(impl_);
  if (!impl.parents.empty()) {
    throw ValidationError("requires_grad can only be toggled on leaf tensors");
  }
  impl.requires_grad = on;
  return *this;
}

bool Tensor::is_leaf() const { return checked(impl_).parents.empty(); }
bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }
std::span<const double> Tensor::grad() const { return checked(impl_).grad; }
std::span<double> Tensor::mutable_grad() { return detail::grad_buffer(checked(impl_)); }
void Tensor::zero_grad() { checked(impl_).grad.clear(); }

void Tensor::backward() const {
  auto& root = checked(impl_);
  if (root.data.size() != 1) {
    throw DimensionError("backward() needs a scalar loss, got shape " + shape_str(root.shape));
  }
  if (!root.requires_grad) {
    throw ValidationError("backward() called on a tensor that does not require grad");
  }

  // Iterative post-order DFS gives a topological order (parents before children).
  std::vector<detail::TensorImpl*> order;
  std::unordered_set<detail::TensorImpl*> seen;
  std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack{{&root, 0}};
  seen.insert(&root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::TensorImpl* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  detail::grad_buffer(root)[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorImpl* node = *it;
    if (node->parents.empty()) continue;
    if (!node->grad.empty() && node->backward_fn) node->backward_fn(node->grad);
    // Interior gradients are transient so repeated passes only accumulate on leaves.
    std::vector<double>().swap(node->grad);
  }
}

Tensor Tensor::detach() const {
  const auto& impl = checked(impl_);
  return Tensor(impl.shape, impl.data, impl.dtype);
}

Tensor Tensor::to(DType dtype) const {
  const auto& impl = checked(impl_);
  return Tensor(impl.shape, impl.data, dtype);
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_mode_enabled() { return t_grad_enabled; }

}  // namespace tabmixer
