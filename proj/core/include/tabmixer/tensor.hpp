// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensor with tape-free reverse-mode autodiff. Every op that
// sees a grad-requiring input records a backward closure on its output; the
// graph is walked in reverse topological order by Tensor::backward().

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tabmixer {

/// Storage precision. Arithmetic is carried out in double; f32 tensors round
/// every produced value to the nearest float.
enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

std::string_view to_string(DType dtype);
DType parse_dtype(std::string_view name);
DType promote(DType a, DType b);

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct TensorImpl;
struct Access;
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, DType dtype = DType::f64,
         bool requires_grad = false);

  static Tensor zeros(Shape shape, DType dtype = DType::f64, bool requires_grad = false);
  static Tensor full(Shape shape, double value, DType dtype = DType::f64);
  static Tensor scalar(double value, DType dtype = DType::f64);
  static Tensor vector(std::vector<double> values, DType dtype = DType::f64);

  bool defined() const noexcept { return impl_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  std::size_t dim(std::size_t axis) const;
  DType dtype() const;

  std::span<const double> values() const;
  /// Direct buffer access for optimizers and perturbation oracles. Edits are
  /// invisible to any graph already built on top of this tensor.
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t flat_index) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool is_leaf() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Reverse-mode pass from this scalar. Leaf gradients accumulate across calls.
  void backward() const;

  /// Same values, no graph, no gradient.
  Tensor detach() const;
  /// Deep copy of values in the given dtype.
  Tensor to(DType dtype) const;

  /// True when both handles refer to the same storage.
  bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }

 private:
  friend struct detail::Access;
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

}  // namespace tabmixer
