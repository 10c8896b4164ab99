// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tabmixer/gradcheck.hpp"
#include "tabmixer/tensor.hpp"

namespace tabmixer {

enum class ParamRole { weight, bias, affine_scale, affine_shift };

struct ParamEntry {
  std::string name;
  Tensor tensor;
  ParamRole role;
  std::size_t fan_in = 0;
};

/// Owns the named, trainable leaves of a model. Layers keep handles to the
/// same storage, so optimizer updates through the registry are visible to them.
class ParamRegistry {
 public:
  explicit ParamRegistry(DType dtype = DType::f64) : dtype_(dtype) {}

  /// Registers a zero-filled parameter (alpha of an affine starts at one).
  Tensor add(std::string name, Shape shape, ParamRole role, std::size_t fan_in);

  const std::vector<ParamEntry>& entries() const { return entries_; }
  const ParamEntry* find(const std::string& name) const;
  DType dtype() const { return dtype_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t total() const;

  std::vector<NamedTensor> named() const;
  void zero_grad();

 private:
  DType dtype_;
  std::vector<ParamEntry> entries_;
};

struct ParamCount {
  std::size_t total = 0;
  /// (module prefix, count), in registration order.
  std::vector<std::pair<std::string, std::size_t>> breakdown;
};

/// Exact parameter count; the breakdown groups names by their first `depth`
/// dotted components.
ParamCount count_params(const ParamRegistry& registry, std::size_t depth = 2);

/// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], one PCG32
/// stream per parameter name; affine scale 1 and shift 0.
void init_params(ParamRegistry& registry, std::uint64_t seed);

struct LinearLayer {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]

  static LinearLayer create(ParamRegistry& registry, const std::string& name, std::size_t in,
                            std::size_t out);
  Tensor forward(const Tensor& x) const;
  std::size_t in_features() const { return weight.dim(1); }
  std::size_t out_features() const { return weight.dim(0); }
};

struct AffineParams {
  Tensor alpha;  // [N]
  Tensor beta;   // [N]

  static AffineParams create(ParamRegistry& registry, const std::string& name, std::size_t n);
};

/// y[..., j] = alpha[j] * x[..., j] + beta[j]
Tensor affine_forward(const Tensor& x, const AffineParams& params);

/// Bottleneck width used by every two-layer block: max(1, floor(n / 2)).
constexpr std::size_t bottleneck_width(std::size_t n) { return n / 2 > 0 ? n / 2 : 1; }

/// fc2(gelu(fc1(z))), shared across all leading positions of z.
struct MlpBlock {
  LinearLayer fc1;
  LinearLayer fc2;

  static MlpBlock create(ParamRegistry& registry, const std::string& name, std::size_t in,
                         std::size_t hidden, std::size_t out);
};

Tensor mlp_block_forward(const Tensor& z, const MlpBlock& block);

}  // namespace tabmixer
