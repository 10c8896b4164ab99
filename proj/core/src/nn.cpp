// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/nn.hpp"

#include <algorithm>
#include <cmath>

#include "tabmixer/errors.hpp"
#include "tabmixer/ops.hpp"
#include "tabmixer/random.hpp"

namespace tabmixer {

Tensor ParamRegistry::add(std::string name, Shape shape, ParamRole role, std::size_t fan_in) {
  if (find(name) != nullptr) throw ValidationError("duplicate parameter name '" + name + "'");
  const double fill = role == ParamRole::affine_scale ? 1.0 : 0.0;
  Tensor t(shape, std::vector<double>(shape_numel(shape), fill), dtype_, true);
  entries_.push_back({std::move(name), t, role, fan_in});
  return t;
}

const ParamEntry* ParamRegistry::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::size_t ParamRegistry::total() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

std::vector<NamedTensor> ParamRegistry::named() const {
  std::vector<NamedTensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back({e.name, e.tensor});
  return out;
}

void ParamRegistry::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

namespace {
// First `depth` dotted components, never including the leaf tensor name.
std::string module_prefix(const std::string& name, std::size_t depth) {
  std::size_t cut = 0;
  std::size_t kept = 0;
  for (std::size_t pos = name.find('.'); pos != std::string::npos && kept < depth;
       pos = name.find('.', pos + 1)) {
    cut = pos;
    ++kept;
  }
  return kept == 0 ? name : name.substr(0, cut);
}
}  // namespace

ParamCount count_params(const ParamRegistry& registry, std::size_t depth) {
  ParamCount count;
  for (const auto& e : registry.entries()) {
    const std::string prefix = module_prefix(e.name, depth);
    const std::size_t n = e.tensor.numel();
    count.total += n;
    auto row = std::find_if(count.breakdown.begin(), count.breakdown.end(),
                            [&](const auto& r) { return r.first == prefix; });
    if (row == count.breakdown.end()) {
      count.breakdown.emplace_back(prefix, n);
    } else {
      row->second += n;
    }
  }
  return count;
}

void init_params(ParamRegistry& registry, std::uint64_t seed) {
  for (const auto& e : registry.entries()) {
    Tensor t = e.tensor;
    auto values = t.mutable_values();
    switch (e.role) {
      case ParamRole::affine_scale:
        std::fill(values.begin(), values.end(), 1.0);
        break;
      case ParamRole::affine_shift:
        std::fill(values.begin(), values.end(), 0.0);
        break;
      case ParamRole::weight:
      case ParamRole::bias: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(e.fan_in, 1)));
        auto rng = Pcg32::keyed(seed, e.name);
        for (auto& v : values) {
          v = rng.uniform(-bound, bound);
          if (t.dtype() == DType::f32) v = static_cast<double>(static_cast<float>(v));
        }
        break;
      }
    }
  }
}

LinearLayer LinearLayer::create(ParamRegistry& registry, const std::string& name, std::size_t in,
                                std::size_t out) {
  if (in == 0 || out == 0) {
    throw ValidationError("linear layer '" + name + "' needs positive extents");
  }
  LinearLayer layer;
  layer.weight = registry.add(name + ".weight", {out, in}, ParamRole::weight, in);
  layer.bias = registry.add(name + ".bias", {out}, ParamRole::bias, in);
  return layer;
}

Tensor LinearLayer::forward(const Tensor& x) const { return linear(x, weight, bias); }

AffineParams AffineParams::create(ParamRegistry& registry, const std::string& name, std::size_t n) {
  AffineParams p;
  p.alpha = registry.add(name + ".alpha", {n}, ParamRole::affine_scale, 0);
  p.beta = registry.add(name + ".beta", {n}, ParamRole::affine_shift, 0);
  return p;
}

Tensor affine_forward(const Tensor& x, const AffineParams& params) {
  if (x.rank() == 0 || x.shape().back() != params.alpha.dim(0)) {
    throw DimensionError("affine: last extent of " + shape_str(x.shape()) + " does not match " +
                         std::to_string(params.alpha.dim(0)));
  }
  return add(mul(x, params.alpha), params.beta);
}

MlpBlock MlpBlock::create(ParamRegistry& registry, const std::string& name, std::size_t in,
                          std::size_t hidden, std::size_t out) {
  MlpBlock block;
  block.fc1 = LinearLayer::create(registry, name + ".fc1", in, hidden);
  block.fc2 = LinearLayer::create(registry, name + ".fc2", hidden, out);
  return block;
}

Tensor mlp_block_forward(const Tensor& z, const MlpBlock& block) {
  if (z.shape().back() != block.fc1.in_features()) {
    throw DimensionError("mlp block: input " + shape_str(z.shape()) + " does not end in " +
                         std::to_string(block.fc1.in_features()));
  }
  return block.fc2.forward(gelu(block.fc1.forward(z)));
}

}  // namespace tabmixer
