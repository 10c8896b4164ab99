// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "tabmixer/errors.hpp"
#include "tensor_impl.hpp"

namespace tabmixer {

using detail::Access;
using detail::grad_buffer;
using detail::make_result;
using detail::TensorImpl;

namespace {

std::vector<std::size_t> contiguous_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t d = shape.size(); d-- > 1;) strides[d - 1] = strides[d] * shape[d];
  return strides;
}

/// Walks every index of `extents`, tracking one flat offset per operand.
/// `strides[k][d]` is operand k's step along axis d (0 for broadcast axes).
template <std::size_t K, class F>
void for_each_index(const Shape& extents, const std::array<std::vector<std::size_t>, K>& strides,
                    F&& fn) {
  const std::size_t rank = extents.size();
  const std::size_t total = shape_numel(extents);
  std::vector<std::size_t> idx(rank, 0);
  std::array<std::size_t, K> off{};
  for (std::size_t o = 0; o < total; ++o) {
    fn(o, off);
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      for (std::size_t k = 0; k < K; ++k) off[k] += strides[k][d];
      if (idx[d] < extents[d]) break;
      for (std::size_t k = 0; k < K; ++k) off[k] -= strides[k][d] * extents[d];
      idx[d] = 0;
    }
  }
}

struct Broadcast {
  Shape out;
  std::vector<std::size_t> a_strides;
  std::vector<std::size_t> b_strides;
};

std::vector<std::size_t> aligned_strides(const Shape& operand, const Shape& out) {
  const std::size_t offset = out.size() - operand.size();
  auto own = contiguous_strides(operand);
  std::vector<std::size_t> strides(out.size(), 0);
  for (std::size_t d = 0; d < operand.size(); ++d) {
    strides[offset + d] = (operand[d] == 1 && out[offset + d] != 1) ? 0 : own[d];
  }
  return strides;
}

Broadcast broadcast(const Shape& a, const Shape& b, std::string_view op) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t ea = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t eb = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (ea != eb && ea != 1 && eb != 1) {
      throw DimensionError(std::string(op) + ": cannot broadcast shapes " + shape_str(a) +
                           " and " + shape_str(b));
    }
    out[i] = std::max(ea, eb);
  }
  return {out, aligned_strides(a, out), aligned_strides(b, out)};
}

enum class BinaryKind { add, sub, mul };

Tensor binary(const Tensor& a, const Tensor& b, BinaryKind kind, std::string_view name) {
  const auto& da = a.values();
  const auto& db = b.values();
  TensorImpl* pa = &Access::impl(a);
  TensorImpl* pb = &Access::impl(b);
  const DType dtype = promote(a.dtype(), b.dtype());

  if (a.shape() == b.shape()) {
    std::vector<double> out(da.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      switch (kind) {
        case BinaryKind::add: out[i] = da[i] + db[i]; break;
        case BinaryKind::sub: out[i] = da[i] - db[i]; break;
        case BinaryKind::mul: out[i] = da[i] * db[i]; break;
      }
    }
    return make_result(name, a.shape(), std::move(out), dtype, {&a, &b},
                       [pa, pb, kind](const std::vector<double>& g) {
                         if (pa->requires_grad) {
                           auto& ga = grad_buffer(*pa);
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             ga[i] += kind == BinaryKind::mul ? g[i] * pb->data[i] : g[i];
                           }
                         }
                         if (pb->requires_grad) {
                           auto& gb = grad_buffer(*pb);
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             switch (kind) {
                               case BinaryKind::add: gb[i] += g[i]; break;
                               case BinaryKind::sub: gb[i] -= g[i]; break;
                               case BinaryKind::mul: gb[i] += g[i] * pa->data[i]; break;
                             }
                           }
                         }
                       });
  }

  auto bc = broadcast(a.shape(), b.shape(), name);
  std::array<std::vector<std::size_t>, 2> strides{bc.a_strides, bc.b_strides};
  std::vector<double> out(shape_numel(bc.out));
  for_each_index<2>(bc.out, strides, [&](std::size_t o, const std::array<std::size_t, 2>& off) {
    const double x = da[off[0]];
    const double y = db[off[1]];
    switch (kind) {
      case BinaryKind::add: out[o] = x + y; break;
      case BinaryKind::sub: out[o] = x - y; break;
      case BinaryKind::mul: out[o] = x * y; break;
    }
  });
  Shape out_shape = bc.out;
  return make_result(
      name, std::move(out_shape), std::move(out), dtype, {&a, &b},
      [pa, pb, kind, bc = std::move(bc), strides](const std::vector<double>& g) {
        std::vector<double>* ga = pa->requires_grad ? &grad_buffer(*pa) : nullptr;
        std::vector<double>* gb = pb->requires_grad ? &grad_buffer(*pb) : nullptr;
        for_each_index<2>(bc.out, strides,
                          [&](std::size_t o, const std::array<std::size_t, 2>& off) {
                            switch (kind) {
                              case BinaryKind::add:
                                if (ga) (*ga)[off[0]] += g[o];
                                if (gb) (*gb)[off[1]] += g[o];
                                break;
                              case BinaryKind::sub:
                                if (ga) (*ga)[off[0]] += g[o];
                                if (gb) (*gb)[off[1]] -= g[o];
                                break;
                              case BinaryKind::mul:
                                if (ga) (*ga)[off[0]] += g[o] * pb->data[off[1]];
                                if (gb) (*gb)[off[1]] += g[o] * pa->data[off[0]];
                                break;
                            }
                          });
      });
}

void require_rank_at_least(const Tensor& x, std::size_t rank, std::string_view op) {
  if (x.rank() < rank) {
    throw DimensionError(std::string(op) + " needs rank >= " + std::to_string(rank) +
                         ", got shape " + shape_str(x.shape()));
  }
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::mul, "mul"); }

Tensor add_scalar(const Tensor& x, double s) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (auto& v : out) v += s;
  TensorImpl* px = &Access::impl(x);
  return make_result("add_scalar", x.shape(), std::move(out), x.dtype(), {&x},
                     [px](const std::vector<double>& g) {
                       auto& gx = grad_buffer(*px);
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                     });
}

Tensor mul_scalar(const Tensor& x, double s) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (auto& v : out) v *= s;
  TensorImpl* px = &Access::impl(x);
  return make_result("mul_scalar", x.shape(), std::move(out), x.dtype(), {&x},
                     [px, s](const std::vector<double>& g) {
                       auto& gx = grad_buffer(*px);
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s;
                     });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank_at_least(a, 2, "matmul");
  if (b.rank() != 2 || a.shape().back() != b.dim(0)) {
    throw DimensionError("matmul: shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " are not aligned");
  }
  const std::size_t k = b.dim(0);
  const std::size_t n = b.dim(1);
  const std::size_t rows = a.numel() / k;
  const auto da = a.values();
  const auto db = b.values();
  std::vector<double> out(rows * n, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = da[i * k + p];
      const double* brow = db.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  Shape shape = a.shape();
  shape.back() = n;
  TensorImpl* pa = &Access::impl(a);
  TensorImpl* pb = &Access::impl(b);
  return make_result("matmul", std::move(shape), std::move(out), promote(a.dtype(), b.dtype()),
                     {&a, &b}, [pa, pb, rows, k, n](const std::vector<double>& g) {
                       if (pa->requires_grad) {
                         auto& ga = grad_buffer(*pa);
                         for (std::size_t i = 0; i < rows; ++i) {
                           for (std::size_t p = 0; p < k; ++p) {
                             double acc = 0.0;
                             for (std::size_t j = 0; j < n; ++j) {
                               acc += g[i * n + j] * pb->data[p * n + j];
                             }
                             ga[i * k + p] += acc;
                           }
                         }
                       }
                       if (pb->requires_grad) {
                         auto& gb = grad_buffer(*pb);
                         for (std::size_t i = 0; i < rows; ++i) {
                           for (std::size_t p = 0; p < k; ++p) {
                             const double av = pa->data[i * k + p];
                             for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
                           }
                         }
                       }
                     });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank_at_least(x, 1, "linear");
  if (weight.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weight.dim(0) ||
      x.shape().back() != weight.dim(1)) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                         shape_str(weight.shape()) + " and bias " + shape_str(bias.shape()));
  }
  const std::size_t out_f = weight.dim(0);
  const std::size_t in_f = weight.dim(1);
  const std::size_t rows = x.numel() / in_f;
  const auto dx = x.values();
  const auto dw = weight.values();
  const auto dbias = bias.values();

  // Transposed copy so the inner loop runs over contiguous output features.
  std::vector<double> wt(in_f * out_f);
  for (std::size_t o = 0; o < out_f; ++o) {
    for (std::size_t i = 0; i < in_f; ++i) wt[i * out_f + o] = dw[o * in_f + i];
  }
  std::vector<double> out(rows * out_f);
  for (std::size_t r = 0; r < rows; ++r) {
    double* orow = out.data() + r * out_f;
    std::copy(dbias.begin(), dbias.end(), orow);
    const double* xrow = dx.data() + r * in_f;
    for (std::size_t i = 0; i < in_f; ++i) {
      const double xv = xrow[i];
      const double* wrow = wt.data() + i * out_f;
      for (std::size_t o = 0; o < out_f; ++o) orow[o] += xv * wrow[o];
    }
  }

  Shape shape = x.shape();
  shape.back() = out_f;
  TensorImpl* px = &Access::impl(x);
  TensorImpl* pw = &Access::impl(weight);
  TensorImpl* pb = &Access::impl(bias);
  return make_result(
      "linear", std::move(shape), std::move(out),
      promote(x.dtype(), promote(weight.dtype(), bias.dtype())), {&x, &weight, &bias},
      [px, pw, pb, rows, in_f, out_f](const std::vector<double>& g) {
        if (px->requires_grad) {
          auto& gx = grad_buffer(*px);
          for (std::size_t r = 0; r < rows; ++r) {
            double* gxrow = gx.data() + r * in_f;
            for (std::size_t o = 0; o < out_f; ++o) {
              const double go = g[r * out_f + o];
              const double* wrow = pw->data.data() + o * in_f;
              for (std::size_t i = 0; i < in_f; ++i) gxrow[i] += go * wrow[i];
            }
          }
        }
        if (pw->requires_grad) {
          auto& gw = grad_buffer(*pw);
          for (std::size_t r = 0; r < rows; ++r) {
            const double* xrow = px->data.data() + r * in_f;
            for (std::size_t o = 0; o < out_f; ++o) {
              const double go = g[r * out_f + o];
              double* gwrow = gw.data() + o * in_f;
              for (std::size_t i = 0; i < in_f; ++i) gwrow[i] += go * xrow[i];
            }
          }
        }
        if (pb->requires_grad) {
          auto& gb = grad_buffer(*pb);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t o = 0; o < out_f; ++o) gb[o] += g[r * out_f + o];
          }
        }
      });
}

Tensor gelu(const Tensor& x) {
  const auto dx = x.values();
  std::vector<double> out(dx.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dx[i] * normal_cdf(dx[i]);
  TensorImpl* px = &Access::impl(x);
  return make_result("gelu", x.shape(), std::move(out), x.dtype(), {&x},
                     [px](const std::vector<double>& g) {
                       constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi *
                                                       std::numbers::sqrt2;
                       auto& gx = grad_buffer(*px);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const double v = px->data[i];
                         const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
                         gx[i] += g[i] * (normal_cdf(v) + v * pdf);
                       }
                     });
}

std::vector<std::size_t> inverse_permutation(const std::vector<std::size_t>& axes) {
  std::vector<std::size_t> inv(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) inv.at(axes[i]) = i;
  return inv;
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const Shape& in_shape = x.shape();
  const std::size_t rank = in_shape.size();
  std::vector<bool> used(rank, false);
  bool valid = axes.size() == rank;
  for (std::size_t i = 0; valid && i < axes.size(); ++i) {
    if (axes[i] >= rank || used[axes[i]]) {
      valid = false;
    } else {
      used[axes[i]] = true;
    }
  }
  if (!valid) {
    std::string list;
    for (auto a : axes) list += (list.empty() ? "" : ",") + std::to_string(a);
    throw ValidationError("permute: (" + list + ") is not a permutation of the axes of shape " +
                          shape_str(in_shape));
  }

  const auto in_strides = contiguous_strides(in_shape);
  Shape out_shape(rank);
  std::array<std::vector<std::size_t>, 1> gather{std::vector<std::size_t>(rank)};
  for (std::size_t d = 0; d < rank; ++d) {
    out_shape[d] = in_shape[axes[d]];
    gather[0][d] = in_strides[axes[d]];
  }
  const auto dx = x.values();
  std::vector<double> out(dx.size());
  for_each_index<1>(out_shape, gather,
                    [&](std::size_t o, const std::array<std::size_t, 1>& off) { out[o] = dx[off[0]]; });

  TensorImpl* px = &Access::impl(x);
  Shape shape_copy = out_shape;
  return make_result("permute", std::move(out_shape), std::move(out), x.dtype(), {&x},
                     [px, shape_copy, gather](const std::vector<double>& g) {
                       auto& gx = grad_buffer(*px);
                       for_each_index<1>(shape_copy, gather,
                                         [&](std::size_t o, const std::array<std::size_t, 1>& off) {
                                           gx[off[0]] += g[o];
                                         });
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                         shape_str(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  TensorImpl* px = &Access::impl(x);
  return make_result("reshape", std::move(shape), std::move(out), x.dtype(), {&x},
                     [px](const std::vector<double>& g) {
                       auto& gx = grad_buffer(*px);
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                     });
}

Tensor sum(const Tensor& x) {
  long double total = 0.0L;
  for (double v : x.values()) total += v;
  TensorImpl* px = &Access::impl(x);
  return make_result("sum", {1}, {static_cast<double>(total)}, x.dtype(), {&x}, [px](const std::vector<double>& g) {
    auto& gx = grad_buffer(*px);
    for (auto& v : gx) v += g[0];
  });
}

Tensor mean(const Tensor& x) {
  long double total = 0.0L;
  for (double v : x.values()) total += v;
  const double n = static_cast<double>(x.numel());
  TensorImpl* px = &Access::impl(x);
  return make_result("mean", {1}, {static_cast<double>(total / n)}, x.dtype(), {&x},
                     [px, n](const std::vector<double>& g) {
                       auto& gx = grad_buffer(*px);
                       for (auto& v : gx) v += g[0] / n;
                     });
}

Tensor mean(const Tensor& x, const std::vector<std::size_t>& axes) {
  const Shape& in_shape = x.shape();
  const std::size_t rank = in_shape.size();
  std::vector<bool> reduced(rank, false);
  for (auto a : axes) {
    if (a >= rank || reduced[a]) {
      throw ValidationError("mean: invalid or repeated axis " + std::to_string(a) +
                            " for shape " + shape_str(in_shape));
    }
    reduced[a] = true;
  }
  Shape out_shape;
  std::size_t count = 1;
  for (std::size_t d = 0; d < rank; ++d) {
    if (reduced[d]) {
      count *= in_shape[d];
    } else {
      out_shape.push_back(in_shape[d]);
    }
  }
  if (out_shape.empty()) out_shape.push_back(1);

  // Output offset per input axis; reduced axes contribute nothing.
  std::array<std::vector<std::size_t>, 1> scatter{std::vector<std::size_t>(rank, 0)};
  std::size_t stride = 1;
  for (std::size_t d = rank; d-- > 0;) {
    if (!reduced[d]) {
      scatter[0][d] = stride;
      stride *= in_shape[d];
    }
  }
  const auto dx = x.values();
  std::vector<long double> acc(shape_numel(out_shape), 0.0L);
  for_each_index<1>(in_shape, scatter,
                    [&](std::size_t i, const std::array<std::size_t, 1>& off) { acc[off[0]] += dx[i]; });
  const double inv = 1.0 / static_cast<double>(count);
  std::vector<double> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out[i] = static_cast<double>(acc[i] / static_cast<long double>(count));
  }

  TensorImpl* px = &Access::impl(x);
  return make_result("mean", std::move(out_shape), std::move(out), x.dtype(), {&x},
                     [px, in_shape, scatter, inv](const std::vector<double>& g) {
                       auto& gx = grad_buffer(*px);
                       for_each_index<1>(in_shape, scatter,
                                         [&](std::size_t i, const std::array<std::size_t, 1>& off) {
                                           gx[i] += g[off[0]] * inv;
                                         });
                     });
}

Tensor avg_pool_spatial2(const Tensor& x) {
  require_rank_at_least(x, 2, "avg_pool_spatial2");
  const std::size_t rank = x.rank();
  const std::size_t h = x.dim(rank - 2);
  const std::size_t w = x.dim(rank - 1);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ValidationError("avg_pool_spatial2 needs even spatial extents, got shape " +
                          shape_str(x.shape()));
  }
  const std::size_t ho = h / 2;
  const std::size_t wo = w / 2;
  const std::size_t planes = x.numel() / (h * w);
  const auto dx = x.values();
  std::vector<double> out(planes * ho * wo);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* in = dx.data() + p * h * w;
    double* o = out.data() + p * ho * wo;
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        const double* top = in + (2 * i) * w + 2 * j;
        const double* bottom = top + w;
        // Pairwise order keeps the mean of a constant window exact.
        o[i * wo + j] = ((top[0] + top[1]) + (bottom[0] + bottom[1])) * 0.25;
      }
    }
  }
  Shape shape = x.shape();
  shape[rank - 2] = ho;
  shape[rank - 1] = wo;
  TensorImpl* px = &Access::impl(x);
  return make_result("avg_pool_spatial2", std::move(shape), std::move(out), x.dtype(), {&x},
                     [px, planes, h, w, ho, wo](const std::vector<double>& g) {
                       auto& gx = grad_buffer(*px);
                       for (std::size_t p = 0; p < planes; ++p) {
                         for (std::size_t i = 0; i < h; ++i) {
                           for (std::size_t j = 0; j < w; ++j) {
                             gx[p * h * w + i * w + j] +=
                                 0.25 * g[p * ho * wo + (i / 2) * wo + (j / 2)];
                           }
                         }
                       }
                     });
}

namespace {
struct LerpTap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

std::vector<LerpTap> upsample_taps(std::size_t n) {
  std::vector<LerpTap> taps(2 * n);
  const double max_coord = static_cast<double>(n - 1);
  for (std::size_t o = 0; o < 2 * n; ++o) {
    double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    src = std::clamp(src, 0.0, max_coord);
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t hi = std::min(lo + 1, n - 1);
    taps[o] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}
}  // namespace

Tensor upsample_bilinear2(const Tensor& x) {
  require_rank_at_least(x, 2, "upsample_bilinear2");
  const std::size_t rank = x.rank();
  const std::size_t h = x.dim(rank - 2);
  const std::size_t w = x.dim(rank - 1);
  const std::size_t ho = 2 * h;
  const std::size_t wo = 2 * w;
  const std::size_t planes = x.numel() / (h * w);
  const auto ty = upsample_taps(h);
  const auto tx = upsample_taps(w);
  const auto dx = x.values();
  std::vector<double> out(planes * ho * wo);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* in = dx.data() + p * h * w;
    double* o = out.data() + p * ho * wo;
    for (std::size_t i = 0; i < ho; ++i) {
      const auto& y = ty[i];
      for (std::size_t j = 0; j < wo; ++j) {
        const auto& c = tx[j];
        // Lerp form a + t (b - a) is exact when a == b.
        const double v00 = in[y.lo * w + c.lo];
        const double v01 = in[y.lo * w + c.hi];
        const double v10 = in[y.hi * w + c.lo];
        const double v11 = in[y.hi * w + c.hi];
        const double r0 = v00 + c.frac * (v01 - v00);
        const double r1 = v10 + c.frac * (v11 - v10);
        o[i * wo + j] = r0 + y.frac * (r1 - r0);
      }
    }
  }
  Shape shape = x.shape();
  shape[rank - 2] = ho;
  shape[rank - 1] = wo;
  TensorImpl* px = &Access::impl(x);
  return make_result(
      "upsample_bilinear2", std::move(shape), std::move(out), x.dtype(), {&x},
      [px, planes, h, w, ho, wo, ty, tx](const std::vector<double>& g) {
        auto& gx = grad_buffer(*px);
        for (std::size_t p = 0; p < planes; ++p) {
          double* gi = gx.data() + p * h * w;
          const double* go = g.data() + p * ho * wo;
          for (std::size_t i = 0; i < ho; ++i) {
            const auto& y = ty[i];
            for (std::size_t j = 0; j < wo; ++j) {
              const auto& c = tx[j];
              const double gv = go[i * wo + j];
              gi[y.lo * w + c.lo] += gv * (1.0 - y.frac) * (1.0 - c.frac);
              gi[y.lo * w + c.hi] += gv * (1.0 - y.frac) * c.frac;
              gi[y.hi * w + c.lo] += gv * y.frac * (1.0 - c.frac);
              gi[y.hi * w + c.hi] += gv * y.frac * c.frac;
            }
          }
        }
      });
}

Tensor concat_last(const Tensor& x, const Tensor& tail) {
  require_rank_at_least(x, 1, "concat_last");
  if (!tail.defined()) return x;
  if (tail.rank() != 1) {
    throw DimensionError("concat_last: appended tensor must be rank-1, got " +
                         shape_str(tail.shape()));
  }
  const std::size_t n = x.shape().back();
  const std::size_t d = tail.dim(0);
  const std::size_t rows = x.numel() / n;
  const auto dx = x.values();
  const auto dt = tail.values();
  std::vector<double> out(rows * (n + d));
  for (std::size_t r = 0; r < rows; ++r) {
    double* o = out.data() + r * (n + d);
    std::copy_n(dx.data() + r * n, n, o);
    std::copy_n(dt.data(), d, o + n);
  }
  Shape shape = x.shape();
  shape.back() = n + d;
  TensorImpl* px = &Access::impl(x);
  TensorImpl* pt = &Access::impl(tail);
  return make_result("concat_last", std::move(shape), std::move(out),
                     promote(x.dtype(), tail.dtype()), {&x, &tail},
                     [px, pt, rows, n, d](const std::vector<double>& g) {
                       if (px->requires_grad) {
                         auto& gx = grad_buffer(*px);
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += g[r * (n + d) + j];
                         }
                       }
                       if (pt->requires_grad) {
                         auto& gt = grad_buffer(*pt);
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t j = 0; j < d; ++j) gt[j] += g[r * (n + d) + n + j];
                         }
                       }
                     });
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ValidationError("concat: no inputs");
  std::vector<double> out;
  std::vector<const Tensor*> inputs;
  std::vector<TensorImpl*> impls;
  DType dtype = parts.front().dtype();
  for (const auto& p : parts) {
    if (p.rank() != 1) {
      throw DimensionError("concat: inputs must be rank-1, got " + shape_str(p.shape()));
    }
    out.insert(out.end(), p.values().begin(), p.values().end());
    inputs.push_back(&p);
    impls.push_back(&Access::impl(p));
    dtype = promote(dtype, p.dtype());
  }
  Shape shape{out.size()};
  return make_result("concat", std::move(shape), std::move(out), dtype, inputs,
                     [impls](const std::vector<double>& g) {
                       std::size_t offset = 0;
                       for (TensorImpl* p : impls) {
                         const std::size_t n = p->data.size();
                         if (p->requires_grad) {
                           auto& gp = grad_buffer(*p);
                           for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
                         }
                         offset += n;
                       }
                     });
}

Tensor slice(const Tensor& x, std::size_t begin, std::size_t end) {
  if (x.rank() != 1 || begin >= end || end > x.dim(0)) {
    throw DimensionError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid for shape " + shape_str(x.shape()));
  }
  std::vector<double> out(x.values().begin() + static_cast<std::ptrdiff_t>(begin),
                          x.values().begin() + static_cast<std::ptrdiff_t>(end));
  TensorImpl* px = &Access::impl(x);
  return make_result("slice", {end - begin}, std::move(out), x.dtype(), {&x},
                     [px, begin](const std::vector<double>& g) {
                       auto& gx = grad_buffer(*px);
                       for (std::size_t i = 0; i < g.size(); ++i) gx[begin + i] += g[i];
                     });
}

}  // namespace tabmixer
