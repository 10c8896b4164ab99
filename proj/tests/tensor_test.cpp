// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <set>

#include <boost/math/special_functions/erf.hpp>
#include <gtest/gtest.h>

#include "tabmixer/errors.hpp"
#include "tabmixer/gradcheck.hpp"
#include "tabmixer/ops.hpp"
#include "tabmixer/random.hpp"
#include "tabmixer/tbmx.hpp"
#include "tabmixer/tensor.hpp"
#include "test_util.hpp"

namespace tabmixer {
namespace {

using testing::random_tensor;
using testing::to_vector;

// Independent normal CDF and GELU from Boost's erf.
double phi_oracle(double x) { return 0.5 * boost::math::erfc(-x / std::numbers::sqrt2); }
double gelu_oracle(double x) { return x * phi_oracle(x); }

TEST(Tensor, ConstructionChecksElementCount) {
  EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), ValidationError);
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.at(4), 5.0);
}

TEST(Tensor, NonFiniteResultsAreRejected) {
  const Tensor nan = Tensor::vector({1.0, std::numeric_limits<double>::quiet_NaN()});
  EXPECT_THROW(add_scalar(nan, 1.0), NumericalError);
  const Tensor big = Tensor::vector({1e308});
  EXPECT_THROW(mul_scalar(big, 10.0), NumericalError);
}

TEST(Tensor, F32RoundsEveryResult) {
  const Tensor a = Tensor::vector({0.1}, DType::f32);
  EXPECT_EQ(a.item(), static_cast<double>(0.1f));
  const Tensor b = add(a, Tensor::vector({0.2}, DType::f32));
  EXPECT_EQ(b.dtype(), DType::f32);
  EXPECT_EQ(b.item(), static_cast<double>(static_cast<float>(0.1f + 0.2f)));
}

TEST(Ops, MatmulWorkedExamples) {
  const Tensor a({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(to_vector(matmul(Tensor({2, 2}, {1, 0, 0, 1}), a)), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(to_vector(matmul(a, Tensor::zeros({2, 2}))), (std::vector<double>{0, 0, 0, 0}));
  EXPECT_EQ(to_vector(matmul(a, Tensor({2, 2}, {5, 6, 7, 8}))),
            (std::vector<double>{19, 22, 43, 50}));
}

TEST(Ops, MatmulSharesRightOperandOverLeadingAxes) {
  const Tensor a({2, 1, 2}, {1, 2, 3, 4});
  const Tensor b({2, 1}, {1, 1});
  const Tensor c = matmul(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 1, 1}));
  EXPECT_EQ(to_vector(c), (std::vector<double>{3, 7}));
}

TEST(Ops, MatmulMismatchNamesBothShapes) {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 2}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("(2,3)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(2,2)"), std::string::npos) << msg;
  }
}

TEST(Ops, GeluWorkedExamples) {
  const Tensor y = gelu(Tensor::vector({0.0, 1.0, -10.0}));
  EXPECT_EQ(y.at(0), 0.0);
  EXPECT_NEAR(y.at(1), 0.8413447, 1e-7);
  EXPECT_NEAR(y.at(1), gelu_oracle(1.0), 1e-15);
  EXPECT_LT(y.at(2), 0.0);
  EXPECT_NEAR(y.at(2) / -7.6e-23, 1.0, 0.01);
  EXPECT_NEAR(y.at(2), gelu_oracle(-10.0), 1e-35);
}

TEST(Ops, GeluMatchesErfOracle) {
  Pcg32 rng = Pcg32::keyed(7, "gelu-oracle");
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-8.0, 8.0);
    const double y = gelu(Tensor::vector({x})).item();
    EXPECT_LE(std::abs(y - x * phi_oracle(x)), 1e-12) << "x=" << x;
  }
}

TEST(Ops, PermuteShapeAndRoundTrip) {
  const Tensor x = random_tensor({2, 3, 4}, 1, "permute");
  const Tensor p = permute(x, {0, 2, 1});
  EXPECT_EQ(p.shape(), (Shape{2, 4, 3}));
  EXPECT_EQ(to_vector(permute(x, {0, 1, 2})), to_vector(x));
  const Tensor back = permute(p, {0, 2, 1});
  EXPECT_EQ(std::memcmp(back.values().data(), x.values().data(), x.numel() * sizeof(double)), 0);
  const std::vector<std::size_t> axes{2, 0, 1};
  EXPECT_EQ(to_vector(permute(permute(x, axes), inverse_permutation(axes))), to_vector(x));
  EXPECT_THROW(permute(x, {0, 0, 1}), ValidationError);
  EXPECT_THROW(permute(x, {0, 1}), ValidationError);
}

TEST(Ops, SumInvariantUnderPermuteAndReshape) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor x = random_tensor({3, 4, 5}, seed, "sum-invariance");
    const double s = sum(x).item();
    EXPECT_NEAR(sum(permute(x, {2, 0, 1})).item(), s, 1e-12);
    EXPECT_NEAR(sum(reshape(x, {60})).item(), s, 1e-12);
  }
}

TEST(Ops, AvgPoolWorkedExamples) {
  EXPECT_EQ(to_vector(avg_pool_spatial2(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}))),
            (std::vector<double>{2.5}));
  const Tensor pooled = avg_pool_spatial2(Tensor::full({1024, 4, 6, 6}, 0.5));
  EXPECT_EQ(pooled.shape(), (Shape{1024, 4, 3, 3}));
  for (double v : pooled.values()) ASSERT_EQ(v, 0.5);
  EXPECT_THROW(avg_pool_spatial2(Tensor::zeros({1, 1, 3, 2})), ValidationError);
}

TEST(Ops, UpsampleWorkedExamples) {
  EXPECT_EQ(to_vector(upsample_bilinear2(Tensor({1, 1, 1, 1}, {3.0}))),
            (std::vector<double>{3, 3, 3, 3}));
  const Tensor up = upsample_bilinear2(Tensor({1, 1, 1, 2}, {0.0, 1.0}));
  EXPECT_EQ(up.shape(), (Shape{1, 1, 2, 4}));
  EXPECT_EQ(to_vector(up), (std::vector<double>{0, 0.25, 0.75, 1, 0, 0.25, 0.75, 1}));
  const Tensor c = upsample_bilinear2(Tensor::full({2, 3, 3, 5}, -1.25));
  for (double v : c.values()) ASSERT_EQ(v, -1.25);
}

TEST(Ops, PoolThenUpsampleIsIdentityOnSpatiallyConstantInput) {
  std::vector<double> v;
  for (int c = 0; c < 2; ++c)
    for (int t = 0; t < 3; ++t)
      for (int i = 0; i < 16; ++i) v.push_back(0.1 * c + 0.37 * t + 0.01);
  const Tensor x({2, 3, 4, 4}, v);
  const Tensor y = upsample_bilinear2(avg_pool_spatial2(x));
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_LE(std::abs(y.at(i) - v[i]), std::abs(v[i]) * std::numeric_limits<double>::epsilon());
  }
}

TEST(Ops, ConcatLastWorkedExamples) {
  const Tensor a = random_tensor({2, 3, 9}, 0, "concat-a", true);
  const Tensor b = random_tensor({29}, 0, "concat-b", true);
  EXPECT_EQ(concat_last(a, b).shape(), (Shape{2, 3, 38}));
  EXPECT_EQ(to_vector(concat_last(a, Tensor{})), to_vector(a));

  const Tensor small = random_tensor({2, 3, 9}, 1, "concat-small");
  const Tensor tail = random_tensor({4}, 1, "concat-tail", true);
  sum(concat_last(small, tail)).backward();
  for (double g : tail.grad()) EXPECT_EQ(g, 6.0);
}

TEST(Ops, MeanOverAxes) {
  const Tensor x({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  const Tensor m = mean(x, {1, 2});
  EXPECT_EQ(m.shape(), (Shape{2}));
  EXPECT_EQ(to_vector(m), (std::vector<double>{2.5, 6.5}));
  EXPECT_THROW(mean(x, {3}), ValidationError);
}

TEST(Autograd, WorkedExamples) {
  const Tensor x = random_tensor({2, 3}, 3, "ones", true);
  sum(x).backward();
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);

  const Tensor y = Tensor({3}, {1, 2, 3}, DType::f64, true);
  sum(mul(y, y)).backward();
  EXPECT_EQ(to_vector(Tensor({3}, {y.grad().begin(), y.grad().end()})),
            (std::vector<double>{2, 4, 6}));
}

TEST(Autograd, RepeatedBackwardAccumulates) {
  Tensor x = Tensor({2}, {1, 2}, DType::f64, true);
  sum(mul_scalar(x, 3.0)).backward();
  sum(mul_scalar(x, 3.0)).backward();
  EXPECT_EQ(x.grad()[0], 6.0);
  x.zero_grad();
  EXPECT_FALSE(x.has_grad());
}

TEST(Autograd, NonScalarBackwardIsAnError) {
  const Tensor x = Tensor({2}, {1, 2}, DType::f64, true);
  EXPECT_THROW(mul_scalar(x, 2.0).backward(), ValidationError);
}

TEST(Autograd, SharedSubgraphVisitedOnce) {
  const Tensor x = Tensor({1}, {3.0}, DType::f64, true);
  const Tensor h = mul(x, x);        // x^2
  const Tensor y = add(h, mul(h, x));  // x^2 + x^3
  sum(y).backward();
  EXPECT_EQ(x.grad()[0], 2 * 3.0 + 3 * 9.0);
}

TEST(Autograd, NoGradGuardBuildsNoGraph) {
  const Tensor x = Tensor({1}, {2.0}, DType::f64, true);
  Tensor y;
  {
    NoGradGuard guard;
    y = mul(x, x);
  }
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(grad_mode_enabled());
}

TEST(GradCheck, ScalarSquare) {
  const Tensor theta = Tensor({1}, {3.0}, DType::f64, true);
  const auto r = grad_check([&] { return sum(mul(theta, theta)); }, {{"theta", theta}});
  EXPECT_EQ(r.checked, 1u);
  EXPECT_NEAR(r.analytic, 6.0, 1e-12);
  EXPECT_NEAR(r.numeric, 6.0, 1e-8);
  EXPECT_LE(r.max_rel_error, 1e-9);
}

TEST(GradCheck, MseOfLinearSystemAgainstSmallStepOracle) {
  const Tensor w = Tensor({2, 2}, {0.3, -0.7, 1.1, 0.4}, DType::f64, true);
  const Tensor x({2, 1}, {0.5, -1.5});
  const Tensor y({2, 1}, {1.0, 2.0});
  auto loss = [&] {
    const Tensor d = sub(matmul(w, x), y);
    return mean(mul(d, d));
  };
  Tensor l = loss();
  l.backward();
  // Independent central differences with h = 1e-6 computed directly here.
  std::vector<double> base(w.values().begin(), w.values().end());
  for (std::size_t i = 0; i < 4; ++i) {
    auto f = [&](double delta) {
      std::vector<double> p = base;
      p[i] += delta;
      const Tensor wp({2, 2}, p);
      const Tensor d = sub(matmul(wp, x), y);
      return mean(mul(d, d)).item();
    };
    const double h = 1e-6;
    const double numeric = (f(h) - f(-h)) / (2 * h);
    const double a = w.grad()[i];
    EXPECT_LE(std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric)), 1e-7);
  }
}

TEST(GradCheck, GeluOfLinearMap) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor w = random_tensor({3, 4}, seed, "gelu-w", true, 0.3);
    const Tensor x = random_tensor({4, 2}, seed, "gelu-x", true);
    const auto r = grad_check([&] { return sum(gelu(matmul(w, x))); }, {{"w", w}, {"x", x}});
    EXPECT_LE(r.max_rel_error, 1e-6) << "seed " << seed << " " << r.worst_param;
  }
}

TEST(GradCheck, EveryDifferentiableOp) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor a = random_tensor({2, 3, 4, 4}, seed, "ops-a", true);
    const Tensor b = random_tensor({2, 3, 4, 4}, seed, "ops-b", true);
    const Tensor v = random_tensor({4}, seed, "ops-v", true);
    const Tensor w = random_tensor({3, 4}, seed, "ops-w", true);
    const Tensor bias = random_tensor({3}, seed, "ops-bias", true);
    const Tensor r = random_tensor({2 * 3 * 2 * 2 + 4}, seed, "ops-r");

    std::vector<std::pair<std::string, std::function<Tensor()>>> cases{
        {"add", [&] { return sum(mul(add(a, b), a)); }},
        {"sub", [&] { return sum(mul(sub(a, b), b)); }},
        {"mul_broadcast", [&] { return sum(mul(mul(a, v), b)); }},
        {"scalar", [&] { return sum(mul(add_scalar(mul_scalar(a, 1.5), 0.3), a)); }},
        {"matmul", [&] { return sum(gelu(matmul(a, reshape(slice(reshape(b, {96}), 0, 16), {4, 4})))); }},
        {"linear", [&] { return sum(gelu(linear(a, w, bias))); }},
        {"permute", [&] { return sum(mul(permute(a, {3, 1, 0, 2}), permute(b, {3, 1, 0, 2}))); }},
        {"mean_axes", [&] { const Tensor m = mean(mul(a, b), {1, 3}); return sum(mul(m, m)); }},
        {"pool", [&] {
           const Tensor q = add_scalar(avg_pool_spatial2(add(a, b)), 3.0);
           return sum(mul(q, q));
         }},
        {"upsample", [&] { return sum(mul(upsample_bilinear2(avg_pool_spatial2(a)), b)); }},
        {"concat", [&] {
           const Tensor c = concat_last(reshape(avg_pool_spatial2(a), {2, 3, 4}), v);
           return sum(mul(gelu(c), c));
         }},
        {"concat_slice", [&] {
           const std::vector<Tensor> parts{reshape(avg_pool_spatial2(b), {24}), v};
           const Tensor c = concat(parts);
           return sum(mul(mul(c, r), slice(concat(parts), 0, 28)));
         }},
        {"mean", [&] { return mean(mul(a, gelu(b))); }},
    };
    for (const auto& [name, fn] : cases) {
      const auto res = grad_check(fn, {{"a", a}, {"b", b}, {"v", v}, {"w", w}, {"bias", bias}});
      EXPECT_LE(res.max_rel_error, 1e-6) << name << " seed " << seed << " " << res.worst_param
                                         << "[" << res.worst_index << "] analytic " << res.analytic
                                         << " numeric " << res.numeric;
    }
  }
}

TEST(GradCheck, RequiresF64AndFiniteLoss) {
  const Tensor x = Tensor({1}, {1.0}, DType::f32, true);
  EXPECT_THROW(grad_check([&] { return sum(x); }, {{"x", x}}), ValidationError);
}

TEST(Random, KeyedStreamsAreDeterministicAndDistinct) {
  Pcg32 a = Pcg32::keyed(42, "alpha");
  Pcg32 b = Pcg32::keyed(42, "alpha");
  Pcg32 c = Pcg32::keyed(42, "beta");
  bool differs = false;
  for (int i = 0; i < 16; ++i) {
    const auto x = a.next_u32();
    EXPECT_EQ(x, b.next_u32());
    differs = differs || x != c.next_u32();
  }
  EXPECT_TRUE(differs);
}

TEST(Random, Pcg32ReferenceSequence) {
  // Reference pcg32 demo: seed 42, sequence 54.
  Pcg32 rng(42, 54);
  const std::uint32_t expected[] = {0xa15c02b7, 0x7b47f409, 0xba1d3330, 0x83d2f293,
                                    0xbfa4784b, 0xcbed606e};
  for (std::uint32_t e : expected) EXPECT_EQ(rng.next_u32(), e);
}

TEST(Random, UniformAndBelowRanges) {
  Pcg32 rng = Pcg32::keyed(1, "ranges");
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Tbmx, RoundTripBothDtypes) {
  for (DType dtype : {DType::f32, DType::f64}) {
    const Tensor x = random_tensor({2, 3, 4}, 5, "tbmx").to(dtype);
    const auto bytes = encode_tbmx(x);
    ASSERT_GE(bytes.size(), 8u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "TBMX");
    EXPECT_EQ(bytes[4], 1);  // version, little endian
    EXPECT_EQ(bytes[5], 0);
    EXPECT_EQ(bytes[6], dtype == DType::f32 ? 1 : 2);
    EXPECT_EQ(bytes[7], 3);
    EXPECT_EQ(bytes.size(), 8 + 3 * 8 + 24 * (dtype == DType::f32 ? 4 : 8));
    const Tensor y = decode_tbmx(bytes);
    EXPECT_EQ(y.shape(), x.shape());
    EXPECT_EQ(y.dtype(), dtype);
    EXPECT_EQ(to_vector(y), to_vector(x));
  }
}

TEST(Tbmx, CorruptInputIsAParseError) {
  auto bytes = encode_tbmx(Tensor::vector({1.0, 2.0}));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_tbmx(bad_magic), ParseError);
  bytes.pop_back();
  EXPECT_THROW(decode_tbmx(bytes), ParseError);
}

}  // namespace
}  // namespace tabmixer
