// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "tabmixer/errors.hpp"
#include "tabmixer/gradcheck.hpp"
#include "tabmixer/ops.hpp"
#include "tabmixer/tabmixer.hpp"
#include "tabmixer/verify.hpp"
#include "test_util.hpp"

namespace tabmixer {
namespace {

using testing::random_tensor;
using testing::to_vector;

void zero_weights(ParamRegistry& reg) {
  for (const auto& e : reg.entries()) {
    if (e.role != ParamRole::weight && e.role != ParamRole::bias) continue;
    Tensor t = e.tensor;
    for (double& v : t.mutable_values()) v = 0.0;
  }
}

// Independent per-sub-layer count written from the block structure.
std::size_t sublayer_oracle(std::size_t n, std::size_t d) {
  const std::size_t h = std::max<std::size_t>(1, n / 2);
  return 2 * n + (n + d) * h + h + h * n + n;
}

std::size_t count_oracle(const TabMixerConfig& c) {
  const std::size_t d = c.enable_tabular ? c.D : 0;
  std::size_t total = 0;
  if (d > 0) {
    const std::size_t h = std::max<std::size_t>(1, d / 2);
    total += d * h + h + h * d + d;
  }
  if (c.enable_spatial) total += sublayer_oracle(c.H * c.W / 4, d);
  if (c.enable_temporal) total += sublayer_oracle(c.T, d);
  if (c.enable_channel) total += sublayer_oracle(c.C, d);
  return total;
}

TabMixerConfig all_flags(std::size_t C, std::size_t T, std::size_t H, std::size_t W, std::size_t D,
                         unsigned mask) {
  TabMixerConfig cfg{C, T, H, W, D};
  cfg.enable_spatial = mask & 1u;
  cfg.enable_temporal = mask & 2u;
  cfg.enable_channel = mask & 4u;
  cfg.enable_tabular = mask & 8u;
  return cfg;
}

TEST(TabMixerConfig, Validation) {
  EXPECT_NO_THROW((TabMixerConfig{4, 2, 6, 6, 3}.validate()));
  EXPECT_THROW((TabMixerConfig{4, 2, 5, 6, 3}.validate()), ValidationError);
  EXPECT_THROW((TabMixerConfig{0, 2, 6, 6, 3}.validate()), ValidationError);
  EXPECT_EQ((TabMixerConfig{1024, 4, 6, 6, 29}.S()), 9u);
}

TEST(TabMixerConfig, JsonRoundTrip) {
  TabMixerConfig cfg{8, 4, 4, 4, 5};
  cfg.enable_temporal = false;
  const nlohmann::json j = cfg;
  for (const char* key : {"C", "T", "H", "W", "D", "enable_spatial", "enable_temporal",
                          "enable_channel", "enable_tabular"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.get<TabMixerConfig>(), cfg);
}

TEST(ParamCount, ReferenceDims) {
  const TabMixerConfig full{1024, 4, 6, 6, 29};
  EXPECT_EQ(param_count_formula(full), 1068170u);
  TabMixerConfig wo_cm = full;
  wo_cm.enable_channel = false;
  EXPECT_EQ(param_count_formula(wo_cm), 1162u);
  EXPECT_EQ(param_count_formula(wo_cm), 855u + 219u + 88u);
  ParamRegistry reg;
  TabMixer mixer(full, reg);
  EXPECT_EQ(reg.total(), 1068170u);
  EXPECT_EQ(mixer.param_count(), 1068170u);
}

TEST(ParamCount, FormulaMatchesRegistryForEveryFlagCombination) {
  for (unsigned mask = 0; mask < 16; ++mask) {
    for (const auto& [C, T, H, W, D] :
         std::vector<std::array<std::size_t, 5>>{{8, 4, 4, 4, 5}, {1024, 4, 6, 6, 29},
                                                 {3, 1, 2, 2, 0}, {5, 3, 2, 6, 1}}) {
      const TabMixerConfig cfg = all_flags(C, T, H, W, D, mask);
      ParamRegistry reg;
      TabMixer mixer(cfg, reg);
      EXPECT_EQ(reg.total(), param_count_formula(cfg)) << "mask " << mask;
      EXPECT_EQ(reg.total(), count_oracle(cfg)) << "mask " << mask;
    }
  }
}

TEST(ParamCount, DisablingASubLayerRemovesExactlyItsShare) {
  const TabMixerConfig full{16, 4, 6, 6, 7};
  const std::size_t total = param_count_formula(full);
  TabMixerConfig c = full;
  c.enable_spatial = false;
  EXPECT_EQ(total - param_count_formula(c), sublayer_oracle(9, 7));
  c = full;
  c.enable_temporal = false;
  EXPECT_EQ(total - param_count_formula(c), sublayer_oracle(4, 7));
  c = full;
  c.enable_channel = false;
  EXPECT_EQ(total - param_count_formula(c), sublayer_oracle(16, 7));
}

TEST(TabMixer, PermutationCycle) {
  ParamRegistry reg;
  TabMixer mixer({4, 3, 4, 4, 2}, reg);
  EXPECT_EQ(mixer.layers()[0].permutation, (std::vector<std::size_t>{0, 2, 1}));
  EXPECT_EQ(mixer.layers()[1].permutation, (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(mixer.layers()[2].permutation, (std::vector<std::size_t>{2, 1, 0}));
  EXPECT_EQ(mixer.layers()[0].extent, 4u);
  EXPECT_EQ(mixer.layers()[1].extent, 3u);
  EXPECT_EQ(mixer.layers()[2].extent, 4u);
}

TEST(TabMixer, EmbedInputWorkedExamples) {
  ParamRegistry reg;
  TabMixer big({1024, 4, 6, 6, 29}, reg);
  EXPECT_EQ(big.embed_input(Tensor::full({1024, 4, 6, 6}, 1.5)).values().shape(),
            (Shape{1024, 4, 9}));

  ParamRegistry reg2;
  TabMixer one({1, 1, 2, 2, 0}, reg2);
  EXPECT_EQ(to_vector(one.embed_input(Tensor({1, 1, 2, 2}, {1, 2, 3, 4})).values()),
            (std::vector<double>{2.5}));
  for (double v : to_vector(one.embed_input(Tensor::full({1, 1, 2, 2}, -2.0)).values())) {
    EXPECT_EQ(v, -2.0);
  }
  EXPECT_THROW(one.embed_input(Tensor::zeros({1, 1, 4, 2})), DimensionError);
}

TEST(TabMixer, EmbedTabularWorkedExamples) {
  ParamRegistry reg;
  TabMixer mixer({2, 2, 2, 2, 2}, reg);
  zero_weights(reg);
  for (double v : to_vector(mixer.embed_tabular(Tensor::vector({0.3, -1.0})))) EXPECT_EQ(v, 0.0);

  Tensor w1 = mixer.tab_block().fc1.weight;
  Tensor w2 = mixer.tab_block().fc2.weight;
  ASSERT_EQ(w1.shape(), (Shape{1, 2}));
  ASSERT_EQ(w2.shape(), (Shape{2, 1}));
  for (double& v : w1.mutable_values()) v = 1.0;
  for (double& v : w2.mutable_values()) v = 1.0;
  const Tensor out = mixer.embed_tabular(Tensor::vector({1.0, 1.0}));
  const double phi2 = 0.5 * boost::math::erfc(-2.0 / std::numbers::sqrt2);
  EXPECT_NEAR(phi2, 0.97725, 1e-5);
  for (double v : out.values()) {
    EXPECT_NEAR(v, 2.0 * phi2, 1e-15);
    EXPECT_NEAR(v, 1.9545, 1e-4);
  }
  EXPECT_THROW(mixer.embed_tabular(Tensor::vector({1.0})), DimensionError);
}

TEST(TabMixer, SublayerWithZeroMlpIsPureSkipThenPermute) {
  ParamRegistry reg;
  MixingLayer layer;
  layer.name = "l";
  layer.extent = 5;
  layer.affine = AffineParams::create(reg, "l.affine", 5);
  layer.block = MlpBlock::create(reg, "l.mlp", 5 + 2, bottleneck_width(5), 5);
  layer.permutation = {0, 2, 1};
  const Tensor cube = random_tensor({3, 4, 5}, 0, "skip-cube");
  const Tensor tab = random_tensor({2}, 0, "skip-tab");
  EXPECT_EQ(to_vector(mixer_sublayer(cube, tab, layer)), to_vector(permute(cube, {0, 2, 1})));
  layer.enabled = false;
  EXPECT_EQ(mixer_sublayer(cube, tab, layer).shape(), (Shape{3, 5, 4}));
}

TEST(TabMixer, SublayerGradCheck) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ParamRegistry reg;
    MixingLayer layer;
    layer.name = "l";
    layer.extent = 5;
    layer.affine = AffineParams::create(reg, "l.affine", 5);
    layer.block = MlpBlock::create(reg, "l.mlp", 5 + 2, bottleneck_width(5), 5);
    layer.permutation = {0, 2, 1};
    init_params(reg, seed);
    const Tensor cube = random_tensor({3, 4, 5}, seed, "sub-cube", true);
    const Tensor tab = random_tensor({2}, seed, "sub-tab", true);
    const Tensor r = random_tensor({3, 5, 4}, seed, "sub-r");
    std::vector<NamedTensor> leaves = reg.named();
    leaves.push_back({"cube", cube});
    leaves.push_back({"tab", tab});
    const auto res =
        grad_check([&] { return sum(mul(mixer_sublayer(cube, tab, layer), r)); }, leaves);
    EXPECT_LE(res.max_rel_error, 1e-6) << "seed " << seed << " " << res.worst_param;
  }
}

TEST(TabMixer, OutputShapeMatchesInput) {
  ParamRegistry reg;
  TabMixer mixer({1024, 4, 6, 6, 29}, reg);
  init_params(reg, 0);
  const Tensor x = random_tensor({1024, 4, 6, 6}, 0, "big-x");
  EXPECT_EQ(mixer.forward(x, random_tensor({29}, 0, "big-tab")).shape(), x.shape());
}

TEST(TabMixer, ZeroWeightsGiveUpsampledPoolingAndIgnoreTabular) {
  ParamRegistry reg;
  TabMixer mixer({3, 2, 4, 6, 4}, reg);
  init_params(reg, 5);
  zero_weights(reg);
  const Tensor x = random_tensor({3, 2, 4, 6}, 1, "transparency-x");
  const Tensor expected = upsample_bilinear2(avg_pool_spatial2(x));
  const Tensor y1 = mixer.forward(x, random_tensor({4}, 1, "tab1"));
  const Tensor y2 = mixer.forward(x, random_tensor({4}, 2, "tab2", false, 10.0));
  EXPECT_EQ(to_vector(y1), to_vector(expected));
  EXPECT_EQ(to_vector(y1), to_vector(y2));

  const Tensor c = Tensor::full({3, 2, 4, 6}, 0.731);
  for (double v : to_vector(mixer.forward(c, random_tensor({4}, 3, "tab3")))) EXPECT_EQ(v, 0.731);
}

TEST(TabMixer, TabularSensitivityWithRandomParameters) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ParamRegistry reg;
    TabMixer mixer({4, 2, 4, 4, 3}, reg);
    init_params(reg, seed);
    const Tensor x = random_tensor({4, 2, 4, 4}, seed, "sens-x");
    const auto y1 = to_vector(mixer.forward(x, random_tensor({3}, seed, "sens-t1")));
    const auto y2 = to_vector(mixer.forward(x, random_tensor({3}, seed, "sens-t2")));
    EXPECT_NE(y1, y2) << "seed " << seed;
  }
}

TEST(TabMixer, WithoutTabularIsTabInvariantForRandomParameters) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TabMixerConfig cfg{4, 2, 4, 4, 3};
    cfg.enable_tabular = false;
    ParamRegistry reg;
    TabMixer mixer(cfg, reg);
    init_params(reg, seed);
    const Tensor x = random_tensor({4, 2, 4, 4}, seed, "inv-x");
    const auto y1 = to_vector(mixer.forward(x, random_tensor({3}, seed, "inv-t1")));
    const auto y2 = to_vector(mixer.forward(x, random_tensor({3}, seed, "inv-t2", false, 100.0)));
    EXPECT_EQ(y1, y2);
    EXPECT_EQ(y1, to_vector(mixer.forward(x, Tensor{})));
  }
}

TEST(TabMixer, EveryFlagCombinationRunsAndPreservesShape) {
  for (unsigned mask = 0; mask < 16; ++mask) {
    const TabMixerConfig cfg = all_flags(4, 3, 4, 2, 2, mask);
    ParamRegistry reg;
    TabMixer mixer(cfg, reg);
    init_params(reg, mask);
    const Tensor x = random_tensor({4, 3, 4, 2}, mask, "flags-x");
    EXPECT_EQ(mixer.forward(x, random_tensor({2}, mask, "flags-t")).shape(), x.shape());
  }
}

TEST(TabMixer, EndToEndGradCheck) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GradScenario s;
    s.module = "tabmixer";
    s.seed = seed;
    const auto r = run_gradcheck(s);
    EXPECT_LE(r.max_rel_error, 1e-4) << "seed " << seed << " " << r.worst_param;
  }
}

TEST(TabMixer, ExtentMismatchIsRejected) {
  ParamRegistry reg;
  TabMixer mixer({4, 2, 4, 4, 3}, reg);
  EXPECT_THROW(mixer.forward(Tensor::zeros({4, 2, 4, 6}), Tensor::zeros({3})), DimensionError);
  EXPECT_THROW(mixer.forward(Tensor::zeros({4, 2, 4, 4}), Tensor::zeros({2})), DimensionError);
}

}  // namespace
}  // namespace tabmixer
