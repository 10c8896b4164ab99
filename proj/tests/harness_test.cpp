// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "tabmixer/bench.hpp"
#include "tabmixer/checkpoint.hpp"
#include "tabmixer/errors.hpp"
#include "tabmixer/metrics.hpp"
#include "tabmixer/noise.hpp"
#include "tabmixer/ops.hpp"
#include "tabmixer/optim.hpp"
#include "tabmixer/stats.hpp"
#include "tabmixer/synthetic.hpp"
#include "tabmixer/train.hpp"
#include "test_util.hpp"

namespace tabmixer {
namespace {

namespace fs = std::filesystem;
using Big = boost::multiprecision::cpp_bin_float_50;
using testing::read_file;
using testing::scratch_dir;
using testing::to_vector;

// Loss and optimizer

TEST(MseLoss, WorkedExamples) {
  const Tensor target = Tensor::vector({1, 3});
  const Tensor same = Tensor::vector({1, 3});
  EXPECT_EQ(mse_loss(same, target).item(), 0.0);
  const Tensor pred = Tensor({2}, {0, 0}, DType::f64, true);
  const Tensor loss = mse_loss(pred, target);
  EXPECT_EQ(loss.item(), 5.0);
  loss.backward();
  EXPECT_EQ(std::vector<double>(pred.grad().begin(), pred.grad().end()),
            (std::vector<double>{-1, -3}));
  EXPECT_THROW(mse_loss(Tensor::vector({1}), target), DimensionError);
}

TEST(AdamW, WorkedExamples) {
  std::vector<double> theta{1.0};
  std::vector<double> g{1.0};
  std::vector<double> m{0.0};
  std::vector<double> v{0.0};
  adamw_step(theta, g, m, v, 1, 0.1, {0.0});
  EXPECT_NEAR(theta[0], 1.0 - 0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(theta[0], 0.9, 1e-8);

  theta = {1.0};
  m = {0.0};
  v = {0.0};
  adamw_step(theta, g, m, v, 1, 0.1, {0.01});
  EXPECT_NEAR(theta[0], 0.899, 1e-8);
}

TEST(AdamW, ZeroGradientWithoutDecayIsFixedPoint) {
  std::vector<double> theta{0.5, -2.0, 3.25};
  const std::vector<double> before = theta;
  std::vector<double> g(3, 0.0);
  std::vector<double> m(3, 0.0);
  std::vector<double> v(3, 0.0);
  for (std::size_t t = 1; t <= 5; ++t) adamw_step(theta, g, m, v, t, 0.1, {0.0});
  EXPECT_EQ(theta, before);
}

TEST(AdamW, NonFiniteGradientNamesParameter) {
  std::vector<double> theta{1.0};
  std::vector<double> g{std::numeric_limits<double>::quiet_NaN()};
  std::vector<double> m{0.0};
  std::vector<double> v{0.0};
  try {
    adamw_step(theta, g, m, v, 1, 0.1, {}, "head.weight");
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("head.weight"), std::string::npos);
  }
  EXPECT_THROW(adamw_step(theta, std::vector<double>{1.0}, m, v, 0, 0.1, {}), ValidationError);
}

TEST(AdamW, RegistryOptimizerMatchesScalarUpdate) {
  ParamRegistry reg;
  const LinearLayer lin = LinearLayer::create(reg, "fc", 2, 1);
  init_params(reg, 0);
  const std::vector<double> w0 = to_vector(lin.weight);
  const Tensor x = Tensor::vector({1.0, -2.0});
  sum(lin.forward(x)).backward();
  AdamW opt(reg, {0.01});
  EXPECT_EQ(opt.step(0.1), 1u);
  std::vector<double> expected = w0;
  std::vector<double> grad{1.0, -2.0};
  std::vector<double> m(2, 0.0);
  std::vector<double> v(2, 0.0);
  adamw_step(expected, grad, m, v, 1, 0.1, {0.01});
  EXPECT_EQ(to_vector(lin.weight), expected);
}

TEST(CosineLr, WorkedExamples) {
  EXPECT_EQ(cosine_lr(0, 10, 1e-3, 1e-5), 1e-3);
  EXPECT_NEAR(cosine_lr(10, 10, 1e-3, 1e-5), 1e-5, 1e-18);
  EXPECT_NEAR(cosine_lr(5, 10, 1e-3, 1e-5), (1e-3 + 1e-5) / 2, 1e-18);
  EXPECT_THROW(cosine_lr(0, 0, 1e-3), ValidationError);
  EXPECT_THROW(cosine_lr(11, 10, 1e-3), ValidationError);
}

// Metrics

TEST(Metrics, WorkedExamples) {
  const std::vector<double> pred{10, 20};
  const std::vector<double> target{12, 18};
  const MetricsReport r = compute_metrics(pred, target);
  EXPECT_EQ(r.mae, 2.0);
  EXPECT_EQ(r.rmse, 2.0);
  EXPECT_NEAR(r.mape, 100.0 * (2.0 / 12 + 2.0 / 18) / 2, 1e-12);
  EXPECT_NEAR(r.mape, 13.889, 5e-4);
  EXPECT_EQ(r.n, 2u);
  EXPECT_EQ(r.abs_errors, (std::vector<double>{2, 2}));
  const MetricsReport z = compute_metrics(target, target);
  EXPECT_EQ(z.mae, 0.0);
  EXPECT_EQ(z.rmse, 0.0);
  EXPECT_EQ(z.mape, 0.0);
}

TEST(Metrics, ZeroTargetsAreExcludedFromMape) {
  const std::vector<double> pred{1, 11};
  const std::vector<double> target{0, 10};
  const MetricsReport r = compute_metrics(pred, target);
  EXPECT_EQ(r.mape_excluded, 1u);
  EXPECT_NEAR(r.mape, 10.0, 1e-12);
  EXPECT_THROW(compute_metrics(std::vector<double>{}, std::vector<double>{}), ValidationError);
  EXPECT_THROW(compute_metrics(pred, std::vector<double>{1}), DimensionError);
}

TEST(Metrics, RmseNeverBelowMae) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Pcg32 rng = Pcg32::keyed(seed, "metrics");
    const std::size_t n = 1 + rng.below(40);
    std::vector<double> p(n);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = 25 + 5 * rng.normal();
      t[i] = 25 + 5 * rng.normal();
    }
    const MetricsReport r = compute_metrics(p, t);
    EXPECT_GE(r.rmse, r.mae);
    EXPECT_GE(r.mae, 0.0);
    EXPECT_EQ(r.n, r.abs_errors.size());
  }
}

// Statistics

double t_oracle_p(const Big& t, const Big& df) {
  return static_cast<double>(boost::math::ibeta(df / 2, Big(0.5), df / (df + t * t)));
}

TEST(TTest, WorkedExamples) {
  const std::vector<double> d{2, 1, 3, 2, 2};
  const std::vector<double> zeros(5, 0.0);
  const PairedTTest r = paired_t_test(d, zeros);
  EXPECT_NEAR(r.t, 2.0 / (std::sqrt(0.5) / std::sqrt(5.0)), 1e-12);
  EXPECT_NEAR(r.t, 6.3246, 5e-5);
  EXPECT_EQ(r.df, 4u);
  EXPECT_NEAR(r.p, 0.0032, 5e-5);
  EXPECT_NEAR(r.p, t_oracle_p(Big(r.t), Big(4)), 1e-9);

  const std::vector<double> alt{1, -1, 1, -1};
  const PairedTTest z = paired_t_test(alt, std::vector<double>(4, 0.0));
  EXPECT_EQ(z.t, 0.0);
  EXPECT_EQ(z.p, 1.0);
  const PairedTTest same = paired_t_test(d, d);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_EQ(same.p, 1.0);
  EXPECT_FALSE(same.degenerate);
}

TEST(TTest, DegenerateAndInvalid) {
  const std::vector<double> a{3, 4, 5};
  const std::vector<double> b{1, 2, 3};
  const PairedTTest r = paired_t_test(a, b);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.p, 0.0);
  EXPECT_TRUE(std::isinf(r.t));
  EXPECT_THROW(paired_t_test(std::vector<double>{1}, std::vector<double>{2}), ValidationError);
  EXPECT_THROW(paired_t_test(a, std::vector<double>{1, 2}), DimensionError);
}

TEST(TTest, Antisymmetric) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Pcg32 rng = Pcg32::keyed(seed, "ttest-anti");
    std::vector<double> a(12);
    std::vector<double> b(12);
    for (std::size_t i = 0; i < 12; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    const PairedTTest ab = paired_t_test(a, b);
    const PairedTTest ba = paired_t_test(b, a);
    EXPECT_EQ(ab.t, -ba.t);
    EXPECT_EQ(ab.p, ba.p);
  }
}

TEST(TTest, MatchesExtendedPrecisionOracle) {
  for (std::uint64_t fixture = 0; fixture < 20; ++fixture) {
    Pcg32 rng = Pcg32::keyed(fixture, "ttest-fixture");
    const std::size_t n = 2 + rng.below(60);
    const double shift = rng.uniform(-1.0, 1.0);
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal() + shift;
      b[i] = rng.normal();
    }
    Big mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += Big(a[i]) - Big(b[i]);
    mean /= n;
    Big ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Big dev = Big(a[i]) - Big(b[i]) - mean;
      ss += dev * dev;
    }
    const Big sd = sqrt(ss / (n - 1));
    const Big t = mean / (sd / sqrt(Big(n)));
    const PairedTTest got = paired_t_test(a, b);
    EXPECT_NEAR(got.t, static_cast<double>(t), 1e-9 * std::max(1.0, std::fabs(got.t)))
        << "fixture " << fixture;
    EXPECT_NEAR(got.p, t_oracle_p(t, Big(n - 1)), 1e-9) << "fixture " << fixture;
  }
}

TEST(Stats, DistributionTailsMatchOracle) {
  for (std::uint64_t fixture = 0; fixture < 20; ++fixture) {
    Pcg32 rng = Pcg32::keyed(fixture, "tails");
    const double a = rng.uniform(0.2, 30.0);
    const double b = rng.uniform(0.2, 30.0);
    const double x = rng.uniform();
    EXPECT_NEAR(regularized_incomplete_beta(a, b, x),
                static_cast<double>(boost::math::ibeta(Big(a), Big(b), Big(x))), 1e-9)
        << "a=" << a << " b=" << b << " x=" << x;
    const double f = rng.uniform(0.0, 20.0);
    const double d1 = 1.0 + rng.below(5);
    const double d2 = 2.0 + rng.below(200);
    const Big oracle = boost::math::ibeta(Big(d2) / 2, Big(d1) / 2, Big(d2) / (Big(d2) + d1 * f));
    EXPECT_NEAR(f_survival(f, d1, d2), static_cast<double>(oracle), 1e-9);
  }
  EXPECT_EQ(regularized_incomplete_beta(2, 3, 0), 0.0);
  EXPECT_EQ(regularized_incomplete_beta(2, 3, 1), 1.0);
  EXPECT_THROW(regularized_incomplete_beta(0, 3, 0.5), ValidationError);
  EXPECT_THROW(student_t_two_tailed_p(1.0, 0.0), ValidationError);
}

// Checkpoints

TEST(Checkpoint, RoundTripAndMismatches) {
  const fs::path dir = scratch_dir("checkpoint");
  ParamRegistry a;
  LinearLayer::create(a, "fc", 3, 2);
  AffineParams::create(a, "aff", 2);
  init_params(a, 4);
  save_checkpoint(a, dir, {DType::f64, 4, config_hash("cfg")});

  ParamRegistry b;
  LinearLayer::create(b, "fc", 3, 2);
  AffineParams::create(b, "aff", 2);
  const CheckpointInfo info = load_checkpoint(b, dir, config_hash("cfg"));
  EXPECT_EQ(info.seed, 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(to_vector(a.entries()[i].tensor), to_vector(b.entries()[i].tensor));
  }
  EXPECT_THROW(load_checkpoint(b, dir, config_hash("other")), ValidationError);

  ParamRegistry wrong_shape;
  LinearLayer::create(wrong_shape, "fc", 4, 2);
  AffineParams::create(wrong_shape, "aff", 2);
  EXPECT_THROW(load_checkpoint(wrong_shape, dir), ValidationError);

  ParamRegistry wrong_dtype(DType::f32);
  LinearLayer::create(wrong_dtype, "fc", 3, 2);
  AffineParams::create(wrong_dtype, "aff", 2);
  EXPECT_THROW(load_checkpoint(wrong_dtype, dir), ValidationError);

  EXPECT_THROW(load_checkpoint(b, dir / "missing"), IoError);
  EXPECT_EQ(config_hash("").size(), 16u);
  EXPECT_EQ(config_hash(""), "cbf29ce484222325");
}

// Training, evaluation and noise sweeps

Dataset tiny_dataset(std::size_t n, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.n_samples = n;
  cfg.seed = seed;
  cfg.frames = 2;
  cfg.height = 16;
  cfg.width = 16;
  return make_synthetic(cfg).dataset;
}

TrainConfig tiny_train(FusionKind fusion) {
  TrainConfig cfg;
  cfg.model.fusion = fusion;
  cfg.model.backbone = BackboneConfig{2, 16, 16, 2, 8, 8, 8, 2};
  cfg.model.dtype = DType::f64;
  cfg.lr = 1e-3;
  cfg.lr_min = 1e-5;
  cfg.epochs = 3;
  cfg.seed = 7;
  cfg.split = {0.6, 0.2, 0.2};
  return cfg;
}

TEST(Train, DeterministicRunsAreByteIdentical) {
  const Dataset data = tiny_dataset(30, 1);
  const fs::path a = scratch_dir("det_a");
  const fs::path b = scratch_dir("det_b");
  const TrainedRun ra = train(tiny_train(FusionKind::tabmixer), data);
  const TrainedRun rb = train(tiny_train(FusionKind::tabmixer), data);
  save_run(ra, a);
  save_run(rb, b);
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    EXPECT_EQ(read_file(entry.path()), read_file(b / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 5u);
  ASSERT_EQ(ra.log.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) EXPECT_EQ(ra.log[e].train_loss, rb.log[e].train_loss);
}

TEST(Train, ScheduleEndsAtMinimumLearningRate) {
  const Dataset data = tiny_dataset(30, 2);
  const TrainConfig cfg = tiny_train(FusionKind::concat);
  const TrainedRun run = train(cfg, data);
  EXPECT_EQ(run.steps, cfg.epochs * ((run.train_ids.size() + 7) / 8));
  EXPECT_NEAR(run.final_lr, cfg.lr_min, 1e-15);
  EXPECT_EQ(run.log.back().lr, run.final_lr);
  EXPECT_FALSE(run.diverged);
}

TEST(Train, SplitsArePatientDisjointAndPreprocessingUsesTrainOnly) {
  const Dataset data = tiny_dataset(40, 3);
  const TrainedRun run = train(tiny_train(FusionKind::none), data);
  EXPECT_EQ(run.train_ids.size() + run.val_ids.size() + run.test_ids.size(), 40u);
  std::vector<MultimodalSample> train_samples = select_split(run, data, "train");
  std::vector<double> targets;
  for (const auto& s : train_samples) targets.push_back(s.target);
  const TargetScaler expected = TargetScaler::fit(targets);
  EXPECT_EQ(run.scaler.mean, expected.mean);
  EXPECT_EQ(run.scaler.std, expected.std);
  EXPECT_THROW(select_split(run, data, "holdout"), ValidationError);
}

TEST(Train, SaveLoadReproducesPredictions) {
  const Dataset data = tiny_dataset(30, 4);
  const TrainedRun run = train(tiny_train(FusionKind::film), data);
  const fs::path dir = scratch_dir("save_load");
  save_run(run, dir);
  const TrainedRun loaded = load_run(dir);
  const auto test = run.prepare(select_split(run, data, "test"));
  const Evaluation a = evaluate(run, test);
  const Evaluation b = evaluate(loaded, loaded.prepare(select_split(loaded, data, "test")));
  EXPECT_EQ(a.predictions, b.predictions);
  EXPECT_EQ(a.ids, b.ids);
}

TEST(Evaluate, ParallelMatchesSerial) {
  const Dataset data = tiny_dataset(30, 5);
  const TrainedRun run = train(tiny_train(FusionKind::daft), data);
  const auto samples = run.prepare(data.samples);
  const Evaluation serial = evaluate(run, samples, 1);
  const Evaluation parallel = evaluate(run, samples, 4);
  EXPECT_EQ(serial.predictions, parallel.predictions);
  EXPECT_EQ(serial.metrics.mae, parallel.metrics.mae);
  EXPECT_EQ(serial.metrics.abs_errors, parallel.metrics.abs_errors);
  EXPECT_THROW(evaluate(run, {}), ValidationError);
}

TEST(Noise, ZeroSigmaRowEqualsPlainEvaluation) {
  const Dataset data = tiny_dataset(30, 6);
  const TrainedRun run = train(tiny_train(FusionKind::tabmixer), data);
  const auto test = run.prepare(select_split(run, data, "test"));
  const double plain = evaluate(run, test).metrics.mae;
  for (NoiseTarget target : {NoiseTarget::imaging, NoiseTarget::tabular, NoiseTarget::both}) {
    NoiseSweepConfig cfg;
    cfg.target = target;
    cfg.repeats = 3;
    const auto rows = noise_sweep(run, test, cfg);
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0].mae_mean, plain);
    EXPECT_EQ(rows[0].mae_sd, 0.0);
    for (const auto& row : rows) EXPECT_EQ(row.maes.size(), 3u);
    const std::string csv = noise_csv(rows, target);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "sigma,target,repeats,mae_mean,mae_sd,rmse_mean");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  }
}

TEST(Noise, TabularCurveIsFlatWithoutTabularMixing) {
  const Dataset data = tiny_dataset(30, 7);
  TrainConfig cfg = tiny_train(FusionKind::tabmixer);
  cfg.model.enable_tabular = false;
  const TrainedRun run = train(cfg, data);
  ASSERT_GT(run.schema.width(), 0u);
  const auto test = run.prepare(select_split(run, data, "test"));
  NoiseSweepConfig ncfg;
  ncfg.target = NoiseTarget::tabular;
  ncfg.repeats = 2;
  const auto rows = noise_sweep(run, test, ncfg);
  for (const auto& row : rows) {
    EXPECT_EQ(row.mae_mean, rows[0].mae_mean);
    EXPECT_EQ(row.mae_sd, 0.0);
  }
  // The tabular inputs really were perturbed.
  const auto noisy = add_noise(test, run.schema.numeric_mask(), ncfg, 4, 0);
  EXPECT_NE(to_vector(noisy[0].tab), to_vector(test[0].tab));
  EXPECT_EQ(to_vector(noisy[0].video), to_vector(test[0].video));
}

TEST(Noise, ConfigValidation) {
  NoiseSweepConfig cfg;
  cfg.sigmas = {0.5, 0.25};
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.sigmas = {-1.0};
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = NoiseSweepConfig{};
  cfg.repeats = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  EXPECT_EQ(parse_noise_target("both"), NoiseTarget::both);
  EXPECT_THROW(parse_noise_target("audio"), ValidationError);
}

// Benchmarks

TEST(Bench, Percentile) {
  EXPECT_EQ(percentile({5, 1, 3, 2, 4}, 50), 3.0);
  EXPECT_EQ(percentile({5, 1, 3, 2, 4}, 100), 5.0);
  EXPECT_EQ(percentile({5, 1, 3, 2, 4}, 0), 1.0);
  EXPECT_EQ(percentile({7}, 95), 7.0);
  EXPECT_THROW(percentile({}, 50), ValidationError);
}

TEST(Bench, OneRowPerModuleWithTimedIterationsOnly) {
  BenchConfig cfg{32, 2, 4, 4, 5};
  cfg.iters = 12;
  cfg.warmup = 2;
  const auto rows = run_bench(cfg);
  ASSERT_EQ(rows.size(), cfg.modules.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].module, cfg.modules[i]);
    EXPECT_EQ(rows[i].samples_ms.size(), 12u);
    EXPECT_LE(rows[i].min_ms, rows[i].p50_ms);
    EXPECT_LE(rows[i].p50_ms, rows[i].p95_ms);
    EXPECT_GT(rows[i].params, 0u);
  }
  const std::string csv = bench_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "module,params,iters,mean_ms,p50_ms,p95_ms,min_ms");
  cfg.iters = 5;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.iters = 12;
  cfg.modules = {"attention"};
  EXPECT_THROW(cfg.validate(), ValidationError);
  EXPECT_GT(hardware_fingerprint().threads, 0u);
}

}  // namespace
}  // namespace tabmixer
