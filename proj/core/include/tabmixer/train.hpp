// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training and evaluation. A run directory holds:
//   config.json      training config (with the resolved tabular width) and data path
//   split.json       sample ids per split
//   preprocess.json  fitted tabular schema and target scaler
//   log.csv          epoch,train_loss,val_mae,lr
//   summary.json     step count, final lr, best epoch, divergence status
//   checkpoint/      best-validation parameters

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tabmixer/dataset.hpp"
#include "tabmixer/metrics.hpp"
#include "tabmixer/model.hpp"
#include "tabmixer/preprocess.hpp"
#include "tabmixer/split.hpp"

namespace tabmixer {

struct TrainConfig {
  /// Model description; tab_dim is resolved from the fitted schema.
  ModelConfig model;
  double lr = 1e-4;
  double lr_min = 0.0;
  double weight_decay = 1e-5;
  std::size_t batch_size = 8;
  std::size_t epochs = 100;
  /// Caps the total number of optimizer steps when positive.
  std::size_t max_steps = 0;
  std::uint64_t seed = 0;
  SplitFractions split;
  /// Stratification edges; empty means the dataset's edges, else 20/25/30.
  std::vector<double> bin_edges;
  PreprocessOptions preprocess;
  /// Fit the loss on standardized targets; predictions are mapped back.
  bool standardize_target = true;
  /// Take backbone frames/height/width from the data when the config omits them.
  bool video_dims_from_data = false;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

struct SplitSamples {
  std::vector<MultimodalSample> train;
  std::vector<MultimodalSample> val;
  std::vector<MultimodalSample> test;
};

SplitSamples split_samples(const Dataset& dataset, const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean batch loss, on the scale the loss is fitted
  double val_mae = 0.0;     // NaN without a validation split
  double lr = 0.0;          // learning rate of the epoch's last step
};

struct PreparedSample {
  std::string id;
  Tensor video;
  Tensor tab;  // undefined when the schema has no columns
  double target = 0.0;
};

struct TrainedRun {
  TrainConfig config;
  TabularSchema schema;
  TargetScaler scaler;
  std::unique_ptr<MultimodalModel> model;
  std::vector<EpochLog> log;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  std::string data_path;
  std::size_t steps = 0;
  double final_lr = 0.0;
  std::size_t best_epoch = 0;
  bool diverged = false;
  std::string divergence;

  std::vector<PreparedSample> prepare(const std::vector<MultimodalSample>& samples) const;
  double predict(const PreparedSample& sample) const;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Fits preprocessing on `data.train` and trains. On a non-finite loss or
/// gradient the run stops, keeps the last good parameters and sets `diverged`.
TrainedRun train(const TrainConfig& cfg, const std::vector<FeatureSpec>& features,
                 const SplitSamples& data, const EpochCallback& on_epoch = {});

/// Splits `dataset` per cfg, then trains.
TrainedRun train(const TrainConfig& cfg, const Dataset& dataset,
                 const EpochCallback& on_epoch = {});

struct Evaluation {
  MetricsReport metrics;
  std::vector<std::string> ids;
  std::vector<double> predictions;
  std::vector<double> targets;
};

/// Predicts every sample. With workers > 1 samples are spread over threads;
/// results are stored and reduced in input order, so reports do not depend
/// on the worker count.
Evaluation evaluate(const TrainedRun& run, const std::vector<PreparedSample>& samples,
                    std::size_t workers = 1);

void save_run(const TrainedRun& run, const std::filesystem::path& dir);
TrainedRun load_run(const std::filesystem::path& dir);

/// Samples of `dataset` listed in the run's split ("train", "val" or "test").
std::vector<MultimodalSample> select_split(const TrainedRun& run, const Dataset& dataset,
                                           const std::string& split);

}  // namespace tabmixer
