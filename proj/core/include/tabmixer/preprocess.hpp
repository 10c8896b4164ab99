// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tabular encoding fitted on the training split only: numeric features are
// standardized with the population standard deviation, categorical features
// are one-hot encoded over the levels seen in training (unseen levels map to
// an all-zero block), and encoded columns may be filtered by a univariate
// F-test against the target.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tabmixer/dataset.hpp"
#include "tabmixer/tensor.hpp"

namespace tabmixer {

struct PreprocessOptions {
  bool select_features = true;
  double alpha = 0.05;
};

struct EncodedColumn {
  std::string feature;
  FeatureKind kind = FeatureKind::numeric;
  std::string level;  // categorical columns only
  std::string label() const { return kind == FeatureKind::numeric ? feature : feature + "=" + level; }
};

class TabularSchema {
 public:
  struct NumericStats {
    double mean = 0.0;
    double std = 1.0;
  };

  /// Fits on training samples only. Needs at least two samples; f-regression
  /// selection needs at least three.
  static TabularSchema fit(const std::vector<MultimodalSample>& train,
                           const std::vector<FeatureSpec>& features,
                           const PreprocessOptions& options = {});

  /// Encoded, selected feature vector of width width().
  Tensor transform(const TabularRecord& record, DType dtype = DType::f64) const;
  std::vector<double> encode_all(const TabularRecord& record) const;

  std::size_t width() const { return selected_.size(); }
  /// Encoded columns kept after selection, in output order.
  std::vector<EncodedColumn> selected_columns() const;
  /// True for output positions holding standardized numeric values.
  std::vector<bool> numeric_mask() const;

  const std::vector<FeatureSpec>& features() const { return features_; }
  const std::vector<EncodedColumn>& columns() const { return columns_; }
  const std::vector<std::size_t>& selected() const { return selected_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const NumericStats* numeric_stats(const std::string& feature) const;
  const std::vector<std::string>* levels(const std::string& feature) const;

  friend void to_json(nlohmann::json& j, const TabularSchema& schema);
  friend void from_json(const nlohmann::json& j, TabularSchema& schema);

 private:
  std::vector<FeatureSpec> features_;
  std::vector<NumericStats> numeric_;             // parallel to features_
  std::vector<bool> dropped_;                      // zero-variance numerics
  std::vector<std::vector<std::string>> levels_;  // parallel to features_
  std::vector<EncodedColumn> columns_;             // all encoded columns
  std::vector<std::size_t> selected_;              // indices into columns_
  std::vector<std::string> warnings_;
};

/// Target standardization fitted on training targets (population std).
struct TargetScaler {
  double mean = 0.0;
  double std = 1.0;

  static TargetScaler fit(const std::vector<double>& targets);
  double forward(double y) const { return (y - mean) / std; }
  double inverse(double z) const { return z * std + mean; }
};

void to_json(nlohmann::json& j, const TargetScaler& scaler);
void from_json(const nlohmann::json& j, TargetScaler& scaler);

/// Keeps columns whose F-test p-value is below `alpha`.
std::vector<bool> f_regression_select(const std::vector<std::vector<double>>& columns,
                                      const std::vector<double>& targets, double alpha = 0.05);

}  // namespace tabmixer
