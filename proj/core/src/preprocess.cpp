// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "tabmixer/errors.hpp"
#include "tabmixer/stats.hpp"

namespace tabmixer {

namespace {

double numeric_value(const TabularRecord& record, const std::string& name) {
  auto it = record.find(name);
  if (it == record.end()) throw ValidationError("tabular record lacks feature '" + name + "'");
  if (const double* d = std::get_if<double>(&it->second)) return *d;
  throw ValidationError("feature '" + name + "' is numeric but holds a string");
}

std::string categorical_value(const TabularRecord& record, const std::string& name) {
  auto it = record.find(name);
  if (it == record.end()) throw ValidationError("tabular record lacks feature '" + name + "'");
  if (const std::string* s = std::get_if<std::string>(&it->second)) return *s;
  throw ValidationError("feature '" + name + "' is categorical but holds a number");
}

}  // namespace

TabularSchema TabularSchema::fit(const std::vector<MultimodalSample>& train,
                                 const std::vector<FeatureSpec>& features,
                                 const PreprocessOptions& options) {
  if (train.size() < 2) {
    throw ValidationError("preprocessing needs at least two training samples, got " +
                          std::to_string(train.size()));
  }
  TabularSchema schema;
  schema.features_ = features;
  schema.numeric_.resize(features.size());
  schema.dropped_.assign(features.size(), false);
  schema.levels_.resize(features.size());
  const double n = static_cast<double>(train.size());

  for (std::size_t f = 0; f < features.size(); ++f) {
    const FeatureSpec& spec = features[f];
    if (spec.kind == FeatureKind::numeric) {
      double mean = 0.0;
      for (const auto& s : train) mean += numeric_value(s.tabular, spec.name);
      mean /= n;
      double ss = 0.0;
      for (const auto& s : train) {
        const double d = numeric_value(s.tabular, spec.name) - mean;
        ss += d * d;
      }
      const double std = std::sqrt(ss / n);
      schema.numeric_[f] = {mean, std};
      if (!(std > 1e-12 * std::max(1.0, std::fabs(mean)))) {
        schema.dropped_[f] = true;
        schema.numeric_[f].std = 1.0;
        schema.warnings_.push_back("feature '" + spec.name +
                                   "' has zero variance on the training split; excluded");
        continue;
      }
      schema.columns_.push_back({spec.name, FeatureKind::numeric, {}});
    } else {
      std::set<std::string> levels;
      for (const auto& s : train) levels.insert(categorical_value(s.tabular, spec.name));
      schema.levels_[f].assign(levels.begin(), levels.end());
      for (const auto& level : schema.levels_[f]) {
        schema.columns_.push_back({spec.name, FeatureKind::categorical, level});
      }
    }
  }

  schema.selected_.resize(schema.columns_.size());
  for (std::size_t i = 0; i < schema.selected_.size(); ++i) schema.selected_[i] = i;
  if (!options.select_features || schema.columns_.empty()) return schema;
  if (train.size() < 3) {
    schema.warnings_.push_back("feature selection skipped: fewer than three training samples");
    return schema;
  }

  std::vector<std::vector<double>> cols(schema.columns_.size(),
                                        std::vector<double>(train.size()));
  std::vector<double> targets(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const std::vector<double> row = schema.encode_all(train[i].tabular);
    for (std::size_t c = 0; c < row.size(); ++c) cols[c][i] = row[c];
    targets[i] = train[i].target;
  }
  const std::vector<bool> keep = f_regression_select(cols, targets, options.alpha);
  std::vector<std::size_t> selected;
  for (std::size_t c = 0; c < keep.size(); ++c) {
    if (keep[c]) selected.push_back(c);
  }
  if (selected.empty()) {
    schema.warnings_.push_back("no tabular column passed the F-test; keeping all columns");
  } else {
    schema.selected_ = std::move(selected);
  }
  return schema;
}

std::vector<double> TabularSchema::encode_all(const TabularRecord& record) const {
  std::vector<double> out;
  out.reserve(columns_.size());
  for (std::size_t f = 0; f < features_.size(); ++f) {
    const FeatureSpec& spec = features_[f];
    if (spec.kind == FeatureKind::numeric) {
      if (dropped_[f]) continue;
      out.push_back((numeric_value(record, spec.name) - numeric_[f].mean) / numeric_[f].std);
    } else {
      const std::string value = categorical_value(record, spec.name);
      for (const auto& level : levels_[f]) out.push_back(level == value ? 1.0 : 0.0);
    }
  }
  return out;
}

Tensor TabularSchema::transform(const TabularRecord& record, DType dtype) const {
  const std::vector<double> all = encode_all(record);
  std::vector<double> out;
  out.reserve(selected_.size());
  for (std::size_t idx : selected_) out.push_back(all[idx]);
  if (out.empty()) return Tensor{};
  const std::size_t width = out.size();
  return Tensor({width}, std::move(out), dtype);
}

std::vector<EncodedColumn> TabularSchema::selected_columns() const {
  std::vector<EncodedColumn> out;
  for (std::size_t idx : selected_) out.push_back(columns_[idx]);
  return out;
}

std::vector<bool> TabularSchema::numeric_mask() const {
  std::vector<bool> out;
  for (std::size_t idx : selected_) out.push_back(columns_[idx].kind == FeatureKind::numeric);
  return out;
}

const TabularSchema::NumericStats* TabularSchema::numeric_stats(const std::string& feature) const {
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (features_[f].name == feature && features_[f].kind == FeatureKind::numeric) {
      return &numeric_[f];
    }
  }
  return nullptr;
}

const std::vector<std::string>* TabularSchema::levels(const std::string& feature) const {
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (features_[f].name == feature && features_[f].kind == FeatureKind::categorical) {
      return &levels_[f];
    }
  }
  return nullptr;
}

void to_json(nlohmann::json& j, const TabularSchema& schema) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t f = 0; f < schema.features_.size(); ++f) {
    const FeatureSpec& spec = schema.features_[f];
    nlohmann::json entry{{"name", spec.name}};
    if (spec.kind == FeatureKind::numeric) {
      entry["kind"] = "numeric";
      entry["mean"] = schema.numeric_[f].mean;
      entry["std"] = schema.numeric_[f].std;
      entry["dropped"] = static_cast<bool>(schema.dropped_[f]);
    } else {
      entry["kind"] = "categorical";
      entry["levels"] = schema.levels_[f];
    }
    features.push_back(std::move(entry));
  }
  nlohmann::json selected = nlohmann::json::array();
  for (const auto& col : schema.selected_columns()) selected.push_back(col.label());
  j = nlohmann::json{{"features", std::move(features)},
                     {"selected", std::move(selected)},
                     {"warnings", schema.warnings_}};
}

void from_json(const nlohmann::json& j, TabularSchema& schema) {
  TabularSchema out;
  try {
    for (const auto& entry : j.at("features")) {
      FeatureSpec spec{entry.at("name").get<std::string>(), FeatureKind::numeric};
      const std::string kind = entry.at("kind").get<std::string>();
      TabularSchema::NumericStats stats;
      std::vector<std::string> levels;
      bool dropped = false;
      if (kind == "numeric") {
        stats = {entry.at("mean").get<double>(), entry.at("std").get<double>()};
        dropped = entry.value("dropped", false);
        if (!dropped) out.columns_.push_back({spec.name, FeatureKind::numeric, {}});
      } else if (kind == "categorical") {
        spec.kind = FeatureKind::categorical;
        levels = entry.at("levels").get<std::vector<std::string>>();
        for (const auto& level : levels) {
          out.columns_.push_back({spec.name, FeatureKind::categorical, level});
        }
      } else {
        throw ValidationError("unknown feature kind '" + kind + "'");
      }
      out.features_.push_back(spec);
      out.numeric_.push_back(stats);
      out.dropped_.push_back(dropped);
      out.levels_.push_back(std::move(levels));
    }
    for (const auto& label : j.at("selected")) {
      const std::string name = label.get<std::string>();
      auto it = std::find_if(out.columns_.begin(), out.columns_.end(),
                             [&](const EncodedColumn& c) { return c.label() == name; });
      if (it == out.columns_.end()) {
        throw ValidationError("selected column '" + name + "' is not an encoded column");
      }
      out.selected_.push_back(static_cast<std::size_t>(it - out.columns_.begin()));
    }
    out.warnings_ = j.value("warnings", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid preprocessing state: ") + e.what());
  }
  schema = std::move(out);
}

TargetScaler TargetScaler::fit(const std::vector<double>& targets) {
  if (targets.empty()) throw ValidationError("target scaler needs at least one target");
  const double n = static_cast<double>(targets.size());
  double mean = 0.0;
  for (double y : targets) mean += y;
  mean /= n;
  double ss = 0.0;
  for (double y : targets) ss += (y - mean) * (y - mean);
  const double std = std::sqrt(ss / n);
  return {mean, std > 1e-12 * std::max(1.0, std::fabs(mean)) ? std : 1.0};
}

void to_json(nlohmann::json& j, const TargetScaler& scaler) {
  j = nlohmann::json{{"mean", scaler.mean}, {"std", scaler.std}};
}

void from_json(const nlohmann::json& j, TargetScaler& scaler) {
  try {
    scaler.mean = j.at("mean").get<double>();
    scaler.std = j.at("std").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid target scaler: ") + e.what());
  }
  if (!(scaler.std > 0.0)) throw ValidationError("target scaler std must be positive");
}

std::vector<bool> f_regression_select(const std::vector<std::vector<double>>& columns,
                                      const std::vector<double>& targets, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");
  std::vector<bool> keep(columns.size(), false);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const FRegression res = f_regression(columns[c], targets);
    keep[c] = res.valid && res.p < alpha;
  }
  return keep;
}

}  // namespace tabmixer
