// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// On-disk dataset layout:
//
//   manifest.json
//     {"schema": {"<feature>": "numeric" | "categorical", ...},
//      "tabular_csv": "tabular.csv",              (optional)
//      "samples": [{"id", "patient_id", "video", "target", "tabular": {...}}]}
//   videos/<id>.tbmx                               [1, T0, H0, W0]
//   tabular.csv                                    id,<feature>,... (header row)
//
// A sample's tabular record comes from its inline "tabular" object when
// present, otherwise from the CSV row with the same id.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "tabmixer/tensor.hpp"

namespace tabmixer {

enum class FeatureKind { numeric, categorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
};

using TabularValue = std::variant<double, std::string>;
using TabularRecord = std::map<std::string, TabularValue>;

struct MultimodalSample {
  std::string id;
  std::string patient_id;
  Tensor video;  // [1, T0, H0, W0]
  TabularRecord tabular;
  double target = 0.0;
};

struct Dataset {
  std::vector<FeatureSpec> features;
  std::vector<MultimodalSample> samples;
  /// Stratification bin edges recorded by the producer, if any.
  std::vector<double> bin_edges;
};

struct LoadReport {
  std::size_t loaded = 0;
  /// (sample id, reason) for every sample dropped for missing tabular values.
  std::vector<std::pair<std::string, std::string>> excluded;
};

/// Validates a sample: video rank-4 with a single channel and finite values,
/// finite target, non-empty patient id. Throws ValidationError.
void validate_sample(const MultimodalSample& sample);

/// Loads `path` (a manifest file or a directory containing manifest.json).
/// Samples with a missing or empty tabular value are excluded and reported.
Dataset load_dataset(const std::filesystem::path& path, LoadReport* report = nullptr);

/// Writes the layout above into `dir`. Videos are stored in their own dtype.
/// With `tabular_as_csv`, records go to tabular.csv instead of the manifest.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                   bool tabular_as_csv = true);

}  // namespace tabmixer
