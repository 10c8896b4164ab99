// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tabmixer/dataset.hpp"

namespace tabmixer {

struct SplitFractions {
  double train = 1299.0 / 1821.0;
  double val = 217.0 / 1821.0;
  double test = 305.0 / 1821.0;

  void validate() const;
};

/// Sample indices per split, each list ascending.
struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Bin index of `y`: the number of edges strictly below it, so with edges
/// (20, 25, 30) the bins are <=20, <=25, <=30 and >30.
std::size_t target_bin(double y, const std::vector<double>& edges);

/// Assigns whole patients to train/val/test. Patients are binned by their
/// mean target; within a bin they are ordered by id, shuffled with a seeded
/// stream for that bin, and cut by largest-remainder rounding of the
/// fractions, so each split holds its share of every bin to within one patient.
DatasetSplit stratified_patient_split(const std::vector<MultimodalSample>& samples,
                                      const SplitFractions& fractions,
                                      const std::vector<double>& bin_edges, std::uint64_t seed);

}  // namespace tabmixer
