// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/split.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "tabmixer/errors.hpp"
#include "tabmixer/random.hpp"

namespace tabmixer {

void SplitFractions::validate() const {
  for (double f : {train, val, test}) {
    if (!(f >= 0.0)) throw ValidationError("split fractions must be non-negative");
  }
  if (std::fabs(train + val + test - 1.0) > 1e-9) {
    throw ValidationError("split fractions must sum to 1, got " +
                          std::to_string(train + val + test));
  }
}

std::size_t target_bin(double y, const std::vector<double>& edges) {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [y](double e) { return y > e; }));
}

namespace {

// Largest-remainder apportionment of n items; ties go to the earlier split.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& fractions) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = static_cast<double>(n) * fractions[k];
    counts[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainders[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % 3]];
  return counts;
}

}  // namespace

DatasetSplit stratified_patient_split(const std::vector<MultimodalSample>& samples,
                                      const SplitFractions& fractions,
                                      const std::vector<double>& bin_edges, std::uint64_t seed) {
  fractions.validate();
  std::map<std::string, std::vector<std::size_t>> by_patient;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    by_patient[samples[i].patient_id].push_back(i);
  }
  const std::array<double, 3> f{fractions.train, fractions.val, fractions.test};
  const auto nonempty = static_cast<std::size_t>(std::count_if(f.begin(), f.end(),
                                                               [](double x) { return x > 0.0; }));
  if (by_patient.size() < nonempty) {
    throw ValidationError("cannot split " + std::to_string(by_patient.size()) +
                          " patients into " + std::to_string(nonempty) + " non-empty splits");
  }

  // std::map iteration yields patients in ascending id order.
  std::vector<std::vector<const std::vector<std::size_t>*>> bins(bin_edges.size() + 1);
  for (const auto& [patient, idx] : by_patient) {
    double mean = 0.0;
    for (std::size_t i : idx) mean += samples[i].target;
    mean /= static_cast<double>(idx.size());
    bins[target_bin(mean, bin_edges)].push_back(&idx);
  }

  DatasetSplit out;
  std::array<std::vector<std::size_t>*, 3> dest{&out.train, &out.val, &out.test};
  for (std::size_t b = 0; b < bins.size(); ++b) {
    auto& patients = bins[b];
    Pcg32 rng = Pcg32::keyed(seed, "split/bin" + std::to_string(b));
    shuffle(patients, rng);
    const auto counts = apportion(patients.size(), f);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t c = 0; c < counts[k]; ++c, ++pos) {
        dest[k]->insert(dest[k]->end(), patients[pos]->begin(), patients[pos]->end());
      }
    }
  }
  for (auto* d : dest) std::sort(d->begin(), d->end());
  return out;
}

}  // namespace tabmixer
