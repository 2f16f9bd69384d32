#pragma once

// Synthetic datasets shared by the test binaries.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qxfs/dataset.hpp"
#include "qxfs/random.hpp"

namespace qxfs::fixtures {

// Builds a dataset from row-major values.
inline Dataset from_rows(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                         int n_classes = -1) {
  const std::size_t n = rows.size();
  const std::size_t k = rows.empty() ? 0 : rows.front().size();
  std::vector<double> values(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) values[j * n + i] = rows[i][j];
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < k; ++j) names.push_back("f" + std::to_string(j));
  if (n_classes < 0) {
    n_classes = 1;
    for (int y : labels) n_classes = std::max(n_classes, y + 1);
  }
  return Dataset(n, std::move(values), labels, std::move(names), n_classes);
}

// Two-class data where feature j (j < informative) agrees with the label
// with probability strength[j]; the remaining features are uniform noise.
// Feature values are small integers so trees see repeated values.
inline Dataset graded(std::size_t n, std::size_t k, const std::vector<double>& strength, std::uint64_t seed,
                      int levels = 4) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows(n, std::vector<double>(k));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = bernoulli(rng, 0.5) ? 1 : 0;
    labels[i] = y;
    for (std::size_t j = 0; j < k; ++j) {
      const auto noise = static_cast<double>(uniform_below(rng, static_cast<std::size_t>(levels)));
      if (j < strength.size()) {
        const bool agree = bernoulli(rng, strength[j]);
        const int side = agree ? y : 1 - y;
        // Upper half of the levels for side 1, lower half for side 0.
        const int half = levels / 2;
        rows[i][j] = static_cast<double>(side * half + static_cast<int>(uniform_below(rng, half)));
      } else {
        rows[i][j] = noise;
      }
    }
  }
  return from_rows(rows, labels, 2);
}

// Every row repeated `times` times, consecutive copies.
inline Dataset duplicate_rows(const Dataset& d, std::size_t times) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t c = 0; c < times; ++c) rows.push_back(i);
  }
  std::vector<std::size_t> features(d.features());
  for (std::size_t j = 0; j < features.size(); ++j) features[j] = j;
  return take(d, rows, features);
}

inline std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

// Uses the given train/validation/test datasets directly.
inline SplitSet make_splits(Dataset train, Dataset validation, Dataset test) {
  return SplitSet{std::move(train), std::move(validation), std::move(test)};
}

// Standard synthetic split: graded signal on the first features.
inline SplitSet graded_splits(std::size_t n, std::size_t k, std::uint64_t seed,
                              std::vector<double> strength = {0.9, 0.8, 0.7, 0.65}) {
  return split(graded(n, k, strength, seed), derive_seed(seed, 99));
}

}  // namespace qxfs::fixtures
