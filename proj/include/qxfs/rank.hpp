#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qxfs/bitmask.hpp"

namespace qxfs {

// 1-based ranks; tied values share the average of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t q = values.size();
  std::vector<std::size_t> order(q);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(q);
  for (std::size_t i = 0; i < q;) {
    std::size_t j = i;
    while (j + 1 < q && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

// Spearman rank correlation. Without ties this is 1 - 6*sum(d^2)/(q(q^2-1));
// with ties it is the Pearson correlation of the average ranks. Returns
// nullopt when either vector has zero rank variance (correlation undefined).
inline std::optional<double> spearman_rho(std::span<const double> o, std::span<const double> a) {
  if (o.size() != a.size()) throw std::invalid_argument("spearman_rho: length mismatch");
  if (o.size() < 2) throw std::invalid_argument("spearman_rho: need at least two values");
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (!std::isfinite(o[i]) || !std::isfinite(a[i])) {
      throw std::invalid_argument("spearman_rho: non-finite value");
    }
  }
  const auto ro = average_ranks(o);
  const auto ra = average_ranks(a);
  const double q = static_cast<double>(o.size());
  const double mean = (q + 1.0) / 2.0;

  double sxx = 0.0, syy = 0.0, sxy = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < ro.size(); ++i) {
    const double x = ro[i] - mean;
    const double y = ra[i] - mean;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
    d2 += (ro[i] - ra[i]) * (ro[i] - ra[i]);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  if (ro == ra) return 1.0;

  // Without ties both rank vectors are permutations of 1..q and have the
  // same variance q(q^2-1)/12.
  const double full = q * (q * q - 1.0) / 12.0;
  if (sxx == full && syy == full) return 1.0 - 6.0 * d2 / (q * (q * q - 1.0));
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace qxfs
