#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qxfs/dataset.hpp"
#include "qxfs/qx.hpp"
#include "qxfs/random.hpp"
#include "qxfs/rank.hpp"
#include "qxfs/tree.hpp"

namespace qxfs::bench {

struct CurvePoint {
  std::size_t sample_size = 0;
  double metric = 0.0;
};

// {n0 * a^i} up to n_max, with n_max appended when it is not already last.
inline std::vector<std::size_t> geometric_schedule(std::size_t n0, double ratio, std::size_t n_max) {
  if (n0 < 1) throw std::invalid_argument("geometric_schedule: n0 must be >= 1");
  if (!(ratio > 1.0)) throw std::invalid_argument("geometric_schedule: ratio must be > 1");
  if (n_max < n0) throw std::invalid_argument("geometric_schedule: n_max must be >= n0");
  std::vector<std::size_t> out;
  for (int i = 0;; ++i) {
    const double size = std::floor(static_cast<double>(n0) * std::pow(ratio, i) + 1e-9);
    if (size > static_cast<double>(n_max)) break;
    const auto s = static_cast<std::size_t>(size);
    if (out.empty() || s > out.back()) out.push_back(s);
  }
  if (out.back() != n_max) out.push_back(n_max);
  return out;
}

namespace detail {

inline void check_schedule(const std::vector<std::size_t>& schedule, std::size_t n_train) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 1 || schedule[i] > n_train) {
      throw std::invalid_argument("curve: sample size outside [1, n_train]");
    }
    if (i > 0 && schedule[i] <= schedule[i - 1]) {
      throw std::invalid_argument("curve: sample sizes must be strictly increasing");
    }
  }
}

inline BitMask random_rows(std::size_t n, std::size_t m, Rng& rng) {
  if (m == n) return BitMask::ones(n);
  return BitMask::from_indices(n, sample_without_replacement(n, m, rng));
}

}  // namespace detail

// Test accuracy of all-feature trees fit on random m-row training samples.
inline std::vector<CurvePoint> learning_curve(const SplitSet& splits, const std::vector<std::size_t>& schedule,
                                              std::uint64_t seed, const TreeParams& params = {}) {
  detail::check_schedule(schedule, splits.train.rows());
  Rng rng(seed);
  std::vector<CurvePoint> out;
  for (auto m : schedule) {
    const auto rows = detail::random_rows(splits.train.rows(), m, rng);
    out.push_back({m, fit_and_score(view(splits.train, all, rows), splits.test, params)});
  }
  return out;
}

// Rank agreement between full-data trees and trees fit on random m-row
// samples, over one fixed snapshot of q probe subsets. A constant
// accuracy vector at some m is recorded as rho = 0.
inline std::vector<CurvePoint> usefulness_curve(const SplitSet& splits, const std::vector<std::size_t>& schedule,
                                                std::size_t q, std::uint64_t seed, const TreeParams& params = {},
                                                double probe_probability = 0.5) {
  detail::check_schedule(schedule, splits.train.rows());
  qx::Wrapper wrapper(splits, params);
  Rng rng(seed);
  const auto snap = qx::make_snapshot(wrapper, q, probe_probability, rng);
  std::vector<CurvePoint> out;
  for (auto m : schedule) {
    const auto rows = detail::random_rows(splits.train.rows(), m, rng);
    const auto a = wrapper.probe_accuracies(rows, snap);
    out.push_back({m, spearman_rho(snap.original, a).value_or(0.0)});
  }
  return out;
}

struct CostEstimate {
  double t_chc = 0.0;
  double t_chcqx = 0.0;
  double amortized_chc = 0.0;
  double amortized_chcqx = 0.0;

  bool qx_cheaper() const noexcept { return t_chcqx < t_chc; }
};

// Worst-case training cost of r generations, in n*k^2 units:
//   CHC    : r * e
//   CHC_QX : 21 q + (r/2 + ceil(r/f)) * e
// The 21 q term is q full-data probe fits plus 40 candidate instance subsets
// of at most n/2 rows, each fitting q probes.
inline CostEstimate cost_model(std::size_t r, std::size_t e, std::size_t q, std::size_t f, double n = 1.0,
                               double k = 1.0) {
  if (r < 1 || e < 1 || f < 1) throw std::invalid_argument("cost_model: r, e, f must be positive");
  const double unit = n * k * k;
  const double gens = static_cast<double>(r);
  const double controls = static_cast<double>((r + f - 1) / f);
  CostEstimate c;
  c.t_chc = gens * static_cast<double>(e) * unit;
  c.t_chcqx = (21.0 * static_cast<double>(q) + (gens / 2.0 + controls) * static_cast<double>(e)) * unit;
  c.amortized_chc = c.t_chc / gens;
  c.amortized_chcqx = c.t_chcqx / gens;
  return c;
}

// Smallest r in [1, r_limit] with t_chcqx(r) < t_chc(r), or 0 if none.
inline std::size_t crossover_generation(std::size_t e, std::size_t q, std::size_t f, std::size_t r_limit = 100000) {
  for (std::size_t r = 1; r <= r_limit; ++r) {
    if (cost_model(r, e, q, f).qx_cheaper()) return r;
  }
  return 0;
}

}  // namespace qxfs::bench
