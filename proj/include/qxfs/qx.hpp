#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qxfs/bitmask.hpp"
#include "qxfs/bpso.hpp"
#include "qxfs/chc.hpp"
#include "qxfs/dataset.hpp"
#include "qxfs/error.hpp"
#include "qxfs/random.hpp"
#include "qxfs/rank.hpp"
#include "qxfs/report.hpp"
#include "qxfs/tree.hpp"

// Qualitative-approximation feature selection. Stage one searches for a
// small instance subset whose trees rank a fixed set of probe feature
// subsets the same way full-data trees do. Stage two runs CHC or binary PSO
// on feature masks scored by trees trained on that subset, re-scoring the
// population with full-data trees every f generations (evolution control).
namespace qxfs::qx {

// Training cost in n*k^2 units, where n is the number of training rows a fit
// sees and k the full feature count.
struct CostLedger {
  std::uint64_t original_evals = 0;   // full training set
  std::uint64_t surrogate_evals = 0;  // meta-model instance subset
  std::uint64_t sampling_evals = 0;   // probe fits while scoring instance subsets
  double original_units = 0.0;
  double surrogate_units = 0.0;
  double sampling_units = 0.0;

  double total_units() const noexcept { return original_units + surrogate_units + sampling_units; }
};

// Probe feature subsets and their full-data validation accuracies.
struct Snapshot {
  std::vector<BitMask> subsets;
  std::vector<double> original;

  std::size_t size() const noexcept { return subsets.size(); }
};

struct MetaModel {
  BitMask instances;  // over training rows
};

enum class FeatureEngine { chc, pso };

inline chc::ChcConfig default_sampling_config() {
  chc::ChcConfig cfg;
  cfg.population = 4;
  cfg.max_generations = 10;
  cfg.no_change_limit = 3;
  cfg.init_probability = 0.5;
  return cfg;
}

struct QxConfig {
  std::size_t q = 20;
  std::size_t frequency = 10;
  double probe_probability = 0.5;
  chc::ChcConfig sampling = default_sampling_config();
  FeatureEngine engine = FeatureEngine::chc;
  chc::ChcConfig chc;
  bpso::PsoConfig pso;

  void validate() const {
    if (q < 2) throw std::invalid_argument("qx: q must be >= 2");
    if (frequency < 1) throw std::invalid_argument("qx: frequency must be >= 1");
    if (!(probe_probability > 0.0 && probe_probability <= 1.0)) {
      throw std::invalid_argument("qx: probe_probability must be in (0, 1]");
    }
    sampling.validate();
    chc.validate();
    pso.validate();
  }
};

// Wrapper fitness functions over one train/validation/test split. Every
// classifier fit is charged to the ledger.
class Wrapper {
 public:
  explicit Wrapper(const SplitSet& splits, TreeParams params = {})
      : splits_(&splits), params_(params) {
    params_.validate();
  }

  const SplitSet& splits() const noexcept { return *splits_; }
  const TreeParams& tree_params() const noexcept { return params_; }
  const CostLedger& ledger() const noexcept { return ledger_; }
  void reset_ledger() noexcept { ledger_ = {}; }

  std::size_t n_train() const noexcept { return splits_->train.rows(); }
  std::size_t n_features() const noexcept { return splits_->train.features(); }

  // Validation accuracy of a tree fit on all training rows restricted to
  // `features`.
  double evaluate_original(const BitMask& features) {
    require_features(features);
    ++ledger_.original_evals;
    ledger_.original_units += unit(n_train());
    return fit_and_score(view(splits_->train, features, all), view(splits_->validation, features, all),
                         params_);
  }

  // Same, but fit on the meta-model's instance subset only.
  double meta_fitness(const BitMask& features, const MetaModel& model) {
    require_features(features);
    const auto rows = require_instances(model.instances);
    ++ledger_.surrogate_evals;
    ledger_.surrogate_units += unit(rows);
    return fit_and_score(view(splits_->train, features, model.instances),
                         view(splits_->validation, features, all), params_);
  }

  // Probe accuracies when the probe trees are fit on `instances`.
  std::vector<double> probe_accuracies(const BitMask& instances, const Snapshot& snap) {
    const auto rows = require_instances(instances);
    std::vector<double> out;
    out.reserve(snap.size());
    for (const auto& probe : snap.subsets) {
      require_features(probe);
      ++ledger_.sampling_evals;
      ledger_.sampling_units += unit(rows);
      out.push_back(fit_and_score(view(splits_->train, probe, instances),
                                  view(splits_->validation, probe, all), params_));
    }
    return out;
  }

  // f_is = (1 - rho(o, a)) + |s|/n, minimized. An undefined correlation
  // (constant accuracy vector) counts as rho = 0.
  double instance_fitness(const BitMask& instances, const Snapshot& snap) {
    if (snap.size() < 2) throw std::invalid_argument("instance_fitness: snapshot needs q >= 2");
    const auto a = probe_accuracies(instances, snap);
    const double rho = spearman_rho(snap.original, a).value_or(0.0);
    return (1.0 - rho) + static_cast<double>(instances.count()) / static_cast<double>(n_train());
  }

 private:
  void require_features(const BitMask& features) const {
    if (features.size() != n_features()) throw std::invalid_argument("feature mask length mismatch");
    if (features.none()) throw std::invalid_argument("empty feature mask");
  }
  std::size_t require_instances(const BitMask& instances) const {
    if (instances.size() != n_train()) throw std::invalid_argument("instance mask length mismatch");
    const auto rows = instances.count();
    if (rows == 0) throw std::invalid_argument("empty instance mask");
    return rows;
  }
  double unit(std::size_t rows) const {
    const double k = static_cast<double>(n_features());
    return static_cast<double>(rows) * k * k;
  }

  const SplitSet* splits_;
  TreeParams params_;
  CostLedger ledger_;
};

namespace detail {

inline bool zero_variance(const std::vector<double>& v) {
  for (double x : v) {
    if (x != v.front()) return false;
  }
  return true;
}

}  // namespace detail

// Evaluates caller-chosen probe subsets with the original function.
inline Snapshot make_snapshot(Wrapper& wrapper, std::vector<BitMask> subsets) {
  if (subsets.size() < 2) throw std::invalid_argument("make_snapshot: q must be >= 2");
  Snapshot snap;
  snap.subsets = std::move(subsets);
  snap.original.reserve(snap.subsets.size());
  for (const auto& s : snap.subsets) snap.original.push_back(wrapper.evaluate_original(s));
  return snap;
}

// q random probe subsets (bits on with probability p, empty masks redrawn).
// A snapshot whose accuracies are all equal carries no ranking, so it is
// redrawn once; a second failure is an error.
inline Snapshot make_snapshot(Wrapper& wrapper, std::size_t q, double p, Rng& rng) {
  if (q < 2) throw std::invalid_argument("make_snapshot: q must be >= 2");
  const std::size_t k = wrapper.n_features();
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<BitMask> subsets;
    subsets.reserve(q);
    for (std::size_t i = 0; i < q; ++i) {
      BitMask mask(k);
      do {
        for (std::size_t j = 0; j < k; ++j) mask.set(j, bernoulli(rng, p));
      } while (mask.none());
      subsets.push_back(std::move(mask));
    }
    auto snap = make_snapshot(wrapper, std::move(subsets));
    if (!detail::zero_variance(snap.original)) return snap;
  }
  throw RuntimeFailure("snapshot accuracies have zero variance; rank correlation is undefined");
}

// Clears uniformly chosen set bits until at most `cap` remain.
struct InstanceCap {
  std::size_t cap;

  void operator()(BitMask& genome, Rng& rng) const {
    const auto on = genome.indices();
    if (on.size() <= cap) return;
    for (auto i : sample_without_replacement(on.size(), on.size() - cap, rng)) genome.reset(on[i]);
  }
};

inline std::size_t instance_cap(std::size_t n_train) { return std::max<std::size_t>(1, n_train / 2); }

struct SamplingResult {
  MetaModel model;
  Snapshot snapshot;
  double fitness = 0.0;  // f_is of the selected subset
  RunResult trace;       // engine trace; fitness values are -f_is
};

// Active instance sampling: CHC over instance masks minimizing f_is.
// Every genome is capped at floor(n/2) set bits, through initialization,
// crossover and restarts.
inline SamplingResult active_sampling(Wrapper& wrapper, const QxConfig& cfg, const RunControl& control = {},
                                      const std::function<void(const BitMask&)>& observe = {}) {
  cfg.validate();
  Rng probe_rng(derive_seed(cfg.sampling.seed, 1));
  SamplingResult out;
  out.snapshot = make_snapshot(wrapper, cfg.q, cfg.probe_probability, probe_rng);

  auto fitness = [&](const BitMask& instances) {
    if (observe) observe(instances);
    return -wrapper.instance_fitness(instances, out.snapshot);
  };
  out.trace = chc::run(cfg.sampling, wrapper.n_train(), fitness, control, InstanceCap{instance_cap(wrapper.n_train())});
  out.model.instances = out.trace.best;
  out.fitness = -out.trace.best_fitness;
  return out;
}

struct QxResult {
  BitMask best;  // g*, always scored by the original function
  double best_fitness = kUnevaluable;
  std::vector<GenerationRecord> history;
  std::size_t controls = 0;
  MetaModel model;
  std::optional<SamplingResult> sampling;
};

namespace detail {

// Drives any stepwise search (initialize/step/genomes) on the surrogate and
// runs evolution control at generation 0, at every multiple of `frequency`,
// and once more at the end if the last generation was not a control.
template <class Search>
QxResult drive(Search& search, Wrapper& wrapper, const MetaModel& model, std::size_t frequency,
               std::size_t max_generations, std::size_t no_change_limit, const RunControl& control) {
  Stopwatch clock;
  QxResult result;
  result.model = model;

  auto surrogate = [&](const BitMask& g) { return wrapper.meta_fitness(g, model); };

  // Returns true when g* strictly improved.
  auto evolution_control = [&]() {
    ++result.controls;
    const auto genomes = search.genomes();
    std::optional<std::size_t> pick;
    double pick_fitness = kUnevaluable;
    for (std::size_t i = 0; i < genomes.size(); ++i) {
      const double f = genomes[i].none() ? kUnevaluable : wrapper.evaluate_original(genomes[i]);
      if (!pick || f > pick_fitness ||
          (f == pick_fitness && genomes[i].count() < genomes[*pick].count())) {
        pick = i;
        pick_fitness = f;
      }
    }
    if (pick && (result.best.empty() || pick_fitness > result.best_fitness)) {
      result.best = genomes[*pick];
      result.best_fitness = pick_fitness;
      return true;
    }
    return false;
  };

  auto record = [&](std::size_t generation) {
    GenerationRecord r;
    r.generation = generation;
    r.best_fitness = result.best_fitness;
    r.best_mask = result.best;
    r.original_evals = wrapper.ledger().original_evals;
    r.surrogate_evals = wrapper.ledger().surrogate_evals;
    r.wall_ms = clock.elapsed_ms();
    control.amend(r);
    result.history.push_back(std::move(r));
  };

  search.initialize(surrogate);
  evolution_control();
  record(0);

  std::size_t stagnant = 0;
  std::size_t last = 0;
  for (std::size_t t = 1; t <= max_generations; ++t) {
    if (control.stop_requested()) break;
    search.step(surrogate);
    last = t;
    if (t % frequency == 0) {
      stagnant = evolution_control() ? 0 : stagnant + 1;
      record(t);
      if (stagnant >= no_change_limit) break;
    } else {
      record(t);
    }
  }
  if (last % frequency != 0) {
    evolution_control();
    auto& r = result.history.back();
    r.best_fitness = result.best_fitness;
    r.best_mask = result.best;
    r.original_evals = wrapper.ledger().original_evals;
    r.wall_ms = clock.elapsed_ms();
    control.amend(r);
  }
  return result;
}

}  // namespace detail

// Feature-selection stage with a given meta-model.
inline QxResult feature_phase(Wrapper& wrapper, const QxConfig& cfg, const MetaModel& model,
                              const RunControl& control = {}) {
  cfg.validate();
  if (model.instances.size() != wrapper.n_train() || model.instances.none()) {
    throw std::invalid_argument("feature_phase: invalid meta-model instance mask");
  }
  const std::size_t k = wrapper.n_features();
  if (cfg.engine == FeatureEngine::chc) {
    chc::ChcSearch<> search(cfg.chc, k);
    return detail::drive(search, wrapper, model, cfg.frequency, cfg.chc.max_generations,
                         cfg.chc.no_change_limit, control);
  }
  bpso::PsoSearch search(cfg.pso, k);
  return detail::drive(search, wrapper, model, cfg.frequency, cfg.pso.max_iterations, cfg.pso.no_change_limit,
                       control);
}

// Both stages: active sampling builds the meta-model, then feature selection.
inline QxResult qx_run(Wrapper& wrapper, const QxConfig& cfg, const RunControl& control = {}) {
  RunControl sampling_control;
  sampling_control.should_stop = control.should_stop;
  auto sampling = active_sampling(wrapper, cfg, sampling_control);
  auto result = feature_phase(wrapper, cfg, sampling.model, control);
  result.sampling = std::move(sampling);
  return result;
}

}  // namespace qxfs::qx
