#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qxfs/bitmask.hpp"
#include "qxfs/random.hpp"
#include "qxfs/report.hpp"

// CHC: cross-generational elitist selection, heterogeneous (HUX)
// recombination with incest prevention, and cataclysmic restarts. No
// mutation is applied between restarts.
namespace qxfs::chc {

struct ChcConfig {
  std::size_t population = 50;
  double init_probability = 0.5;
  std::optional<long> incest_threshold;  // floor(L/4) when unset
  double divergence = 0.35;
  std::size_t max_generations = 100;
  std::size_t no_change_limit = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (population < 2 || population % 2 != 0) {
      throw std::invalid_argument("chc: population must be even and >= 2");
    }
    if (!(init_probability > 0.0 && init_probability <= 1.0)) {
      throw std::invalid_argument("chc: init_probability must be in (0, 1]");
    }
    if (!(divergence >= 0.0 && divergence <= 1.0)) {
      throw std::invalid_argument("chc: divergence must be in [0, 1]");
    }
    if (incest_threshold && *incest_threshold < 0) {
      throw std::invalid_argument("chc: incest_threshold must be >= 0");
    }
  }

  long initial_threshold(std::size_t length) const {
    return incest_threshold ? *incest_threshold : static_cast<long>(length / 4);
  }

  // Bits flipped per restarted individual: ceil(div * L).
  std::size_t flips(std::size_t length) const {
    return static_cast<std::size_t>(std::ceil(divergence * static_cast<double>(length) - 1e-9));
  }
};

struct Individual {
  BitMask genome;
  double fitness = kUnevaluable;
};

struct Population {
  std::vector<Individual> members;
  long threshold = 0;
  std::size_t generation = 0;
  std::uint64_t evaluations = 0;

  // Highest fitness, then fewest set bits, then earliest position.
  std::size_t best_index() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < members.size(); ++i) {
      const auto& a = members[i];
      const auto& b = members[best];
      if (a.fitness > b.fitness || (a.fitness == b.fitness && a.genome.count() < b.genome.count())) {
        best = i;
      }
    }
    return best;
  }
  const Individual& best() const { return members.at(best_index()); }
};

struct NoRepair {
  void operator()(BitMask&, Rng&) const noexcept {}
};

// Empty genomes are not evaluable; they score -inf without a call.
template <class Fitness>
double evaluate(Fitness& fitness, const BitMask& genome, Population& pop) {
  if (genome.none()) return kUnevaluable;
  ++pop.evaluations;
  return fitness(genome);
}

template <class Fitness, class Repair = NoRepair>
Population init_population(const ChcConfig& cfg, std::size_t length, Fitness&& fitness, Rng& rng,
                           Repair repair = {}) {
  cfg.validate();
  if (length == 0) throw std::invalid_argument("chc: genome length must be >= 1");
  Population pop;
  pop.threshold = cfg.initial_threshold(length);
  pop.members.reserve(cfg.population);
  for (std::size_t i = 0; i < cfg.population; ++i) {
    BitMask genome(length);
    do {
      for (std::size_t j = 0; j < length; ++j) genome.set(j, bernoulli(rng, cfg.init_probability));
      repair(genome, rng);
    } while (genome.none());
    pop.members.push_back({std::move(genome), kUnevaluable});
  }
  for (auto& m : pop.members) m.fitness = evaluate(fitness, m.genome, pop);
  return pop;
}

// Half-uniform crossover: agreeing bits are inherited by both children and
// exactly floor(diff/2) of the differing positions, chosen uniformly, are
// exchanged.
inline std::pair<BitMask, BitMask> hux_crossover(const BitMask& p1, const BitMask& p2, Rng& rng) {
  if (p1.size() != p2.size()) throw std::invalid_argument("hux_crossover: length mismatch");
  BitMask c1 = p1;
  BitMask c2 = p2;
  std::vector<std::size_t> diff;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    if (p1.test(i) != p2.test(i)) diff.push_back(i);
  }
  const std::size_t swaps = diff.size() / 2;
  for (std::size_t i = 0; i < swaps; ++i) {
    std::swap(diff[i], diff[i + uniform_below(rng, diff.size() - i)]);
    const std::size_t pos = diff[i];
    c1.set(pos, p2.test(pos));
    c2.set(pos, p1.test(pos));
  }
  return {std::move(c1), std::move(c2)};
}

struct Selection {
  std::vector<Individual> survivors;
  std::size_t offspring_survived = 0;
};

// Best `count` of parents followed by offspring. Fitness descending, then
// fewer set bits, then insertion order.
inline Selection select_survivors(std::vector<Individual> parents, std::vector<Individual> offspring,
                                  std::size_t count) {
  struct Entry {
    Individual ind;
    bool child;
  };
  std::vector<Entry> pool;
  pool.reserve(parents.size() + offspring.size());
  for (auto& p : parents) pool.push_back({std::move(p), false});
  for (auto& c : offspring) pool.push_back({std::move(c), true});
  std::stable_sort(pool.begin(), pool.end(), [](const Entry& a, const Entry& b) {
    if (a.ind.fitness != b.ind.fitness) return a.ind.fitness > b.ind.fitness;
    return a.ind.genome.count() < b.ind.genome.count();
  });
  Selection out;
  count = std::min(count, pool.size());
  out.survivors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.offspring_survived += pool[i].child ? 1 : 0;
    out.survivors.push_back(std::move(pool[i].ind));
  }
  return out;
}

struct StepOutcome {
  std::size_t matings = 0;
  std::size_t offspring_survived = 0;
};

// One generation: random pairing without replacement, incest-prevented HUX
// (a pair mates when hamming/2 > threshold), elitist survivor selection.
// The threshold drops by one when no offspring survive.
template <class Fitness, class Repair = NoRepair>
StepOutcome generation_step(Population& pop, const ChcConfig& cfg, Fitness&& fitness, Rng& rng,
                            Repair repair = {}) {
  const std::size_t e = pop.members.size();
  auto order = permutation(e, rng);
  std::vector<Individual> offspring;
  StepOutcome outcome;
  for (std::size_t i = 0; i + 1 < e; i += 2) {
    const auto& p1 = pop.members[order[i]].genome;
    const auto& p2 = pop.members[order[i + 1]].genome;
    if (static_cast<double>(hamming(p1, p2)) / 2.0 <= static_cast<double>(pop.threshold)) continue;
    auto [c1, c2] = hux_crossover(p1, p2, rng);
    repair(c1, rng);
    repair(c2, rng);
    offspring.push_back({std::move(c1), kUnevaluable});
    offspring.push_back({std::move(c2), kUnevaluable});
    ++outcome.matings;
  }
  for (auto& c : offspring) c.fitness = evaluate(fitness, c.genome, pop);

  auto selection = select_survivors(std::move(pop.members), std::move(offspring), cfg.population);
  pop.members = std::move(selection.survivors);
  outcome.offspring_survived = selection.offspring_survived;
  if (outcome.offspring_survived == 0) --pop.threshold;
  ++pop.generation;
  return outcome;
}

// Keeps the best individual; every other member becomes a copy of it with
// ceil(div * L) distinct positions flipped. Resets the incest threshold.
template <class Fitness, class Repair = NoRepair>
void cataclysmic_restart(Population& pop, const ChcConfig& cfg, Fitness&& fitness, Rng& rng,
                         Repair repair = {}) {
  const Individual elite = pop.best();
  const std::size_t length = elite.genome.size();
  const std::size_t flips = cfg.flips(length);
  std::vector<Individual> next;
  next.reserve(pop.members.size());
  next.push_back(elite);
  for (std::size_t i = 1; i < pop.members.size(); ++i) {
    BitMask genome = elite.genome;
    for (auto pos : sample_without_replacement(length, flips, rng)) genome.flip(pos);
    repair(genome, rng);
    next.push_back({std::move(genome), kUnevaluable});
  }
  for (std::size_t i = 1; i < next.size(); ++i) next[i].fitness = evaluate(fitness, next[i].genome, pop);
  pop.members = std::move(next);
  pop.threshold = cfg.initial_threshold(length);
}

// Stateful CHC search that advances one generation at a time, restarting
// whenever the incest threshold drops below zero.
template <class Repair = NoRepair>
class ChcSearch {
 public:
  ChcSearch(ChcConfig cfg, std::size_t length, Repair repair = {})
      : cfg_(std::move(cfg)), length_(length), rng_(cfg_.seed), repair_(std::move(repair)) {
    cfg_.validate();
  }

  template <class Fitness>
  void initialize(Fitness&& fitness) {
    pop_ = init_population(cfg_, length_, fitness, rng_, repair_);
  }

  template <class Fitness>
  StepOutcome step(Fitness&& fitness) {
    auto outcome = generation_step(pop_, cfg_, fitness, rng_, repair_);
    if (pop_.threshold < 0) {
      cataclysmic_restart(pop_, cfg_, fitness, rng_, repair_);
      ++restarts_;
    }
    return outcome;
  }

  std::vector<BitMask> genomes() const {
    std::vector<BitMask> out;
    out.reserve(pop_.members.size());
    for (const auto& m : pop_.members) out.push_back(m.genome);
    return out;
  }

  const Population& population() const noexcept { return pop_; }
  const Individual& best() const { return pop_.best(); }
  std::size_t restarts() const noexcept { return restarts_; }
  const ChcConfig& config() const noexcept { return cfg_; }

 private:
  ChcConfig cfg_;
  std::size_t length_;
  Rng rng_;
  Repair repair_;
  Population pop_;
  std::size_t restarts_ = 0;
};

// Full CHC run: stops after max_generations or after no_change_limit
// consecutive generations without a strict best-fitness improvement.
template <class Fitness, class Repair = NoRepair>
RunResult run(const ChcConfig& cfg, std::size_t length, Fitness&& fitness, const RunControl& control = {},
              Repair repair = {}) {
  Stopwatch clock;
  ChcSearch<Repair> search(cfg, length, std::move(repair));
  search.initialize(fitness);

  RunResult result;
  result.best = search.best().genome;
  result.best_fitness = search.best().fitness;
  auto record = [&](std::size_t generation) {
    GenerationRecord r;
    r.generation = generation;
    r.best_fitness = result.best_fitness;
    r.best_mask = result.best;
    r.original_evals = search.population().evaluations;
    r.wall_ms = clock.elapsed_ms();
    control.amend(r);
    result.history.push_back(std::move(r));
  };
  record(0);

  std::size_t stagnant = 0;
  for (std::size_t t = 1; t <= cfg.max_generations; ++t) {
    if (control.stop_requested()) break;
    search.step(fitness);
    const auto& best = search.best();
    if (best.fitness > result.best_fitness) {
      result.best = best.genome;
      result.best_fitness = best.fitness;
      stagnant = 0;
    } else {
      ++stagnant;
    }
    record(t);
    if (stagnant >= cfg.no_change_limit) break;
  }
  result.evaluations = search.population().evaluations;
  return result;
}

}  // namespace qxfs::chc
