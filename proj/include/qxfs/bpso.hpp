#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qxfs/bitmask.hpp"
#include "qxfs/random.hpp"
#include "qxfs/report.hpp"

// Binary particle swarm with a global (fully connected) topology and a
// sigmoid transfer from velocity to bit probability.
namespace qxfs::bpso {

struct PsoConfig {
  std::size_t particles = 50;
  double c1 = 1.49618;
  double c2 = 1.49618;
  double w = 0.7298;
  double v_max = 6.0;
  std::size_t max_iterations = 100;
  std::size_t no_change_limit = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (particles < 2) throw std::invalid_argument("pso: need at least 2 particles");
    if (!(w > 0.0 && c1 > 0.0 && c2 > 0.0)) throw std::invalid_argument("pso: w, c1, c2 must be positive");
    if (!(v_max > 0.0)) throw std::invalid_argument("pso: v_max must be positive");
  }
};

struct Particle {
  BitMask position;
  std::vector<double> velocity;
  double fitness = kUnevaluable;
  BitMask pbest;
  double pbest_fitness = kUnevaluable;
};

struct Swarm {
  std::vector<Particle> particles;
  BitMask gbest;
  double gbest_fitness = kUnevaluable;
  std::size_t iteration = 0;
  std::uint64_t evaluations = 0;
};

template <class Fitness>
double evaluate(Fitness& fitness, const BitMask& position, Swarm& swarm) {
  if (position.none()) return kUnevaluable;
  ++swarm.evaluations;
  return fitness(position);
}

// Personal and global bests only move on strict improvement; the global best
// is refreshed after the whole swarm is evaluated, in particle order.
inline void update_bests(Swarm& swarm) {
  for (auto& p : swarm.particles) {
    if (p.fitness > p.pbest_fitness) {
      p.pbest = p.position;
      p.pbest_fitness = p.fitness;
    }
  }
  for (const auto& p : swarm.particles) {
    if (p.pbest_fitness > swarm.gbest_fitness) {
      swarm.gbest = p.pbest;
      swarm.gbest_fitness = p.pbest_fitness;
    }
  }
}

// Positions are Bernoulli(0.5) bits, velocities uniform in [-v_max, v_max].
template <class Fitness>
Swarm init_swarm(const PsoConfig& cfg, std::size_t length, Fitness&& fitness, Rng& rng) {
  cfg.validate();
  if (length == 0) throw std::invalid_argument("pso: genome length must be >= 1");
  Swarm swarm;
  swarm.particles.resize(cfg.particles);
  for (auto& p : swarm.particles) {
    p.position = BitMask(length);
    p.velocity.resize(length);
    for (std::size_t j = 0; j < length; ++j) {
      p.position.set(j, bernoulli(rng, 0.5));
      p.velocity[j] = uniform(rng, -cfg.v_max, cfg.v_max);
    }
  }
  for (auto& p : swarm.particles) p.fitness = evaluate(fitness, p.position, swarm);
  swarm.gbest = swarm.particles.front().position;
  update_bests(swarm);
  return swarm;
}

// v <- w*v + c1*r1*(pbest - x) + c2*r2*(gbest - x), clamped to
// [-v_max, v_max]; then x <- 1 with probability sigmoid(v).
template <class Fitness>
void pso_step(Swarm& swarm, const PsoConfig& cfg, Fitness&& fitness, Rng& rng) {
  for (auto& p : swarm.particles) {
    const std::size_t length = p.position.size();
    for (std::size_t j = 0; j < length; ++j) {
      const double x = p.position.test(j) ? 1.0 : 0.0;
      const double pb = p.pbest.test(j) ? 1.0 : 0.0;
      const double gb = swarm.gbest.test(j) ? 1.0 : 0.0;
      const double r1 = uniform01(rng);
      const double r2 = uniform01(rng);
      double v = cfg.w * p.velocity[j] + cfg.c1 * r1 * (pb - x) + cfg.c2 * r2 * (gb - x);
      v = std::clamp(v, -cfg.v_max, cfg.v_max);
      p.velocity[j] = v;
      p.position.set(j, uniform01(rng) < sigmoid(v));
    }
  }
  for (auto& p : swarm.particles) p.fitness = evaluate(fitness, p.position, swarm);
  update_bests(swarm);
  ++swarm.iteration;
}

class PsoSearch {
 public:
  PsoSearch(PsoConfig cfg, std::size_t length) : cfg_(std::move(cfg)), length_(length), rng_(cfg_.seed) {
    cfg_.validate();
  }

  template <class Fitness>
  void initialize(Fitness&& fitness) {
    swarm_ = init_swarm(cfg_, length_, fitness, rng_);
  }

  template <class Fitness>
  void step(Fitness&& fitness) {
    pso_step(swarm_, cfg_, fitness, rng_);
  }

  std::vector<BitMask> genomes() const {
    std::vector<BitMask> out;
    out.reserve(swarm_.particles.size());
    for (const auto& p : swarm_.particles) out.push_back(p.position);
    return out;
  }

  const Swarm& swarm() const noexcept { return swarm_; }
  const PsoConfig& config() const noexcept { return cfg_; }

 private:
  PsoConfig cfg_;
  std::size_t length_;
  Rng rng_;
  Swarm swarm_;
};

template <class Fitness>
RunResult pso_run(const PsoConfig& cfg, std::size_t length, Fitness&& fitness, const RunControl& control = {}) {
  Stopwatch clock;
  PsoSearch search(cfg, length);
  search.initialize(fitness);

  RunResult result;
  auto record = [&](std::size_t iteration) {
    GenerationRecord r;
    r.generation = iteration;
    r.best_fitness = search.swarm().gbest_fitness;
    r.best_mask = search.swarm().gbest;
    r.original_evals = search.swarm().evaluations;
    r.wall_ms = clock.elapsed_ms();
    control.amend(r);
    result.history.push_back(std::move(r));
  };
  record(0);

  std::size_t stagnant = 0;
  for (std::size_t t = 1; t <= cfg.max_iterations; ++t) {
    if (control.stop_requested()) break;
    const double before = search.swarm().gbest_fitness;
    search.step(fitness);
    if (search.swarm().gbest_fitness > before) {
      stagnant = 0;
    } else {
      ++stagnant;
    }
    record(t);
    if (stagnant >= cfg.no_change_limit) break;
  }
  result.best = search.swarm().gbest;
  result.best_fitness = search.swarm().gbest_fitness;
  result.evaluations = search.swarm().evaluations;
  return result;
}

}  // namespace qxfs::bpso
