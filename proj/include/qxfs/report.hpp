#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "qxfs/bitmask.hpp"

namespace qxfs {

inline constexpr double kUnevaluable = -std::numeric_limits<double>::infinity();

struct GenerationRecord {
  std::size_t generation = 0;
  double best_fitness = kUnevaluable;
  BitMask best_mask;
  std::uint64_t original_evals = 0;
  std::uint64_t surrogate_evals = 0;
  double wall_ms = 0.0;
};

struct RunResult {
  BitMask best;
  double best_fitness = kUnevaluable;
  std::vector<GenerationRecord> history;
  std::uint64_t evaluations = 0;
};

// Hooks a driver can attach to a run: an early-stop predicate checked
// before every generation, and a callback that may amend each record (for
// example with evaluation counters kept outside the engine).
struct RunControl {
  std::function<bool()> should_stop;
  std::function<void(GenerationRecord&)> on_record;

  bool stop_requested() const { return should_stop && should_stop(); }
  void amend(GenerationRecord& r) const {
    if (on_record) on_record(r);
  }
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace qxfs
