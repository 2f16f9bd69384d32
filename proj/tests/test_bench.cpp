#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qxfs/bench.hpp"
#include "qxfs/experiment.hpp"
#include "support.hpp"

using namespace qxfs;
namespace ex = qxfs::experiment;

namespace {

const std::string kGerman = std::string(QXFS_DATA_DIR) + "/german.csv";

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("qxfs-bench-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

ex::ExperimentConfig german_config(ex::Method method, std::vector<std::uint64_t> seeds) {
  ex::ExperimentConfig cfg;
  cfg.data_path = kGerman;
  cfg.label = std::string("credit");
  cfg.method = method;
  cfg.seeds = std::move(seeds);
  return cfg;
}

}  // namespace

TEST(Schedule, Examples) {
  const auto s = bench::geometric_schedule(32, 2, 262144);
  ASSERT_EQ(s.size(), 14u);
  EXPECT_EQ(s.front(), 32u);
  EXPECT_EQ(s[1], 64u);
  EXPECT_EQ(s.back(), 262144u);
  EXPECT_EQ(bench::geometric_schedule(7, 2, 7), (std::vector<std::size_t>{7}));
  EXPECT_EQ(bench::geometric_schedule(10, 3, 100), (std::vector<std::size_t>{10, 30, 90, 100}));
  EXPECT_THROW(bench::geometric_schedule(0, 2, 10), std::invalid_argument);
  EXPECT_THROW(bench::geometric_schedule(5, 1.0, 10), std::invalid_argument);
  EXPECT_THROW(bench::geometric_schedule(11, 2, 10), std::invalid_argument);
}

TEST(Schedule, StrictlyIncreasing) {
  for (double ratio : {1.1, 1.5, 2.0, 3.7}) {
    const auto s = bench::geometric_schedule(3, ratio, 5000);
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_GT(s[i], s[i - 1]);
    EXPECT_EQ(s.back(), 5000u);
  }
}

TEST(LearningCurve, SingleRowPredictsItsClass) {
  const auto s = fixtures::graded_splits(300, 5, 1);
  const auto curve = bench::learning_curve(s, {1}, 4);
  // Re-draw the same single row to find its class.
  Rng rng(4);
  const auto row = sample_without_replacement(s.train.rows(), 1, rng)[0];
  const int y = s.train.label(row);
  double freq = 0;
  for (int t : s.test.labels()) freq += t == y;
  EXPECT_DOUBLE_EQ(curve[0].metric, freq / static_cast<double>(s.test.rows()));
}

TEST(LearningCurve, FullSampleMatchesFullTree) {
  const auto s = fixtures::graded_splits(300, 5, 2);
  const auto curve = bench::learning_curve(s, {s.train.rows()}, 1);
  EXPECT_EQ(curve[0].metric, fit_and_score(s.train, s.test));
}

TEST(LearningCurve, MedianTrendIsNonDecreasing) {
  // A diagonal boundary on continuous features: axis-aligned trees need many
  // rows to approximate it, so accuracy keeps rising with the sample size.
  Rng rng(3);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 5000; ++i) {
    const double a = uniform01(rng), b = uniform01(rng);
    rows.push_back({a, b, uniform01(rng)});
    labels.push_back(a + b > 1.0 ? 1 : 0);
  }
  const auto s = split(fixtures::from_rows(rows, labels), 1);
  const auto schedule = bench::geometric_schedule(8, 4, 2048);
  std::vector<std::vector<double>> by_size(schedule.size());
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto curve = bench::learning_curve(s, schedule, seed);
    for (std::size_t i = 0; i < curve.size(); ++i) by_size[i].push_back(curve[i].metric);
  }
  std::vector<double> med;
  for (auto& v : by_size) med.push_back(ex::median(v));
  for (std::size_t i = 1; i < med.size(); ++i) EXPECT_GE(med[i], med[i - 1]) << "at " << schedule[i];
  EXPECT_GT(med.back(), med.front());
}

TEST(LearningCurve, RejectsOversizedSamples) {
  const auto s = fixtures::graded_splits(100, 3, 4);
  EXPECT_THROW(bench::learning_curve(s, {s.train.rows() + 1}, 1), std::invalid_argument);
  EXPECT_THROW(bench::learning_curve(s, {5, 5}, 1), std::invalid_argument);
}

TEST(UsefulnessCurve, FullSampleIsOneAndRangeBounded) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = fixtures::graded_splits(500, 10, seed);
    const auto schedule = bench::geometric_schedule(16, 2, s.train.rows());
    const auto curve = bench::usefulness_curve(s, schedule, 20, seed);
    EXPECT_EQ(curve.back().metric, 1.0);
    for (const auto& p : curve) {
      EXPECT_GE(p.metric, -1.0);
      EXPECT_LE(p.metric, 1.0);
    }
  }
}

TEST(CostModel, Examples) {
  const auto c = bench::cost_model(13, 50, 10, 10);
  EXPECT_EQ(c.t_chc, 650.0);
  EXPECT_EQ(c.t_chcqx, 635.0);
  EXPECT_TRUE(c.qx_cheaper());
  const auto one = bench::cost_model(1, 50, 10, 10);
  EXPECT_EQ(one.t_chcqx, 285.0);
  EXPECT_EQ(one.t_chc, 50.0);
  EXPECT_FALSE(one.qx_cheaper());
  EXPECT_EQ(bench::crossover_generation(50, 10, 10), 13u);
  const auto scaled = bench::cost_model(13, 50, 10, 10, 1000, 24);
  EXPECT_EQ(scaled.t_chcqx, 635.0 * 1000 * 24 * 24);
  EXPECT_THROW(bench::cost_model(0, 50, 10, 10), std::invalid_argument);
}

TEST(CostModel, ClosedFormOracle) {
  for (std::size_t r = 1; r <= 60; ++r) {
    for (std::size_t f : {1u, 3u, 7u, 10u, 100u}) {
      const auto c = bench::cost_model(r, 50, 20, f);
      const double controls = std::ceil(static_cast<double>(r) / static_cast<double>(f));
      EXPECT_EQ(c.t_chcqx, 21.0 * 20 + (r / 2.0 + controls) * 50);
      EXPECT_DOUBLE_EQ(c.amortized_chcqx * static_cast<double>(r), c.t_chcqx);
      EXPECT_EQ(c.amortized_chc, 50.0);
    }
  }
}

TEST(CostModel, WithoutProbeOverheadQxIsCheaperFromFiveGenerations) {
  // (r/2 + ceil(r/f)) / r < 1 needs ceil(r/f) < r/2; for f >= 3 that holds
  // once r >= 5, but not for every smaller r (r = 4, f = 3 gives 4 / 4).
  for (std::size_t f = 3; f <= 20; ++f) {
    for (std::size_t r = 5; r <= 200; ++r) {
      EXPECT_LT(bench::cost_model(r, 50, 0, f).amortized_chcqx, 50.0) << "r=" << r << " f=" << f;
    }
  }
  EXPECT_EQ(bench::cost_model(4, 50, 0, 3).amortized_chcqx, 50.0);
}

// Experiment harness

TEST(Config, OverridesAndUnknownKeys) {
  ex::ExperimentConfig cfg;
  ex::apply_config(ex::json::parse(R"({"chc": {"population": 20, "incest_threshold": 3},
                                        "qx": {"q": 12, "sampling": {"max_generations": 5}},
                                        "tree": {"max_depth": 4}, "budget_ms": 100})"),
                   cfg);
  EXPECT_EQ(cfg.chc.population, 20u);
  EXPECT_EQ(cfg.chc.incest_threshold, 3);
  EXPECT_EQ(cfg.qx.q, 12u);
  EXPECT_EQ(cfg.qx.sampling.max_generations, 5u);
  EXPECT_EQ(cfg.qx.sampling.population, 4u);
  EXPECT_EQ(cfg.tree.max_depth, 4u);
  EXPECT_EQ(cfg.budget_ms, 100.0);
  EXPECT_THROW(ex::apply_config(ex::json::parse(R"({"chc": {"popsize": 2}})"), cfg), ConfigError);
  EXPECT_THROW(ex::apply_config(ex::json::parse(R"({"seed": 2})"), cfg), ConfigError);
  EXPECT_THROW(ex::apply_config(ex::json::parse(R"({"chc": {"population": "x"}})"), cfg), ConfigError);
  EXPECT_THROW(ex::parse_method("ga"), ConfigError);
  EXPECT_EQ(ex::parse_method("pso_qx"), ex::Method::pso_qx);
}

TEST(Config, RoundTripsThroughJson) {
  ex::ExperimentConfig a;
  a.chc.divergence = 0.2;
  a.pso.w = 0.5;
  a.qx.frequency = 4;
  ex::ExperimentConfig b;
  ex::apply_config(ex::config_json(a), b);
  EXPECT_EQ(ex::config_json(b), ex::config_json(a));
}

TEST(Config, ValidationErrors) {
  ex::ExperimentConfig cfg;
  EXPECT_THROW(cfg.validate(), ConfigError);  // no seeds
  cfg.seeds = {1};
  cfg.chc.population = 5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Experiment, BaselineOnGermanIsInTheExpectedBallpark) {
  const auto reports = ex::run_experiment(german_config(ex::Method::baseline, {1, 2, 3, 4, 5}));
  ASSERT_EQ(reports.size(), 5u);
  std::vector<double> acc;
  for (const auto& r : reports) {
    EXPECT_TRUE(r.selected.all());
    EXPECT_EQ(r.selected.size(), 20u);
    acc.push_back(r.test_accuracy);
  }
  EXPECT_NEAR(ex::median(acc), 0.66, 0.05);
}

TEST(Experiment, SnapshotOnGermanChargesQOriginalFits) {
  const auto splits = ex::prepare_splits(load_dataset(kGerman, std::string("credit")), 1);
  EXPECT_EQ(splits.train.rows(), 600u);
  qx::Wrapper w(splits);
  Rng rng(1);
  qx::make_snapshot(w, 20, 0.5, rng);
  EXPECT_EQ(w.ledger().original_evals, 20u);
}

TEST(Experiment, SeedsGiveOneReportEach) {
  auto cfg = german_config(ex::Method::chc, {1, 2, 3});
  cfg.chc.max_generations = 15;
  const auto reports = ex::run_experiment(cfg);
  ASSERT_EQ(reports.size(), 3u);
  std::vector<double> acc;
  for (const auto& r : reports) {
    acc.push_back(r.test_accuracy);
    EXPECT_EQ(r.selected_names.size(), r.selected.count());
  }
  EXPECT_GT(ex::median(acc), 0.5);
}

TEST(Experiment, ReportInvariantsAndRetrainOnFullTrain) {
  auto cfg = german_config(ex::Method::chc_qx, {7});
  cfg.chc.max_generations = 25;
  const auto r = ex::run_experiment(cfg).at(0);
  for (std::size_t i = 1; i < r.generations.size(); ++i) {
    EXPECT_GE(r.generations[i].best_fitness, r.generations[i - 1].best_fitness);
    EXPECT_GE(r.generations[i].original_evals, r.generations[i - 1].original_evals);
    EXPECT_GE(r.generations[i].surrogate_evals, r.generations[i - 1].surrogate_evals);
  }
  const auto splits = ex::prepare_splits(load_dataset(kGerman, std::string("credit")), 7);
  EXPECT_EQ(r.test_accuracy,
            fit_and_score(view(splits.train, r.selected, all), view(splits.test, r.selected, all)));
  EXPECT_EQ(r.generations.back().best_mask, r.selected);
}

TEST(Experiment, BudgetCapsWallTime) {
  // A 1 ms budget still runs the work a result needs (snapshot, first
  // sampling generation, generation-0 control, refit); time it first.
  auto floor_cfg = german_config(ex::Method::chc_qx, {3});
  floor_cfg.budget_ms = 1.0;
  const double floor_ms = ex::run_experiment(floor_cfg).at(0).total_time_ms;

  auto cfg = german_config(ex::Method::chc_qx, {3});
  cfg.budget_ms = 300.0;
  const auto r = ex::run_experiment(cfg).at(0);
  double gap = 0;
  for (std::size_t i = 1; i < r.generations.size(); ++i) {
    gap = std::max(gap, r.generations[i].wall_ms - r.generations[i - 1].wall_ms);
  }
  // One generation of slack plus the final control and the refit.
  EXPECT_LE(r.total_time_ms, 300.0 + 2.0 * floor_ms + 3.0 * std::max(gap, 50.0));
  EXPECT_EQ(r.budget_ms, 300.0);

  auto unbounded = german_config(ex::Method::chc_qx, {3});
  EXPECT_LT(r.ledger.original_evals, ex::run_experiment(unbounded).at(0).ledger.original_evals);
}

TEST(Experiment, MatchedBudgetRunsQxFirst) {
  auto cfg = german_config(ex::Method::chc, {2});
  cfg.matched_budget = true;
  cfg.chc.max_generations = 20;
  const auto reports = ex::run_experiment(cfg);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].method, "chc_qx");
  EXPECT_EQ(reports[1].method, "chc");
  EXPECT_EQ(reports[1].budget_ms, reports[0].total_time_ms);
  EXPECT_EQ(reports[1].budget_source, "matched:chc_qx");
}

TEST(Experiment, ReportsAreAppendOnlyAndParseable) {
  const auto dir = fresh_dir("reports");
  auto cfg = german_config(ex::Method::pso, {5});
  cfg.pso.max_iterations = 5;
  cfg.out_dir = dir.string();
  ex::run_experiment(cfg);
  ex::run_experiment(cfg);
  ASSERT_TRUE(std::filesystem::exists(dir / "pso-seed5.json"));
  ASSERT_TRUE(std::filesystem::exists(dir / "pso-seed5-1.json"));
  ex::json docs[2];
  for (int i = 0; i < 2; ++i) {
    std::ifstream in(dir / (i == 0 ? "pso-seed5.json" : "pso-seed5-1.json"));
    docs[i] = ex::json::parse(in);
  }
  EXPECT_EQ(docs[0]["final"]["selected_mask"], docs[1]["final"]["selected_mask"]);
  ASSERT_EQ(docs[0]["generations"].size(), docs[1]["generations"].size());
  for (std::size_t g = 0; g < docs[0]["generations"].size(); ++g) {
    auto a = docs[0]["generations"][g], b = docs[1]["generations"][g];
    a.erase("wall_ms");
    b.erase("wall_ms");
    EXPECT_EQ(a, b);
  }
  EXPECT_EQ(docs[0]["config"]["pso"]["max_iterations"], 5);
  EXPECT_EQ(docs[0]["seed_source"], "explicit");
  std::ifstream csv(dir / "summary.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 3);
}

TEST(Experiment, DataErrorsSurface) {
  auto cfg = german_config(ex::Method::baseline, {1});
  cfg.data_path = "/nonexistent.csv";
  EXPECT_THROW(ex::run_experiment(cfg), DataError);
  cfg = german_config(ex::Method::baseline, {1});
  cfg.label = std::string("nope");
  EXPECT_THROW(ex::run_experiment(cfg), DataError);
}
