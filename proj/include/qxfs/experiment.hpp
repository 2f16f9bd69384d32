#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qxfs/bench.hpp"
#include "qxfs/bpso.hpp"
#include "qxfs/chc.hpp"
#include "qxfs/dataset.hpp"
#include "qxfs/error.hpp"
#include "qxfs/qx.hpp"
#include "qxfs/report.hpp"
#include "qxfs/tree.hpp"

namespace qxfs::experiment {

using json = nlohmann::json;

enum class Method { baseline, chc, pso, chc_qx, pso_qx };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::chc: return "chc";
    case Method::pso: return "pso";
    case Method::chc_qx: return "chc_qx";
    case Method::pso_qx: return "pso_qx";
  }
  return "unknown";
}

inline Method parse_method(const std::string& name) {
  for (auto m : {Method::baseline, Method::chc, Method::pso, Method::chc_qx, Method::pso_qx}) {
    if (name == method_name(m)) return m;
  }
  throw ConfigError("unknown method: " + name);
}

struct ExperimentConfig {
  std::string data_path;
  LabelColumn label = std::string("class");
  char delimiter = ',';
  Method method = Method::chc_qx;
  std::vector<std::uint64_t> seeds;
  bool seeds_from_entropy = false;
  TreeParams tree;
  chc::ChcConfig chc;
  bpso::PsoConfig pso;
  qx::QxConfig qx;  // qx.chc and qx.pso are taken from chc and pso
  std::optional<double> budget_ms;
  bool matched_budget = false;
  std::string out_dir;

  void validate() const {
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    try {
      tree.validate();
      chc.validate();
      pso.validate();
      qx.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (budget_ms && !(*budget_ms > 0.0)) throw ConfigError("budget_ms must be positive");
  }
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

inline void read_chc(const json& j, chc::ChcConfig& cfg, const std::string& where) {
  check_keys(j, {"population", "init_probability", "incest_threshold", "divergence", "max_generations",
                 "no_change_limit"},
             where);
  read(j, "population", cfg.population, where);
  read(j, "init_probability", cfg.init_probability, where);
  if (j.contains("incest_threshold")) {
    if (j["incest_threshold"].is_null()) {
      cfg.incest_threshold.reset();
    } else {
      long d = 0;
      read(j, "incest_threshold", d, where);
      cfg.incest_threshold = d;
    }
  }
  read(j, "divergence", cfg.divergence, where);
  read(j, "max_generations", cfg.max_generations, where);
  read(j, "no_change_limit", cfg.no_change_limit, where);
}

inline json chc_json(const chc::ChcConfig& cfg) {
  return {{"population", cfg.population},
          {"init_probability", cfg.init_probability},
          {"incest_threshold", cfg.incest_threshold ? json(*cfg.incest_threshold) : json(nullptr)},
          {"divergence", cfg.divergence},
          {"max_generations", cfg.max_generations},
          {"no_change_limit", cfg.no_change_limit}};
}

inline json fitness_json(double f) { return std::isfinite(f) ? json(f) : json(nullptr); }

}  // namespace detail

// Overlays a JSON config document onto `cfg`. Unknown keys are rejected.
inline void apply_config(const json& doc, ExperimentConfig& cfg) {
  using detail::read;
  detail::check_keys(doc, {"delimiter", "tree", "chc", "pso", "qx", "budget_ms", "matched_budget"}, "config");
  if (doc.contains("delimiter")) {
    std::string d;
    read(doc, "delimiter", d, "config");
    if (d.size() != 1) throw ConfigError("config.delimiter must be a single character");
    cfg.delimiter = d[0];
  }
  if (doc.contains("tree")) {
    const auto& t = doc["tree"];
    detail::check_keys(t, {"max_depth", "min_samples_split"}, "tree");
    if (t.contains("max_depth")) {
      if (t["max_depth"].is_null()) {
        cfg.tree.max_depth.reset();
      } else {
        std::size_t depth = 0;
        read(t, "max_depth", depth, "tree");
        cfg.tree.max_depth = depth;
      }
    }
    read(t, "min_samples_split", cfg.tree.min_samples_split, "tree");
  }
  if (doc.contains("chc")) detail::read_chc(doc["chc"], cfg.chc, "chc");
  if (doc.contains("pso")) {
    const auto& p = doc["pso"];
    detail::check_keys(p, {"particles", "c1", "c2", "w", "v_max", "max_iterations", "no_change_limit"}, "pso");
    read(p, "particles", cfg.pso.particles, "pso");
    read(p, "c1", cfg.pso.c1, "pso");
    read(p, "c2", cfg.pso.c2, "pso");
    read(p, "w", cfg.pso.w, "pso");
    read(p, "v_max", cfg.pso.v_max, "pso");
    read(p, "max_iterations", cfg.pso.max_iterations, "pso");
    read(p, "no_change_limit", cfg.pso.no_change_limit, "pso");
  }
  if (doc.contains("qx")) {
    const auto& q = doc["qx"];
    detail::check_keys(q, {"q", "frequency", "probe_probability", "sampling"}, "qx");
    read(q, "q", cfg.qx.q, "qx");
    read(q, "frequency", cfg.qx.frequency, "qx");
    read(q, "probe_probability", cfg.qx.probe_probability, "qx");
    if (q.contains("sampling")) detail::read_chc(q["sampling"], cfg.qx.sampling, "qx.sampling");
  }
  if (doc.contains("budget_ms")) {
    if (doc["budget_ms"].is_null()) {
      cfg.budget_ms.reset();
    } else {
      double b = 0.0;
      read(doc, "budget_ms", b, "config");
      cfg.budget_ms = b;
    }
  }
  read(doc, "matched_budget", cfg.matched_budget, "config");
}

inline json config_json(const ExperimentConfig& cfg) {
  return {{"delimiter", std::string(1, cfg.delimiter)},
          {"tree",
           {{"max_depth", cfg.tree.max_depth ? json(*cfg.tree.max_depth) : json(nullptr)},
            {"min_samples_split", cfg.tree.min_samples_split}}},
          {"chc", detail::chc_json(cfg.chc)},
          {"pso",
           {{"particles", cfg.pso.particles},
            {"c1", cfg.pso.c1},
            {"c2", cfg.pso.c2},
            {"w", cfg.pso.w},
            {"v_max", cfg.pso.v_max},
            {"max_iterations", cfg.pso.max_iterations},
            {"no_change_limit", cfg.pso.no_change_limit}}},
          {"qx",
           {{"q", cfg.qx.q},
            {"frequency", cfg.qx.frequency},
            {"probe_probability", cfg.qx.probe_probability},
            {"sampling", detail::chc_json(cfg.qx.sampling)}}},
          {"budget_ms", cfg.budget_ms ? json(*cfg.budget_ms) : json(nullptr)},
          {"matched_budget", cfg.matched_budget}};
}

struct RunReport {
  std::string method;
  std::uint64_t seed = 0;
  bool seed_from_entropy = false;
  std::string dataset;
  std::vector<GenerationRecord> generations;
  BitMask selected;
  std::vector<std::string> selected_names;
  double validation_fitness = kUnevaluable;
  double test_accuracy = 0.0;
  double total_time_ms = 0.0;
  qx::CostLedger ledger;
  std::optional<double> budget_ms;
  std::string budget_source;
  std::optional<double> sampling_fitness;
  std::optional<std::size_t> meta_model_rows;
  std::size_t controls = 0;
};

// Stream seeds for one repetition: every stage draws from its own stream.
struct SeedPlan {
  std::uint64_t preprocess, split, engine, sampling;

  static SeedPlan from(std::uint64_t seed) {
    return {derive_seed(seed, 1), derive_seed(seed, 2), derive_seed(seed, 3), derive_seed(seed, 4)};
  }
};

inline SplitSet prepare_splits(const RawDataset& raw, std::uint64_t seed) {
  const auto plan = SeedPlan::from(seed);
  return split(preprocess(raw, plan.preprocess), plan.split);
}

// Runs one method on one split. The final classifier is always refit on the
// full training set with the selected features and scored on the test set.
inline RunReport run_method(const SplitSet& splits, Method method, const ExperimentConfig& cfg, std::uint64_t seed,
                            std::optional<double> budget_ms = std::nullopt) {
  Stopwatch clock;
  const auto plan = SeedPlan::from(seed);
  qx::Wrapper wrapper(splits, cfg.tree);

  RunReport report;
  report.method = method_name(method);
  report.seed = seed;
  report.budget_ms = budget_ms;

  RunControl control;
  if (budget_ms) {
    const double limit = *budget_ms;
    control.should_stop = [&clock, limit] { return clock.elapsed_ms() >= limit; };
  }
  control.on_record = [&wrapper](GenerationRecord& r) {
    r.original_evals = wrapper.ledger().original_evals;
    r.surrogate_evals = wrapper.ledger().surrogate_evals;
  };

  auto chc_cfg = cfg.chc;
  chc_cfg.seed = plan.engine;
  auto pso_cfg = cfg.pso;
  pso_cfg.seed = plan.engine;
  const std::size_t k = splits.train.features();
  auto original = [&wrapper](const BitMask& g) { return wrapper.evaluate_original(g); };

  switch (method) {
    case Method::baseline: {
      report.selected = BitMask::ones(k);
      report.validation_fitness = wrapper.evaluate_original(report.selected);
      break;
    }
    case Method::chc:
    case Method::pso: {
      const auto result = method == Method::chc ? chc::run(chc_cfg, k, original, control)
                                                : bpso::pso_run(pso_cfg, k, original, control);
      report.generations = result.history;
      report.selected = result.best;
      report.validation_fitness = result.best_fitness;
      break;
    }
    case Method::chc_qx:
    case Method::pso_qx: {
      auto qcfg = cfg.qx;
      qcfg.engine = method == Method::chc_qx ? qx::FeatureEngine::chc : qx::FeatureEngine::pso;
      qcfg.chc = chc_cfg;
      qcfg.pso = pso_cfg;
      qcfg.sampling.seed = plan.sampling;
      const auto result = qx::qx_run(wrapper, qcfg, control);
      report.generations = result.history;
      report.selected = result.best;
      report.validation_fitness = result.best_fitness;
      report.controls = result.controls;
      report.sampling_fitness = result.sampling->fitness;
      report.meta_model_rows = result.model.instances.count();
      break;
    }
  }

  if (report.selected.none()) throw RuntimeFailure("search produced no evaluable feature subset");
  const auto features = report.selected.indices();
  for (auto j : features) report.selected_names.push_back(splits.train.feature_names()[j]);
  report.test_accuracy = fit_and_score(view(splits.train, report.selected, all),
                                       view(splits.test, report.selected, all), cfg.tree);
  report.ledger = wrapper.ledger();
  report.total_time_ms = clock.elapsed_ms();
  return report;
}

inline json to_json(const RunReport& r) {
  json gens = json::array();
  for (const auto& g : r.generations) {
    gens.push_back({{"generation", g.generation},
                    {"best_original_fitness", detail::fitness_json(g.best_fitness)},
                    {"best_mask", g.best_mask.to_string()},
                    {"original_evals", g.original_evals},
                    {"surrogate_evals", g.surrogate_evals},
                    {"wall_ms", g.wall_ms}});
  }
  json out = {
      {"method", r.method},
      {"seed", r.seed},
      {"seed_source", r.seed_from_entropy ? "entropy" : "explicit"},
      {"dataset", r.dataset},
      {"generations", gens},
      {"final",
       {{"test_accuracy", r.test_accuracy},
        {"validation_fitness", detail::fitness_json(r.validation_fitness)},
        {"selected_mask", r.selected.to_string()},
        {"selected_features", r.selected_names},
        {"n_selected", r.selected.count()},
        {"total_time_ms", r.total_time_ms}}},
      {"ledger",
       {{"original_evals", r.ledger.original_evals},
        {"surrogate_evals", r.ledger.surrogate_evals},
        {"sampling_evals", r.ledger.sampling_evals},
        {"original_units", r.ledger.original_units},
        {"surrogate_units", r.ledger.surrogate_units},
        {"sampling_units", r.ledger.sampling_units}}},
      {"metadata",
       {{"budget_ms", r.budget_ms ? json(*r.budget_ms) : json(nullptr)},
        {"budget_source", r.budget_source},
        {"budget_includes_sampling_stage", true},
        {"controls", r.controls},
        {"sampling_fitness", r.sampling_fitness ? json(*r.sampling_fitness) : json(nullptr)},
        {"meta_model_rows", r.meta_model_rows ? json(*r.meta_model_rows) : json(nullptr)}}}};
  return out;
}

// Writes <dir>/<method>-seed<seed>.json without overwriting existing reports
// and appends one line to <dir>/summary.csv.
inline std::filesystem::path write_report(const std::filesystem::path& dir, const RunReport& r,
                                          const json& config) {
  std::filesystem::create_directories(dir);
  const std::string stem = r.method + "-seed" + std::to_string(r.seed);
  auto path = dir / (stem + ".json");
  for (int i = 1; std::filesystem::exists(path); ++i) path = dir / (stem + "-" + std::to_string(i) + ".json");
  auto doc = to_json(r);
  doc["config"] = config;
  {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path.string());
    out << doc.dump(2) << '\n';
  }
  const auto summary = dir / "summary.csv";
  const bool fresh = !std::filesystem::exists(summary);
  std::ofstream csv(summary, std::ios::app);
  if (!csv) throw std::runtime_error("cannot write summary: " + summary.string());
  if (fresh) {
    csv << "method,seed,test_accuracy,validation_fitness,n_selected,total_time_ms,original_evals,"
           "surrogate_evals,sampling_evals,report\n";
  }
  csv << r.method << ',' << r.seed << ',' << r.test_accuracy << ','
      << (std::isfinite(r.validation_fitness) ? std::to_string(r.validation_fitness) : std::string("")) << ','
      << r.selected.count() << ',' << r.total_time_ms << ',' << r.ledger.original_evals << ','
      << r.ledger.surrogate_evals << ',' << r.ledger.sampling_evals << ',' << path.filename().string() << '\n';
  return path;
}

inline Method qx_counterpart(Method m) { return m == Method::pso ? Method::pso_qx : Method::chc_qx; }

// All repetitions of the configured method. With matched_budget, a plain
// CHC/PSO run is capped at the wall time its QX counterpart needed to
// converge on the same split; both reports are returned.
inline std::vector<RunReport> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto raw = load_dataset(cfg.data_path, cfg.label, cfg.delimiter);
  const auto cfg_doc = config_json(cfg);
  std::vector<RunReport> reports;
  for (auto seed : cfg.seeds) {
    const auto splits = prepare_splits(raw, seed);
    std::optional<double> budget = cfg.budget_ms;
    std::string budget_source = budget ? "config" : "";
    if (cfg.matched_budget && (cfg.method == Method::chc || cfg.method == Method::pso)) {
      auto reference = run_method(splits, qx_counterpart(cfg.method), cfg, seed, cfg.budget_ms);
      reference.dataset = cfg.data_path;
      reference.seed_from_entropy = cfg.seeds_from_entropy;
      reference.budget_source = budget_source;
      budget = reference.total_time_ms;
      budget_source = std::string("matched:") + reference.method;
      reports.push_back(std::move(reference));
    }
    auto report = run_method(splits, cfg.method, cfg, seed, budget);
    report.dataset = cfg.data_path;
    report.seed_from_entropy = cfg.seeds_from_entropy;
    report.budget_source = budget_source;
    reports.push_back(std::move(report));
  }
  if (!cfg.out_dir.empty()) {
    for (const auto& r : reports) write_report(cfg.out_dir, r, cfg_doc);
  }
  return reports;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty vector");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

inline std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace qxfs::experiment
