// qxfs: feature-selection experiments, curves and the analytic cost model.
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime
// failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qxfs/qxfs.hpp"

namespace {

using namespace qxfs;
namespace ex = qxfs::experiment;

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

std::string default_out_dir() {
  const char* env = std::getenv("QXFS_OUT_DIR");
  return env && *env ? std::string(env) : std::string("qxfs-out");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = qxfs::detail::trim(item);
    if (item.empty()) continue;
    std::uint64_t v = 0;
    const auto* end = item.data() + item.size();
    const auto [ptr, ec] = std::from_chars(item.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("invalid seed: " + item);
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("--seeds needs at least one value");
  return seeds;
}

ex::json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return ex::json::parse(in);
  } catch (const ex::json::parse_error& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
}

struct CurveArgs {
  std::string data;
  std::string label = "class";
  char delimiter = ',';
  std::size_t n0 = 32;
  double ratio = 2.0;
  std::uint64_t seed = 1;
  std::string out;
};

void add_curve_options(CLI::App* cmd, CurveArgs& a) {
  cmd->add_option("--data", a.data, "CSV file with a header row")->required();
  cmd->add_option("--label", a.label, "label column name")->capture_default_str();
  cmd->add_option("--delimiter", a.delimiter, "field delimiter")->capture_default_str();
  cmd->add_option("--n0", a.n0, "first sample size")->capture_default_str();
  cmd->add_option("--ratio", a.ratio, "geometric ratio")->capture_default_str();
  cmd->add_option("--seed", a.seed, "seed for preprocessing, split and sampling")->capture_default_str();
  cmd->add_option("--out", a.out, "CSV output file (stdout when omitted)");
}

std::vector<std::uint64_t> curve_seeds(const CurveArgs& a) {
  const auto plan = ex::SeedPlan::from(a.seed);
  return {plan.preprocess, plan.split, plan.engine};
}

void emit_curve(const std::vector<bench::CurvePoint>& points, const std::string& out) {
  std::ofstream file;
  if (!out.empty()) {
    const auto parent = std::filesystem::path(out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    file.open(out);
    if (!file) throw std::runtime_error("cannot write " + out);
  }
  std::ostream& os = out.empty() ? std::cout : file;
  os << "sample_size,metric\n";
  os.precision(17);
  for (const auto& p : points) os << p.sample_size << ',' << p.metric << '\n';
}

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate-assisted evolutionary feature selection"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a feature-selection method once per seed");
  std::string data, label = "class", method = "chc_qx", seeds, config, out = default_out_dir();
  char delimiter = ',';
  std::optional<double> budget_ms;
  bool matched = false;
  run->add_option("--data", data, "CSV file with a header row")->required();
  run->add_option("--label", label, "label column name")->capture_default_str();
  run->add_option("--delimiter", delimiter, "field delimiter")->capture_default_str();
  run->add_option("--method", method, "baseline | chc | pso | chc_qx | pso_qx")->capture_default_str();
  run->add_option("--seeds", seeds, "comma-separated seeds; one entropy seed when omitted");
  run->add_option("--config", config, "JSON file overriding engine defaults");
  run->add_option("--out", out, "report directory (default $QXFS_OUT_DIR or ./qxfs-out)")
      ->capture_default_str();
  run->add_option("--budget-ms", budget_ms, "wall-clock cap per run");
  run->add_flag("--matched-budget", matched, "cap chc/pso at the wall time of the QX variant");

  // curves
  CurveArgs learning, useful;
  std::size_t q = 20;
  double probe_p = 0.5;
  auto* lc = app.add_subcommand("curve-learning", "test accuracy versus training sample size");
  add_curve_options(lc, learning);
  auto* uc = app.add_subcommand("curve-usefulness", "rank correlation versus training sample size");
  add_curve_options(uc, useful);
  uc->add_option("--q", q, "number of probe feature subsets")->capture_default_str();
  uc->add_option("--probe-probability", probe_p, "bit probability of probe subsets")->capture_default_str();

  // cost model
  auto* cm = app.add_subcommand("cost-model", "analytic training cost of CHC and CHC_QX");
  std::size_t r = 13, e = 50, cq = 10, f = 10;
  double n = 1.0, k = 1.0;
  cm->add_option("--r", r, "generations")->capture_default_str();
  cm->add_option("--e", e, "population size")->capture_default_str();
  cm->add_option("--q", cq, "probe subsets")->capture_default_str();
  cm->add_option("--f", f, "evolution-control frequency")->capture_default_str();
  cm->add_option("--n", n, "training rows")->capture_default_str();
  cm->add_option("--k", k, "features")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitConfig;
  }

  if (*run) {
    return run_guarded([&] {
      ex::ExperimentConfig cfg;
      cfg.data_path = data;
      cfg.label = label;
      cfg.delimiter = delimiter;
      cfg.method = ex::parse_method(method);
      if (!config.empty()) ex::apply_config(read_config_file(config), cfg);
      if (budget_ms) cfg.budget_ms = budget_ms;
      if (matched) cfg.matched_budget = true;
      if (seeds.empty()) {
        cfg.seeds = {ex::entropy_seed()};
        cfg.seeds_from_entropy = true;
      } else {
        cfg.seeds = parse_seeds(seeds);
      }
      cfg.out_dir = out;
      for (const auto& rep : ex::run_experiment(cfg)) {
        std::cout << rep.method << " seed=" << rep.seed << " test_accuracy=" << rep.test_accuracy
                  << " features=" << rep.selected.count() << "/" << rep.selected.size()
                  << " time_ms=" << rep.total_time_ms << '\n';
      }
    });
  }
  if (*lc || *uc) {
    const bool is_learning = static_cast<bool>(*lc);
    const CurveArgs& a = is_learning ? learning : useful;
    return run_guarded([&] {
      const auto s = curve_seeds(a);
      const auto raw = load_dataset(a.data, a.label, a.delimiter);
      const auto splits = split(preprocess(raw, s[0]), s[1]);
      const auto schedule = bench::geometric_schedule(a.n0, a.ratio, splits.train.rows());
      const auto points = is_learning ? bench::learning_curve(splits, schedule, s[2])
                                      : bench::usefulness_curve(splits, schedule, q, s[2], {}, probe_p);
      emit_curve(points, a.out);
    });
  }
  if (*cm) {
    return run_guarded([&] {
      const auto c = bench::cost_model(r, e, cq, f, n, k);
      const ex::json doc = {{"r", r},
                            {"e", e},
                            {"q", cq},
                            {"f", f},
                            {"t_chc", c.t_chc},
                            {"t_chcqx", c.t_chcqx},
                            {"amortized_chc", c.amortized_chc},
                            {"amortized_chcqx", c.amortized_chcqx},
                            {"qx_cheaper", c.qx_cheaper()},
                            {"crossover_generation", bench::crossover_generation(e, cq, f)}};
      std::cout << doc.dump(2) << '\n';
    });
  }
  return 0;
}
