#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "fogsim/experiments.hpp"

namespace fs = std::filesystem;
using namespace fogsim;

namespace {

int cmd_run(const std::string& scenario, const std::optional<std::string>& policy,
            std::optional<double> horizon, std::optional<std::uint64_t> seed,
            const std::string& out_dir, bool optimality, std::optional<double> failure_p,
            bool print_config) {
  Scenario s = load_scenario(scenario_path(scenario));
  if (policy) s.policy = parse_policy(*policy);
  if (horizon) s.horizon_s = *horizon;
  if (seed) s.seed = *seed;
  if (failure_p) s.failures.migration_failure_p = *failure_p;
  if (optimality) s.optimality = true;
  s.validate();
  if (print_config) {
    std::cout << effective_config(s);
    return 0;
  }
  fs::create_directories(out_dir);
  std::ofstream events(fs::path(out_dir) / "events.log");
  RunOptions opt;
  opt.optimality = s.optimality;
  opt.events = &events;
  RunResult r = run_simulation(s, opt);
  const MetricsSummary& m = r.final_summary();
  std::ofstream csv(fs::path(out_dir) / "metrics.csv");
  csv << to_csv(rows_for_run(s, m), s.optimality);
  const AppMetrics& a = m.aggregate;
  std::cout << to_string(s.policy) << " horizon=" << m.horizon_s << "s devices=" << a.devices
            << " placed=" << a.placed << " pdt=" << a.pdt_s << " artt=" << a.artt_s
            << " aect=" << a.aect_j << " migrations=" << a.migrations << " tit=" << a.tit << "\n";
  for (const auto& v : r.violations) std::cerr << "violation: " << v << "\n";
  return 0;
}

int cmd_sweep(const std::string& matrix_path, const std::string& out_dir, int threads) {
  ExperimentMatrix m = load_matrix(matrix_path);
  if (threads > 0) m.threads = threads;
  ExperimentOutput o = run_experiments(m);
  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "metrics.csv") << to_csv(o.rows, m.optimality);
  std::ofstream err(fs::path(out_dir) / "errors.log");
  for (const auto& e : o.errors) {
    err << e.cell << ": " << e.message << "\n";
    std::cerr << "cell " << e.cell << " failed: " << e.message << "\n";
  }
  std::cout << o.rows.size() << " rows, " << o.errors.size() << " errors\n";
  return o.errors.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical fog placement and migration simulator"};
  app.require_subcommand(1);

  std::string scenario, out_dir = "out";
  std::optional<std::string> policy;
  std::optional<double> horizon, failure_p;
  std::optional<std::uint64_t> seed;
  bool optimality = false, print_config = false;
  auto* run = app.add_subcommand("run", "run one scenario");
  run->add_option("scenario", scenario, "bundled scenario name or path")->required();
  run->add_option("--policy", policy, "Proposed, MAAS or Urmila");
  run->add_option("--horizon", horizon, "simulated seconds");
  run->add_option("--seed", seed);
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--optimality", optimality, "compare placements against the exact solver");
  run->add_option("--failure-p", failure_p, "migration failure probability");
  run->add_flag("--print-effective-config", print_config);

  std::string matrix, sweep_out = "out";
  int threads = 0;
  auto* sweep = app.add_subcommand("sweep", "run an experiment matrix");
  sweep->add_option("matrix", matrix, "matrix json")->required();
  sweep->add_option("--out", sweep_out);
  sweep->add_option("--threads", threads);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) {
      return cmd_run(scenario, policy, horizon, seed, out_dir, optimality, failure_p, print_config);
    }
    return cmd_sweep(matrix, sweep_out, threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
