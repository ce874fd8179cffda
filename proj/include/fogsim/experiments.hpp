#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fogsim/sim_engine.hpp"

namespace fogsim {

// One (technique, app, horizon, seed) result.
struct MetricsRow {
  std::string technique;
  std::string app;
  double horizon_s = 0.0;
  std::uint64_t seed = 0;
  AppMetrics metrics;
  bool failure_recovery = false;
};

struct ExperimentMatrix {
  std::string scenario;  // bundled name or path
  std::vector<PolicyKind> policies;
  std::vector<std::string> apps;  // every device of a cell runs this app
  std::vector<double> horizons;
  std::vector<std::uint64_t> seeds;
  bool optimality = false;
  double failure_p = 0.0;
  std::optional<int> devices;
  int threads = 0;  // 0: hardware concurrency
};

struct CellError {
  std::string cell;
  std::string message;
};

struct ExperimentOutput {
  std::vector<MetricsRow> rows;  // sorted by (technique, app, horizon, seed)
  std::vector<CellError> errors;
};

ExperimentMatrix matrix_from_json(const nlohmann::json& j);
ExperimentMatrix load_matrix(const std::string& path);

// Runs every cell once to its largest horizon, capturing the others on the way.
ExperimentOutput run_experiments(const ExperimentMatrix& m);

// A scenario configured for one sweep cell.
Scenario cell_scenario(const Scenario& base, PolicyKind policy, const std::string& app,
                       double horizon, std::uint64_t seed, double failure_p,
                       std::optional<int> devices);

std::string csv_header(bool with_gap);
std::string csv_row(const MetricsRow& r, bool with_gap);
std::string to_csv(const std::vector<MetricsRow>& rows, bool with_gap);

// Rows for a single run, one per app present.
std::vector<MetricsRow> rows_for_run(const Scenario& s, const MetricsSummary& m);

}  // namespace fogsim
