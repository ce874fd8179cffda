#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fogsim/scenario.hpp"

namespace fogsim {

struct RunOptions {
  bool optimality = false;
  // Extra horizons below the scenario horizon at which metrics are captured.
  std::vector<double> checkpoints;
  std::ostream* events = nullptr;  // line-delimited JSON records
};

struct AppMetrics {
  std::string app;
  int devices = 0;
  int placed = 0;    // placement completed at least once
  int rejected = 0;
  double pdt_s = 0.0;
  double artt_s = 0.0;
  double aect_j = 0.0;
  double awct = 0.0;
  long migrations = 0;  // handover rounds that relocated at least one module
  long handovers = 0;
  long module_moves = 0;
  double cmt_s = 0.0;
  double cmec_j = 0.0;
  double cmwc = 0.0;
  long tit = 0;
  long emitted = 0;
  long completed = 0;
  long dropped = 0;
  long in_flight = 0;
  long migration_failures = 0;
  // Optimality study: cost of the policy's placement against the optimum.
  int oracle_instances = 0;
  int oracle_incomplete = 0;
  double policy_cost_mean = 0.0;
  double oracle_cost_mean = 0.0;
  std::optional<double> oracle_gap;
};

struct MetricsSummary {
  double horizon_s = 0.0;
  std::map<std::string, AppMetrics> per_app;
  AppMetrics aggregate;
};

struct RunResult {
  std::vector<MetricsSummary> snapshots;  // ascending horizon, the scenario horizon last
  bool all_placed = false;                // at the horizon
  std::vector<std::string> violations;    // C1-C3 breaches on accepted placements
  std::uint64_t events_processed = 0;

  const MetricsSummary& final_summary() const { return snapshots.back(); }
  const MetricsSummary& at(double horizon) const;
};

// Wait imposed on a task arriving at `arrival` by a downtime window
// [start, end); nullopt when the arrival is outside the window.
std::optional<double> downtime_wait(double arrival, double start, double end);

// Runs the scenario to its horizon. Throws ScenarioError before any event
// when the scenario is invalid.
RunResult run_simulation(const Scenario& s, const RunOptions& opt = {});

}  // namespace fogsim
