#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fogsim {

struct Module {
  std::string name;
  bool pinned_to_device = false;
  double container_ram_mb = 0.0;
  // Carried from templates but never enforced.
  std::optional<double> max_tolerable_delay_s;
};

struct DataFlow {
  int from = 0;
  int to = 0;
  double instructions_mi = 0.0;
  double payload_bits = 0.0;
};

class AppError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CycleError : public AppError {
 public:
  using AppError::AppError;
};

struct AppDag {
  std::string app_id;
  std::vector<Module> modules;
  std::vector<DataFlow> flows;
  double sensor_interval_s = 0.0;

  int module_count() const { return static_cast<int>(modules.size()); }
  int find_module(const std::string& name) const;  // -1 if absent
  std::vector<int> incoming(int module) const;      // flow indices
  std::vector<int> outgoing(int module) const;      // flow indices
  std::vector<int> predecessors(int module) const;
  std::vector<int> successors(int module) const;
  void validate() const;
};

struct ScheduleSet {
  std::vector<int> to_value;                 // per module, 1-based
  std::vector<std::vector<int>> schedules;   // schedules[t-1], ascending module id

  int count() const { return static_cast<int>(schedules.size()); }
};

// Topological orders by longest path from the sources. Throws CycleError.
ScheduleSet build_schedules(const AppDag& dag);

// Upward rank given per-module execution cost and per-flow transfer cost.
std::vector<double> upward_rank(const AppDag& dag, const std::vector<double>& exe_cost,
                                const std::vector<double>& flow_cost);

// Schedule by schedule, rank descending, ties by module id.
std::vector<int> priority_order(const ScheduleSet& schedules, const std::vector<double>& rank);

AppDag app_from_json(const nlohmann::json& j);
nlohmann::json app_to_json(const AppDag& dag);

// Bundled templates: "ECGMH" and "EEGTBG".
AppDag builtin_app(const std::string& name);
std::vector<std::string> builtin_app_names();

}  // namespace fogsim
