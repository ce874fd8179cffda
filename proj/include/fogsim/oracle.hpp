#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "fogsim/cost_model.hpp"

namespace fogsim {

struct OracleInput {
  const Router* router = nullptr;
  const AppDag* dag = nullptr;
  const ScheduleSet* schedules = nullptr;
  CostWeights weights;
  DeviceEnergyProfile profile;
  ServerId device;
  std::vector<ServerId> servers;     // candidates for every placeable module
  std::map<ServerId, int> free_slots;  // missing entries mean unlimited
  std::uint64_t node_budget = 10'000'000;
};

struct OracleResult {
  bool complete = false;   // false when the budget ran out
  bool feasible = false;
  Placement placement;
  double cost = 0.0;
  std::uint64_t nodes = 0;
};

// Branch and bound. Modules are fixed schedule by schedule, rank descending;
// the bound adds, per schedule, the cheapest execution-only cost of every
// unfixed module.
OracleResult optimal_placement(const OracleInput& in);

// Plain enumeration of every capacity-feasible assignment, for testing.
OracleResult exhaustive_placement(const OracleInput& in);

}  // namespace fogsim
