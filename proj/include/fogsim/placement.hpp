#pragma once

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "fogsim/cost_model.hpp"

namespace fogsim {

// Everything a decision needs to evaluate one device's application.
struct DecisionContext {
  const Router* router = nullptr;
  const AppDag* dag = nullptr;
  const ScheduleSet* schedules = nullptr;
  CostWeights weights;
  DeviceEnergyProfile profile;

  const Topology& topology() const { return router->topology(); }
};

// Topology capacity plus the tentative claims of the decision in progress.
class CapacityView {
 public:
  explicit CapacityView(const Topology& topo) : topo_(&topo) {}
  bool can_host(ServerId id, double ram_mb) const;
  void take(ServerId id, double ram_mb);
  int free_slots(ServerId id) const;

 private:
  const Topology* topo_;
  std::map<ServerId, int> slots_;
  std::map<ServerId, double> ram_;
};

// Self, alive cluster members and alive parent, in that order.
std::vector<ServerId> ready_servers(const Topology& topo, ServerId node);

// Rank per module over the given servers.
std::vector<double> rank_modules(const DecisionContext& ctx, const std::vector<ServerId>& servers,
                                 ServerId device);

// Argmin of the partial application cost over candidates that can host the
// module. Ties: module's own weighted cost, lower level, lower index.
std::optional<ServerId> find_min_cost(const DecisionContext& ctx,
                                      const std::vector<ServerId>& candidates, const Placement& x,
                                      int module, const CapacityView& cap);

struct PlacementDecision {
  std::vector<std::pair<int, ServerId>> assigned;  // in decision order
  std::vector<int> escalated;                      // sent to the parent
};

// One DAPT decision at `node` for the unassigned modules. Modules are taken
// schedule by schedule in rank order; once none of S_R can host a module,
// that module and everything after it go to the parent.
PlacementDecision dapt_place(const DecisionContext& ctx, ServerId node, const Placement& x,
                             const std::vector<int>& unassigned, const CapacityView& cap,
                             const std::set<ServerId>& excluded = {});

// Re-decides failed modules without the failed server. Escalates when only
// the parent would remain.
PlacementDecision dapt_failure_recovery(const DecisionContext& ctx, ServerId node,
                                        const Placement& x, const std::vector<int>& failed,
                                        ServerId failed_server, const CapacityView& cap);

// Modules accepted by a server receiving a placement request. Reserved
// slots are converted to active ones; anything that no longer fits is
// returned as failed and its reservation released.
struct RemotePlacementResult {
  std::vector<int> started;
  std::vector<int> failed;
};

RemotePlacementResult handle_remote_placement(Topology& topo, ServerId node, const AppDag& dag,
                                              const std::vector<int>& modules);

}  // namespace fogsim
