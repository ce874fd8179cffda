#pragma once

#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "fogsim/placement.hpp"

namespace fogsim {

struct MobilityState {
  ServerId device;
  Vec2 position;
  Vec2 velocity;  // heading times speed, m/s
  std::vector<ServerId> sensed;  // List_SFog
};

// Time until a straight-line walk leaves the circle (larger root of
// |p + v t - c| = r). 0 when the circle is not ahead; +inf for a stationary
// device inside the circle.
double sojourn_time(Vec2 pos, Vec2 vel, Vec2 center, double radius);

// Device is beyond `fraction` of the radius and moving away from the center.
bool departure_detected(Vec2 pos, Vec2 vel, Vec2 center, double radius, double fraction);

// Alive level-1 servers whose coverage contains the position.
std::vector<ServerId> sensed_fogs(const Topology& topo, Vec2 pos);

// Reachable: a cluster member of the controller, or a member of one.
bool reachable_from(const Topology& topo, ServerId controller, ServerId candidate);

// New controller choice. `sensed` must already exclude the controller.
// `pick_random` returns an index below its argument.
std::optional<ServerId> analyze_mobility(const Topology& topo, ServerId controller,
                                         const MobilityState& mob, int modules_on_controller,
                                         const std::function<std::size_t(std::size_t)>& pick_random);

// Who decides for a module currently on `previous`: the new controller's
// ancestor at the same level.
ServerId migration_decider(const Topology& topo, ServerId new_controller, ServerId previous);

struct MigrationItem {
  int module = 0;
  ServerId from;
  double dump_bits = 0.0;
  double remaining_mi = 0.0;
  double ram_mb = 0.0;
};

// Container RAM descending, ties by module id.
void sort_by_ram(std::vector<MigrationItem>& items);

struct MigrationChoice {
  int module = 0;
  ServerId from;
  ServerId to;
  MigrationCost cost;
};

struct MigrationDecision {
  std::vector<MigrationChoice> moves;
  std::vector<MigrationItem> escalated;
  std::vector<int> stayed;
};

// Cluster members, self and non-device children that are alive.
std::vector<ServerId> migration_candidates(const Topology& topo, ServerId node);

// One MigrationReq at `node`. `x` carries decisions already taken in this
// round. A candidate is admissible when the application cost with the module
// moved stays within reference_cost * (1 + epsilon_fraction). With
// `top_level`, modules without an admissible target take the cheapest
// application cost instead, or stay when nothing can host them.
MigrationDecision handle_migration_req(const DecisionContext& ctx, const MigrationParams& params,
                                       ServerId node, const std::vector<MigrationItem>& items,
                                       const Placement& x, double reference_cost,
                                       const CapacityView& cap, const std::set<ServerId>& excluded,
                                       bool top_level);

// Recovery at the controller after a failed MigrationDestination: same scan
// over the controller's S_R without the failed server.
MigrationDecision mmt_failure_recovery(const DecisionContext& ctx, const MigrationParams& params,
                                       ServerId controller, const MigrationItem& item,
                                       ServerId failed_server, const Placement& x,
                                       double reference_cost, const CapacityView& cap);

}  // namespace fogsim
