#pragma once

#include <string>

#include "fogsim/migration.hpp"

namespace fogsim {

enum class PolicyKind { Proposed, MAAS, Urmila };

const char* to_string(PolicyKind p);
PolicyKind parse_policy(const std::string& text);

// Edgeward placement: the node takes modules while it has room and forwards
// the rest to its parent.
PlacementDecision maas_place(const DecisionContext& ctx, ServerId node, const Placement& x,
                             const std::vector<int>& unassigned, const CapacityView& cap);

// Nearest alive sensed level-1 server other than `exclude`.
std::optional<ServerId> nearest_sensed(const Topology& topo, Vec2 pos,
                                       std::optional<ServerId> exclude);

// Edgeward migration at `node`: modules already on the node stay, others move
// onto it while it has room, the remainder is forwarded upward. At the top,
// unplaceable modules stay where they are.
MigrationDecision maas_migration_req(const DecisionContext& ctx, const MigrationParams& params,
                                     ServerId node, const std::vector<MigrationItem>& items,
                                     const CapacityView& cap, bool top_level);

// The single decision point of the centralized baseline: the lowest-index
// server at the highest fog level.
ServerId central_controller(const Topology& topo);

// Greedy minimum-cost placement over every alive fog and cloud server.
PlacementDecision urmila_place(const DecisionContext& ctx, const Placement& x,
                               const std::vector<int>& unassigned, const CapacityView& cap);

// Migration whose dump is relayed through the central controller.
MigrationCost relayed_migration_cost(const Router& r, const DeviceEnergyProfile& p,
                                     const MigrationParams& params, const CostWeights& w,
                                     double dump_bits, ServerId from, ServerId via, ServerId to,
                                     double remaining_mi);

// Central migration: each item must leave its server; the destination is the
// alive server with the lowest application cost. Items no other server can
// host stay. Dumps are relayed through the central controller.
MigrationDecision urmila_migration(const DecisionContext& ctx, const MigrationParams& params,
                                   ServerId central, const std::vector<MigrationItem>& items,
                                   const Placement& x, const CapacityView& cap);

}  // namespace fogsim
