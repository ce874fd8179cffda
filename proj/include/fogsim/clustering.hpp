#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fogsim/topology.hpp"

namespace fogsim {

enum class ClusterMsgKind {
  CandidParent,
  FogJoining,
  ReplyNewFog,
  StartFogLeaving,
  FogLeaving,
  StartFogFailureRecovery,
  FogFailureRecovery,
  // Not named in the protocol description but needed to keep List_ch in
  // step with par: a child confirms or releases its parent choice.
  ParentAck,
  ParentRelease,
};

const char* to_string(ClusterMsgKind kind);

struct ControlMessage {
  ClusterMsgKind kind = ClusterMsgKind::CandidParent;
  ServerId source;
  Vec2 position;
  double coverage_radius = 0.0;
  std::vector<std::string> active_containers;
  std::vector<std::string> inactive_containers;
  std::optional<ServerId> subject;  // failed node for the recovery messages
};

struct MemberInfo {
  Vec2 position;
  double coverage_radius = 0.0;
  std::vector<std::string> active_containers;
  std::vector<std::string> inactive_containers;
};

struct ClusterState {
  std::map<ServerId, MemberInfo> members;
  std::map<ServerId, double> candidate_parents;  // estimated latency, seconds
  bool joined = false;
};

struct ClusterConfig {
  double propagation_speed_mps = 2.0e8;
};

struct TopologyDelta {
  enum class Op { AddMember, RemoveMember, AddChild, RemoveChild, SetParent };
  Op op = Op::AddMember;
  ServerId other;
  std::optional<ServerId> parent;  // for SetParent
};

struct Outgoing {
  ServerId dest;
  ControlMessage msg;
};

struct HandlerResult {
  std::vector<Outgoing> out;
  std::vector<TopologyDelta> deltas;  // apply to the receiving node only
  std::vector<std::string> warnings;
};

// What the receiving node reports about its own containers.
struct LocalContainers {
  std::vector<std::string> active;
  std::vector<std::string> inactive;
};

bool in_cluster_range(const ServerNode& a, const ServerNode& b);

// Estimated latency from a node to a candidate parent: the configured
// uplink latency plus propagation over the straight-line distance.
double estimate_parent_latency(const Topology& topo, ServerId self, ServerId candidate,
                               const ClusterConfig& cfg);

// Minimum latency among alive candidates one level up; ties by index.
std::optional<ServerId> select_parent(const Topology& topo, ServerId self,
                                      const std::map<ServerId, double>& candidates);

// Messages a node sends when it comes up: CandidParent to the level below and
// FogJoining to in-range peers.
HandlerResult start_join(ServerId self, ClusterState& state, const Topology& topo);

HandlerResult handle_cluster_message(ServerId self, ClusterState& state, const ControlMessage& msg,
                                     const Topology& topo, const ClusterConfig& cfg,
                                     const LocalContainers& local);

void apply_deltas(Topology& topo, ServerId self, const std::vector<TopologyDelta>& deltas);

}  // namespace fogsim
