#include "fogsim/clustering.hpp"

namespace fogsim {

const char* to_string(ClusterMsgKind kind) {
  switch (kind) {
    case ClusterMsgKind::CandidParent: return "CandidParent";
    case ClusterMsgKind::FogJoining: return "FogJoining";
    case ClusterMsgKind::ReplyNewFog: return "ReplyNewFog";
    case ClusterMsgKind::StartFogLeaving: return "StartFogLeaving";
    case ClusterMsgKind::FogLeaving: return "FogLeaving";
    case ClusterMsgKind::StartFogFailureRecovery: return "StartFogFailureRecovery";
    case ClusterMsgKind::FogFailureRecovery: return "FogFailureRecovery";
    case ClusterMsgKind::ParentAck: return "ParentAck";
    case ClusterMsgKind::ParentRelease: return "ParentRelease";
  }
  return "?";
}

bool in_cluster_range(const ServerNode& a, const ServerNode& b) {
  if (a.coverage_radius <= 0 || b.coverage_radius <= 0) return false;
  return distance(a.position, b.position) <= a.coverage_radius + b.coverage_radius;
}

double estimate_parent_latency(const Topology& topo, ServerId self, ServerId candidate,
                               const ClusterConfig& cfg) {
  const double d = distance(topo.node(self).position, topo.node(candidate).position);
  return topo.links().at(self.level).lat_up + d / cfg.propagation_speed_mps;
}

std::optional<ServerId> select_parent(const Topology& topo, ServerId self,
                                      const std::map<ServerId, double>& candidates) {
  std::optional<ServerId> best;
  double best_lat = 0.0;
  for (const auto& [id, lat] : candidates) {
    if (id.level != self.level + 1 || !topo.contains(id) || !topo.node(id).alive) continue;
    // Map order is ascending index, so strict < keeps the smaller index on ties.
    if (!best || lat < best_lat) {
      best = id;
      best_lat = lat;
    }
  }
  return best;
}

namespace {

ControlMessage make(ClusterMsgKind kind, ServerId self, const Topology& topo) {
  ControlMessage m;
  m.kind = kind;
  m.source = self;
  m.position = topo.node(self).position;
  m.coverage_radius = topo.node(self).coverage_radius;
  return m;
}

void reselect_parent(ServerId self, ClusterState& state, const Topology& topo,
                     HandlerResult& res) {
  const auto& current = topo.node(self).parent;
  auto chosen = select_parent(topo, self, state.candidate_parents);
  bool current_ok = current && topo.contains(*current) && topo.node(*current).alive;
  if (chosen == current && current_ok) return;
  if (!chosen) {
    if (current && !current_ok) {
      res.deltas.push_back({TopologyDelta::Op::SetParent, self, std::nullopt});
    }
    return;
  }
  if (current && current_ok) {
    res.out.push_back({*current, make(ClusterMsgKind::ParentRelease, self, topo)});
  }
  res.deltas.push_back({TopologyDelta::Op::SetParent, self, chosen});
  res.out.push_back({*chosen, make(ClusterMsgKind::ParentAck, self, topo)});
}

void drop_member(ServerId gone, ServerId self, ClusterState& state, const Topology& topo,
                 HandlerResult& res) {
  state.members.erase(gone);
  if (topo.node(self).cluster_members.count(gone)) {
    res.deltas.push_back({TopologyDelta::Op::RemoveMember, gone, std::nullopt});
  }
}

}  // namespace

HandlerResult start_join(ServerId self, ClusterState& state, const Topology& topo) {
  HandlerResult res;
  const ServerNode& me = topo.node(self);
  if (!me.alive) return res;
  state.joined = true;
  if (self.level >= 2) {
    for (ServerId low : topo.ids_at_level(self.level - 1)) {
      if (topo.node(low).alive) {
        res.out.push_back({low, make(ClusterMsgKind::CandidParent, self, topo)});
      }
    }
  }
  for (ServerId peer : topo.ids_at_level(self.level)) {
    if (peer == self) continue;
    const ServerNode& other = topo.node(peer);
    if (other.alive && in_cluster_range(me, other)) {
      res.out.push_back({peer, make(ClusterMsgKind::FogJoining, self, topo)});
    }
  }
  return res;
}

HandlerResult handle_cluster_message(ServerId self, ClusterState& state, const ControlMessage& msg,
                                     const Topology& topo, const ClusterConfig& cfg,
                                     const LocalContainers& local) {
  HandlerResult res;
  if (!topo.contains(self) || !topo.node(self).alive) {
    res.warnings.push_back("message to dead node " + to_string(self) + " dropped");
    return res;
  }
  const bool self_initiated = msg.kind == ClusterMsgKind::StartFogLeaving ||
                              msg.kind == ClusterMsgKind::StartFogFailureRecovery;
  if (!self_initiated && (!topo.contains(msg.source) || !topo.node(msg.source).alive)) {
    if (msg.kind != ClusterMsgKind::FogLeaving) {
      res.warnings.push_back(std::string(to_string(msg.kind)) + " from unknown or dead node " +
                             to_string(msg.source) + " dropped");
      return res;
    }
  }
  const ServerNode& me = topo.node(self);

  switch (msg.kind) {
    case ClusterMsgKind::CandidParent: {
      if (msg.source.level != self.level + 1) break;
      state.candidate_parents[msg.source] = estimate_parent_latency(topo, self, msg.source, cfg);
      // Forget candidates that have gone silent.
      for (auto it = state.candidate_parents.begin(); it != state.candidate_parents.end();) {
        if (!topo.contains(it->first) || !topo.node(it->first).alive) {
          it = state.candidate_parents.erase(it);
        } else {
          ++it;
        }
      }
      reselect_parent(self, state, topo, res);
      break;
    }
    case ClusterMsgKind::FogJoining: {
      if (msg.source.level != self.level || msg.source == self) break;
      const ServerNode& other = topo.node(msg.source);
      if (!in_cluster_range(me, other)) break;
      state.members[msg.source] = MemberInfo{msg.position, msg.coverage_radius,
                                             msg.active_containers, msg.inactive_containers};
      if (!me.cluster_members.count(msg.source)) {
        res.deltas.push_back({TopologyDelta::Op::AddMember, msg.source, std::nullopt});
      }
      ControlMessage reply = make(ClusterMsgKind::ReplyNewFog, self, topo);
      reply.active_containers = local.active;
      reply.inactive_containers = local.inactive;
      res.out.push_back({msg.source, reply});
      break;
    }
    case ClusterMsgKind::ReplyNewFog: {
      if (msg.source.level != self.level || msg.source == self) break;
      state.members[msg.source] = MemberInfo{msg.position, msg.coverage_radius,
                                             msg.active_containers, msg.inactive_containers};
      if (!me.cluster_members.count(msg.source)) {
        res.deltas.push_back({TopologyDelta::Op::AddMember, msg.source, std::nullopt});
      }
      break;
    }
    case ClusterMsgKind::StartFogLeaving: {
      std::set<ServerId> scope(me.cluster_members.begin(), me.cluster_members.end());
      scope.insert(me.children.begin(), me.children.end());
      if (me.parent) scope.insert(*me.parent);
      for (ServerId dest : scope) {
        if (dest.is_device()) continue;
        res.out.push_back({dest, make(ClusterMsgKind::FogLeaving, self, topo)});
      }
      break;
    }
    case ClusterMsgKind::FogLeaving: {
      drop_member(msg.source, self, state, topo, res);
      if (me.children.count(msg.source)) {
        res.deltas.push_back({TopologyDelta::Op::RemoveChild, msg.source, std::nullopt});
      }
      if (me.parent && *me.parent == msg.source) {
        state.candidate_parents.erase(msg.source);
        res.deltas.push_back({TopologyDelta::Op::SetParent, self, std::nullopt});
        auto chosen = select_parent(topo, self, state.candidate_parents);
        if (chosen && *chosen != msg.source) {
          res.deltas.push_back({TopologyDelta::Op::SetParent, self, chosen});
          res.out.push_back({*chosen, make(ClusterMsgKind::ParentAck, self, topo)});
        }
      } else {
        state.candidate_parents.erase(msg.source);
      }
      break;
    }
    case ClusterMsgKind::StartFogFailureRecovery: {
      if (!msg.subject) break;
      ServerId failed = *msg.subject;
      if (me.children.count(failed)) {
        res.deltas.push_back({TopologyDelta::Op::RemoveChild, failed, std::nullopt});
      }
      for (ServerId child : me.children) {
        if (child == failed || child.is_device()) continue;
        ControlMessage m = make(ClusterMsgKind::FogFailureRecovery, self, topo);
        m.subject = failed;
        res.out.push_back({child, m});
      }
      break;
    }
    case ClusterMsgKind::FogFailureRecovery: {
      if (!msg.subject) break;
      drop_member(*msg.subject, self, state, topo, res);
      break;
    }
    case ClusterMsgKind::ParentAck: {
      if (msg.source.level + 1 != self.level) break;
      if (!me.children.count(msg.source)) {
        res.deltas.push_back({TopologyDelta::Op::AddChild, msg.source, std::nullopt});
      }
      break;
    }
    case ClusterMsgKind::ParentRelease: {
      if (me.children.count(msg.source)) {
        res.deltas.push_back({TopologyDelta::Op::RemoveChild, msg.source, std::nullopt});
      }
      break;
    }
  }
  return res;
}

void apply_deltas(Topology& topo, ServerId self, const std::vector<TopologyDelta>& deltas) {
  for (const auto& d : deltas) {
    switch (d.op) {
      case TopologyDelta::Op::AddMember: topo.add_member_entry(self, d.other); break;
      case TopologyDelta::Op::RemoveMember: topo.remove_member_entry(self, d.other); break;
      case TopologyDelta::Op::AddChild: topo.add_child_entry(self, d.other); break;
      case TopologyDelta::Op::RemoveChild: topo.remove_child_entry(self, d.other); break;
      case TopologyDelta::Op::SetParent: topo.set_parent_entry(self, d.parent); break;
    }
  }
}

}  // namespace fogsim
