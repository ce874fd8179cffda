#include "fogsim/topology.hpp"

#include <cmath>
#include <sstream>

namespace fogsim {

std::string to_string(ServerId id) {
  std::ostringstream os;
  os << '(' << id.level << ',' << id.index << ')';
  return os.str();
}

std::ostream& operator<<(std::ostream& os, ServerId id) {
  return os << '(' << id.level << ',' << id.index << ')';
}

ServerId parse_server_id(const std::string& text) {
  std::string body;
  for (char c : text) {
    if (c != '(' && c != ')' && c != ' ') body.push_back(c);
  }
  auto comma = body.find(',');
  if (comma == std::string::npos) {
    throw TopologyError("malformed server id '" + text + "'");
  }
  try {
    std::size_t used_level = 0;
    std::size_t used_index = 0;
    std::string level_text = body.substr(0, comma);
    std::string index_text = body.substr(comma + 1);
    ServerId id{std::stoi(level_text, &used_level), std::stoi(index_text, &used_index)};
    if (used_level != level_text.size() || used_index != index_text.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return id;
  } catch (const std::logic_error&) {
    throw TopologyError("malformed server id '" + text + "'");
  }
}

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool ServerNode::covers(Vec2 p) const {
  return distance(position, p) <= coverage_radius;
}

LinkParams::LinkParams(std::vector<LevelLink> per_level)
    : per_level_(std::move(per_level)) {}

const LevelLink& LinkParams::at(int level) const {
  if (level < 0 || level >= levels()) {
    throw TopologyError("no link parameters for level " + std::to_string(level));
  }
  return per_level_[static_cast<std::size_t>(level)];
}

void LinkParams::validate() const {
  for (int h = 0; h < levels(); ++h) {
    const auto& l = per_level_[static_cast<std::size_t>(h)];
    if (l.lat_up < 0 || l.lat_down < 0 || l.lat_cluster < 0) {
      throw TopologyError("negative latency at level " + std::to_string(h));
    }
    if (!(l.bw_up > 0) || !(l.bw_down > 0) || !(l.bw_cluster > 0)) {
      throw TopologyError("non-positive bandwidth at level " + std::to_string(h));
    }
  }
}

Topology Topology::build(const TopologySpec& spec) {
  Topology topo;
  topo.max_fog_level_ = spec.max_fog_level;
  topo.links_ = spec.links;
  topo.links_.validate();
  if (topo.links_.levels() < spec.max_fog_level + 2) {
    throw TopologyError("link parameters must cover levels 0.." +
                        std::to_string(spec.max_fog_level + 1));
  }

  for (const auto& ns : spec.nodes) {
    if (ns.id.level < 0 || ns.id.level > spec.max_fog_level + 1 || ns.id.index < 1) {
      throw TopologyError("server id " + to_string(ns.id) + " outside the hierarchy");
    }
    if (topo.nodes_.count(ns.id)) {
      throw TopologyError("duplicate server id " + to_string(ns.id));
    }
    if (ns.id.level == spec.max_fog_level + 1 && ns.id.index != 1) {
      throw TopologyError("cloud must be " + to_string(topo.cloud()));
    }
    if (ns.container_capacity < 0 || ns.cpu_mips < 0) {
      throw TopologyError("negative capacity on " + to_string(ns.id));
    }
    ServerNode node;
    node.id = ns.id;
    node.cpu_mips = ns.cpu_mips;
    node.container_capacity = ns.container_capacity;
    node.ram_capacity_mb = ns.ram_capacity_mb;
    node.position = ns.position;
    node.coverage_radius = ns.coverage_radius;
    node.parent = ns.parent;
    topo.nodes_.emplace(ns.id, std::move(node));
  }
  if (!topo.nodes_.count(topo.cloud())) {
    throw TopologyError("missing cloud node " + to_string(topo.cloud()));
  }
  for (auto& [id, node] : topo.nodes_) {
    if (!node.parent) continue;
    if (id == topo.cloud()) {
      throw TopologyError("cloud node cannot have a parent");
    }
    if (node.parent->level != id.level + 1) {
      throw TopologyError("parent " + to_string(*node.parent) + " of " + to_string(id) +
                          " is not exactly one level up");
    }
    auto it = topo.nodes_.find(*node.parent);
    if (it == topo.nodes_.end()) {
      throw TopologyError("unknown parent " + to_string(*node.parent) + " of " + to_string(id));
    }
    it->second.children.insert(id);
  }
  topo.refresh_omega();
  return topo;
}

const ServerNode& Topology::node(ServerId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw TopologyError("unknown server " + to_string(id));
  return it->second;
}

ServerNode& Topology::mut(ServerId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw TopologyError("unknown server " + to_string(id));
  return it->second;
}

std::vector<ServerId> Topology::ids_at_level(int level) const {
  std::vector<ServerId> out;
  for (auto it = nodes_.lower_bound(ServerId{level, 0});
       it != nodes_.end() && it->first.level == level; ++it) {
    out.push_back(it->first);
  }
  return out;
}

std::vector<ServerId> Topology::servers() const {
  std::vector<ServerId> out;
  for (const auto& [id, n] : nodes_) {
    if (!id.is_device()) out.push_back(id);
  }
  return out;
}

const std::set<ServerId>& Topology::omega(ServerId id) const {
  auto it = omega_.find(id);
  if (it == omega_.end()) throw TopologyError("unknown server " + to_string(id));
  return it->second;
}

bool Topology::has_hierarchical_path(ServerId from, ServerId to) const {
  if (!contains(to)) throw TopologyError("unknown server " + to_string(to));
  return omega(from).count(to) != 0;
}

std::optional<ServerId> Topology::ancestor_at_level(ServerId id, int level) const {
  std::optional<ServerId> cur = id;
  while (cur && cur->level < level) {
    cur = node(*cur).parent;
  }
  if (cur && cur->level == level) return cur;
  return std::nullopt;
}

void Topology::refresh_omega() {
  omega_.clear();
  // Children always sit exactly one level below, so filling levels bottom-up
  // visits every child before its parent.
  for (const auto& [id, n] : nodes_) {
    auto& set = omega_[id];
    set.insert(id);
    if (!n.alive) continue;
    for (ServerId c : n.children) {
      auto cit = nodes_.find(c);
      if (cit == nodes_.end() || !cit->second.alive) continue;
      const auto& child_set = omega_.at(c);
      set.insert(child_set.begin(), child_set.end());
    }
  }
  ++revision_;
}

void Topology::add_node(const NodeSpec& spec) {
  if (nodes_.count(spec.id)) throw TopologyError("duplicate server id " + to_string(spec.id));
  if (spec.id.level < 0 || spec.id.level > max_fog_level_ + 1 || spec.id.index < 1) {
    throw TopologyError("server id " + to_string(spec.id) + " outside the hierarchy");
  }
  ServerNode node;
  node.id = spec.id;
  node.cpu_mips = spec.cpu_mips;
  node.container_capacity = spec.container_capacity;
  node.ram_capacity_mb = spec.ram_capacity_mb;
  node.position = spec.position;
  node.coverage_radius = spec.coverage_radius;
  nodes_.emplace(spec.id, std::move(node));
  if (spec.parent) {
    set_parent(spec.id, spec.parent);
  } else {
    refresh_omega();
  }
}

void Topology::remove_node(ServerId id) {
  ServerNode& n = mut(id);
  if (n.parent) {
    if (auto it = nodes_.find(*n.parent); it != nodes_.end()) it->second.children.erase(id);
  }
  for (ServerId c : n.children) {
    if (auto it = nodes_.find(c); it != nodes_.end()) it->second.parent.reset();
  }
  for (ServerId m : n.cluster_members) {
    if (auto it = nodes_.find(m); it != nodes_.end()) it->second.cluster_members.erase(id);
  }
  nodes_.erase(id);
  refresh_omega();
}

void Topology::set_parent(ServerId child, std::optional<ServerId> parent) {
  ServerNode& c = mut(child);
  if (parent) {
    if (parent->level != child.level + 1) {
      throw TopologyError("parent " + to_string(*parent) + " of " + to_string(child) +
                          " is not exactly one level up");
    }
    mut(*parent);  // existence check
  }
  if (c.parent) {
    if (auto it = nodes_.find(*c.parent); it != nodes_.end()) it->second.children.erase(child);
  }
  c.parent = parent;
  if (parent) mut(*parent).children.insert(child);
  refresh_omega();
}

void Topology::add_cluster_link(ServerId a, ServerId b) {
  if (a == b) throw TopologyError("a node cannot be its own cluster member");
  if (a.level != b.level) throw TopologyError("cluster members must share a level");
  mut(a).cluster_members.insert(b);
  mut(b).cluster_members.insert(a);
  ++revision_;
}

void Topology::remove_cluster_link(ServerId a, ServerId b) {
  mut(a).cluster_members.erase(b);
  mut(b).cluster_members.erase(a);
  ++revision_;
}

void Topology::set_alive(ServerId id, bool alive) {
  mut(id).alive = alive;
  refresh_omega();
}

void Topology::set_position(ServerId id, Vec2 position) { mut(id).position = position; }

void Topology::add_child_entry(ServerId self, ServerId child) {
  mut(self).children.insert(child);
  refresh_omega();
}

void Topology::remove_child_entry(ServerId self, ServerId child) {
  mut(self).children.erase(child);
  refresh_omega();
}

void Topology::add_member_entry(ServerId self, ServerId member) {
  if (self == member) throw TopologyError("a node cannot be its own cluster member");
  if (self.level != member.level) throw TopologyError("cluster members must share a level");
  mut(self).cluster_members.insert(member);
  ++revision_;
}

void Topology::remove_member_entry(ServerId self, ServerId member) {
  mut(self).cluster_members.erase(member);
  ++revision_;
}

void Topology::set_parent_entry(ServerId self, std::optional<ServerId> parent) {
  if (parent && parent->level != self.level + 1) {
    throw TopologyError("parent " + to_string(*parent) + " of " + to_string(self) +
                        " is not exactly one level up");
  }
  mut(self).parent = parent;
  ++revision_;
}

bool Topology::can_host(ServerId id, double ram_mb) const {
  const ServerNode& n = node(id);
  return n.alive && n.free_slots() > 0 && n.ram_used_mb + ram_mb <= n.ram_capacity_mb;
}

void Topology::reserve_slot(ServerId id) {
  ServerNode& n = mut(id);
  if (n.free_slots() <= 0) throw TopologyError("no free slot to reserve on " + to_string(id));
  ++n.reserved_containers;
}

void Topology::release_reservation(ServerId id) {
  ServerNode& n = mut(id);
  if (n.reserved_containers > 0) --n.reserved_containers;
}

void Topology::occupy_slot(ServerId id, double ram_mb, bool from_reservation) {
  ServerNode& n = mut(id);
  if (from_reservation && n.reserved_containers > 0) {
    --n.reserved_containers;
  } else if (n.free_slots() <= 0) {
    throw TopologyError("container capacity exceeded on " + to_string(id));
  }
  ++n.active_containers;
  n.ram_used_mb += ram_mb;
}

void Topology::free_slot(ServerId id, double ram_mb) {
  ServerNode& n = mut(id);
  if (n.active_containers > 0) --n.active_containers;
  n.ram_used_mb = std::max(0.0, n.ram_used_mb - ram_mb);
}

}  // namespace fogsim
