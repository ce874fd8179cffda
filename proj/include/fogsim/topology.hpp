#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace fogsim {

// (level, index) position of a node in the hierarchy. Level 0 holds IoT
// devices, level L+1 holds the single cloud node (index 1).
struct ServerId {
  int level = 0;
  int index = 0;

  friend auto operator<=>(const ServerId&, const ServerId&) = default;
  bool is_device() const { return level == 0; }
};

std::string to_string(ServerId id);
std::ostream& operator<<(std::ostream& os, ServerId id);
// Parses "(h,i)" or "h,i".
ServerId parse_server_id(const std::string& text);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(Vec2 a, Vec2 b);

struct ServerNode {
  ServerId id;
  double cpu_mips = 0.0;
  int container_capacity = 0;
  int active_containers = 0;
  // Slots promised to in-flight placement/migration decisions.
  int reserved_containers = 0;
  double ram_capacity_mb = std::numeric_limits<double>::infinity();
  double ram_used_mb = 0.0;
  Vec2 position;
  double coverage_radius = 0.0;
  std::optional<ServerId> parent;
  std::set<ServerId> children;
  std::set<ServerId> cluster_members;
  bool alive = true;

  int free_slots() const {
    return container_capacity - active_containers - reserved_containers;
  }
  bool covers(Vec2 p) const;
};

// Per-level link parameters. lat_up/bw_up at level h describe the hop from a
// level-h node to its parent, lat_down/bw_down the hop from a level-h node to
// one of its children, lat_cluster/bw_cluster the hop between two level-h
// cluster members. Latencies in seconds, bandwidths in bits/second.
struct LevelLink {
  double lat_up = 0.0;
  double lat_down = 0.0;
  double lat_cluster = 0.0;
  double bw_up = 1.0;
  double bw_down = 1.0;
  double bw_cluster = 1.0;
};

class LinkParams {
 public:
  LinkParams() = default;
  explicit LinkParams(std::vector<LevelLink> per_level);

  const LevelLink& at(int level) const;
  int levels() const { return static_cast<int>(per_level_.size()); }
  void validate() const;

 private:
  std::vector<LevelLink> per_level_;
};

class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NodeSpec {
  ServerId id;
  double cpu_mips = 0.0;
  int container_capacity = 0;
  double ram_capacity_mb = std::numeric_limits<double>::infinity();
  Vec2 position;
  double coverage_radius = 0.0;
  std::optional<ServerId> parent;
};

struct TopologySpec {
  int max_fog_level = 0;  // L
  std::vector<NodeSpec> nodes;
  LinkParams links;
};

// Hierarchical server graph. Omega sets are recomputed eagerly whenever the
// parent/children relation or liveness changes, so const readers never race
// on a lazily filled cache.
class Topology {
 public:
  Topology() = default;

  static Topology build(const TopologySpec& spec);

  bool contains(ServerId id) const { return nodes_.count(id) != 0; }
  const ServerNode& node(ServerId id) const;
  const std::map<ServerId, ServerNode>& nodes() const { return nodes_; }
  std::vector<ServerId> ids_at_level(int level) const;
  std::vector<ServerId> servers() const;  // every non-device node

  int max_fog_level() const { return max_fog_level_; }
  ServerId cloud() const { return ServerId{max_fog_level_ + 1, 1}; }
  const LinkParams& links() const { return links_; }
  std::uint64_t revision() const { return revision_; }

  const std::set<ServerId>& omega(ServerId id) const;
  bool has_hierarchical_path(ServerId from, ServerId to) const;
  std::optional<ServerId> ancestor_at_level(ServerId id, int level) const;

  // Structural mutation; each call bumps the revision.
  void add_node(const NodeSpec& spec);
  void remove_node(ServerId id);
  void set_parent(ServerId child, std::optional<ServerId> parent);
  void add_cluster_link(ServerId a, ServerId b);
  void remove_cluster_link(ServerId a, ServerId b);
  void set_alive(ServerId id, bool alive);
  void set_position(ServerId id, Vec2 position);

  // Mutation of a single node's own lists (used by protocol handlers that
  // only ever touch the receiving node).
  void add_child_entry(ServerId self, ServerId child);
  void remove_child_entry(ServerId self, ServerId child);
  void add_member_entry(ServerId self, ServerId member);
  void remove_member_entry(ServerId self, ServerId member);
  void set_parent_entry(ServerId self, std::optional<ServerId> parent);

  // Container accounting. Slots are counted per module instance.
  bool can_host(ServerId id, double ram_mb) const;
  void reserve_slot(ServerId id);
  void release_reservation(ServerId id);
  void occupy_slot(ServerId id, double ram_mb, bool from_reservation);
  void free_slot(ServerId id, double ram_mb);

 private:
  ServerNode& mut(ServerId id);
  void refresh_omega();

  std::map<ServerId, ServerNode> nodes_;
  LinkParams links_;
  int max_fog_level_ = 0;
  std::uint64_t revision_ = 0;
  std::map<ServerId, std::set<ServerId>> omega_;
};

}  // namespace fogsim
