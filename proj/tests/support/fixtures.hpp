#pragma once

#include <set>

#include "fogsim/placement.hpp"
#include "fogsim/scenario.hpp"

namespace fx {

using fogsim::ServerId;

inline ServerId S(int h, int i) { return ServerId{h, i}; }

inline fogsim::NodeSpec node(ServerId id, double cpu, int cap, std::optional<ServerId> parent,
                             fogsim::Vec2 pos = {}, double radius = 0.0) {
  fogsim::NodeSpec n;
  n.id = id;
  n.cpu_mips = cpu;
  n.container_capacity = cap;
  n.parent = parent;
  n.position = pos;
  n.coverage_radius = radius;
  return n;
}

// Cloud, one L3, three L2 (the middle one childless) and six L1.
inline fogsim::TopologySpec three_level_spec() {
  fogsim::TopologySpec t;
  t.max_fog_level = 3;
  t.links = fogsim::LinkParams(fogsim::default_links());
  t.nodes.push_back(node(S(4, 1), 80000, 10000, std::nullopt));
  t.nodes.push_back(node(S(3, 1), 10000, 100, S(4, 1), {600, 300}));
  t.nodes.push_back(node(S(2, 1), 8000, 40, S(3, 1), {200, 300}, 400));
  t.nodes.push_back(node(S(2, 2), 8000, 40, S(3, 1), {600, 300}, 400));
  t.nodes.push_back(node(S(2, 3), 8000, 40, S(3, 1), {1000, 300}, 400));
  t.nodes.push_back(node(S(1, 1), 4000, 8, S(2, 1), {100, 150}, 200));
  t.nodes.push_back(node(S(1, 2), 4000, 8, S(2, 1), {300, 150}, 200));
  t.nodes.push_back(node(S(1, 3), 4000, 8, S(2, 1), {200, 450}, 200));
  t.nodes.push_back(node(S(1, 4), 4000, 8, S(2, 3), {900, 150}, 200));
  t.nodes.push_back(node(S(1, 5), 4000, 8, S(2, 3), {1100, 150}, 200));
  t.nodes.push_back(node(S(1, 6), 4000, 8, S(2, 3), {1000, 450}, 200));
  return t;
}

inline fogsim::Topology three_level() { return fogsim::Topology::build(three_level_spec()); }

// Single-level links with the given per-hop numbers at every level.
inline std::vector<fogsim::LevelLink> flat_links(int levels, double lat, double bw) {
  std::vector<fogsim::LevelLink> v(static_cast<std::size_t>(levels + 2));
  for (auto& l : v) {
    l.lat_up = l.lat_down = l.lat_cluster = lat;
    l.bw_up = l.bw_down = l.bw_cluster = bw;
  }
  return v;
}

struct F {
  int from, to;
  double mi, bits;
};

// Modules named m0..m{n-1}; `pinned` lists device-resident ones.
inline fogsim::AppDag dag(int n, std::vector<F> flows, std::set<int> pinned = {},
                          double interval = 0.01, double ram = 60.0) {
  fogsim::AppDag d;
  d.app_id = "test";
  d.sensor_interval_s = interval;
  for (int i = 0; i < n; ++i) {
    fogsim::Module m;
    m.name = "m" + std::to_string(i);
    m.pinned_to_device = pinned.count(i) > 0;
    m.container_ram_mb = m.pinned_to_device ? 0.0 : ram;
    d.modules.push_back(m);
  }
  for (const auto& f : flows) d.flows.push_back({f.from, f.to, f.mi, f.bits});
  return d;
}

// Owns everything a DecisionContext points at. Not movable.
struct Bench {
  fogsim::Topology topo;
  fogsim::Router router{topo};
  fogsim::AppDag app;
  fogsim::ScheduleSet sched;

  Bench(fogsim::Topology t, fogsim::AppDag d)
      : topo(std::move(t)), app(std::move(d)), sched(fogsim::build_schedules(app)) {}
  Bench(const Bench&) = delete;

  fogsim::DecisionContext ctx(fogsim::CostWeights w = {}) const {
    fogsim::DecisionContext c;
    c.router = &router;
    c.dag = &app;
    c.schedules = &sched;
    c.weights = w;
    return c;
  }
  fogsim::Placement empty(ServerId device) const { return fogsim::Placement::empty_for(app, device); }
  void fill(ServerId id) {
    while (topo.node(id).free_slots() > 0) topo.occupy_slot(id, 0.0, false);
  }
};

// Device (0,5) attached to (1,1) of the three level layout.
inline fogsim::Topology three_level_with_device() {
  auto t = three_level();
  t.add_node(node(S(0, 5), 500, 2, S(1, 1), {100, 150}));
  return t;
}

}  // namespace fx
