#pragma once

#include <random>

#include "support/fixtures.hpp"

namespace fx {

using fogsim::LevelLink;
using fogsim::LinkParams;
using fogsim::Topology;
using fogsim::TopologySpec;

// A random connected hierarchy with at most 12 nodes, devices included.
inline Topology random_topology(std::mt19937_64& rng) {
  TopologySpec spec;
  const int L = 1 + static_cast<int>(rng() % 3);
  spec.max_fog_level = L;
  std::vector<LevelLink> links(static_cast<std::size_t>(L + 2));
  for (auto& l : links) {
    l.lat_up = 0.001 * static_cast<double>(1 + rng() % 50);
    l.lat_down = 0.001 * static_cast<double>(1 + rng() % 50);
    l.lat_cluster = 0.001 * static_cast<double>(1 + rng() % 50);
    l.bw_up = 1e6 * static_cast<double>(1 + rng() % 1000);
    l.bw_down = 1e6 * static_cast<double>(1 + rng() % 1000);
    l.bw_cluster = 1e6 * static_cast<double>(1 + rng() % 1000);
  }
  spec.links = LinkParams(links);
  spec.nodes.push_back(fx::node(S(L + 1, 1), 1000, 1, std::nullopt));
  int budget = 11;
  int above = 1;
  for (int h = L; h >= 0 && budget > 0; --h) {
    int count = std::min(budget, 1 + static_cast<int>(rng() % 3));
    for (int i = 1; i <= count; ++i) {
      int p = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(above));
      spec.nodes.push_back(fx::node(S(h, i), 1000, 1, S(h + 1, p)));
    }
    budget -= count;
    above = count;
    if (budget <= 0 || h == 0) break;
  }
  Topology t = Topology::build(spec);
  for (int h = 1; h <= L; ++h) {
    auto ids = t.ids_at_level(h);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        if (rng() % 2) t.add_cluster_link(ids[i], ids[j]);
      }
    }
  }
  return t;
}


}  // namespace fx
