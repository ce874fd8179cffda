#include <doctest.h>

#include "fogsim/baselines.hpp"
#include "support/fixtures.hpp"

using namespace fogsim;
using fx::S;
using doctest::Approx;

namespace {

AppDag chain(int placeable) {
  std::vector<fx::F> flows;
  for (int i = 0; i <= placeable; ++i) flows.push_back({i, i + 1, 50, 1e5});
  return fx::dag(placeable + 2, flows, {0, placeable + 1});
}

// Walks decisions up the parent chain until every module is placed.
template <class Decide>
Placement place_upward(const fx::Bench& b, ServerId start, Decide decide) {
  Placement x = b.empty(S(0, 5));
  CapacityView cap(b.topo);
  std::vector<int> todo;
  for (int m = 0; m < b.app.module_count(); ++m) {
    if (!x.assignment[static_cast<std::size_t>(m)]) todo.push_back(m);
  }
  ServerId at = start;
  while (!todo.empty()) {
    PlacementDecision d = decide(at, x, todo, cap);
    for (auto& [m, s] : d.assigned) {
      x.assignment[static_cast<std::size_t>(m)] = s;
      cap.take(s, b.app.modules[static_cast<std::size_t>(m)].container_ram_mb);
    }
    todo = d.escalated;
    if (!todo.empty()) at = *b.topo.node(at).parent;
  }
  return x;
}

}  // namespace

TEST_CASE("policy names round trip") {
  for (auto p : {PolicyKind::Proposed, PolicyKind::MAAS, PolicyKind::Urmila}) {
    CHECK(parse_policy(to_string(p)) == p);
  }
  CHECK(parse_policy("maas") == PolicyKind::MAAS);
  CHECK_THROWS(parse_policy("random"));
}

TEST_CASE("edgeward placement fills the node then forwards") {
  fx::Bench b(fx::three_level_with_device(), chain(4));
  while (b.topo.node(S(1, 1)).free_slots() > 2) b.topo.occupy_slot(S(1, 1), 0.0, false);
  CapacityView cap(b.topo);
  auto d = maas_place(b.ctx(), S(1, 1), b.empty(S(0, 5)), {1, 2, 3, 4}, cap);
  CHECK(d.assigned.size() == 2);
  CHECK(d.escalated == std::vector<int>{3, 4});
}

TEST_CASE("edgeward placement with a full first level lands on level two") {
  fx::Bench b(fx::three_level_with_device(), chain(3));
  b.fill(S(1, 1));
  auto x = place_upward(b, S(1, 1), [&](ServerId at, const Placement& p, const std::vector<int>& t,
                                        const CapacityView& c) {
    return maas_place(b.ctx(), at, p, t, c);
  });
  for (int m = 1; m <= 3; ++m) CHECK(x.assignment[static_cast<std::size_t>(m)] == S(2, 1));
}

TEST_CASE("without clusters and a cheaper parent the proposed placement is edgeward") {
  auto spec = fx::three_level_spec();
  for (auto& n : spec.nodes) {
    n.cpu_mips = 4000;
    n.container_capacity = n.id.level == 1 ? 2 : n.id.level == 2 ? 2 : 100;
  }
  Topology t = Topology::build(spec);
  t.add_node(fx::node(S(0, 5), 500, 2, S(1, 1)));
  fx::Bench b(std::move(t), chain(6));
  auto dapt = place_upward(b, S(1, 1), [&](ServerId at, const Placement& p, const std::vector<int>& td,
                                           const CapacityView& c) {
    return dapt_place(b.ctx(), at, p, td, c);
  });
  auto maas = place_upward(b, S(1, 1), [&](ServerId at, const Placement& p, const std::vector<int>& td,
                                           const CapacityView& c) {
    return maas_place(b.ctx(), at, p, td, c);
  });
  CHECK(dapt.assignment == maas.assignment);
}

TEST_CASE("nearest sensed server") {
  Topology t = fx::three_level();
  CHECK(nearest_sensed(t, {150, 150}, std::nullopt) == S(1, 1));
  CHECK(nearest_sensed(t, {150, 150}, S(1, 1)) == S(1, 2));
  CHECK_FALSE(nearest_sensed(t, {600, 900}, std::nullopt).has_value());
}

TEST_CASE("central controller is the top fog server") {
  Topology t = fx::three_level();
  CHECK(central_controller(t) == S(3, 1));
  t.set_alive(S(3, 1), false);
  CHECK(central_controller(t) == S(2, 1));
}

TEST_CASE("centralized placement matches a brute force greedy") {
  fx::Bench b(fx::three_level_with_device(), chain(2));
  CapacityView cap(b.topo);
  auto x = b.empty(S(0, 5));
  auto d = urmila_place(b.ctx(), x, {1, 2}, cap);
  CHECK(d.escalated.empty());
  REQUIRE(d.assigned.size() == 2);
  auto [m, s] = d.assigned.front();
  double best = 1e300;
  for (ServerId c : b.topo.servers()) {
    Placement trial = x;
    trial.assignment[static_cast<std::size_t>(m)] = c;
    best = std::min(best, partial_app_cost(b.router, b.app, b.sched, trial, {}, {}));
  }
  x.assignment[static_cast<std::size_t>(m)] = s;
  CHECK(partial_app_cost(b.router, b.app, b.sched, x, {}, {}) == Approx(best));
}

TEST_CASE("centralized migration moves every item and relays the dump") {
  fx::Bench b(fx::three_level_with_device(), chain(2));
  auto x = b.empty(S(0, 5));
  x.assignment[1] = S(1, 1);
  x.assignment[2] = S(1, 1);
  CapacityView cap(b.topo);
  std::vector<MigrationItem> items{{1, S(1, 1), 1e6, 0, 60}, {2, S(1, 1), 1e6, 0, 60}};
  MigrationParams mp;
  auto d = urmila_migration(b.ctx(), mp, S(3, 1), items, x, cap);
  REQUIRE(d.moves.size() == 2);
  for (auto& mv : d.moves) {
    CHECK(mv.to != S(1, 1));
    auto direct = module_migration_cost(b.router, {}, mp, {}, 1e6, mv.from, mv.to, 0);
    CHECK(mv.cost.time >= direct.time - 1e-12);
  }
  auto r = relayed_migration_cost(b.router, {}, mp, {}, 1e6, S(1, 1), S(3, 1), S(1, 2), 0);
  CHECK(r.time == Approx(internodal_latency(b.router, S(1, 1), S(3, 1)) +
                         internodal_latency(b.router, S(3, 1), S(1, 2)) + mp.i_mig_s +
                         transmission_time(b.router, 1e6, S(1, 1), S(3, 1)) +
                         transmission_time(b.router, 1e6, S(3, 1), S(1, 2))));
}

TEST_CASE("edgeward migration keeps resident modules") {
  fx::Bench b(fx::three_level_with_device(), chain(2));
  CapacityView cap(b.topo);
  std::vector<MigrationItem> items{{1, S(1, 4), 1e6, 0, 60}, {2, S(1, 2), 1e6, 0, 60}};
  auto d = maas_migration_req(b.ctx(), {}, S(1, 2), items, cap, false);
  CHECK(d.stayed == std::vector<int>{2});
  REQUIRE(d.moves.size() == 1);
  CHECK(d.moves[0].to == S(1, 2));
}
