#include <doctest.h>

#include <cmath>
#include <random>

#include "fogsim/oracle.hpp"
#include "support/fixtures.hpp"

using namespace fogsim;
using fx::S;
using doctest::Approx;

namespace {

AppDag random_app(std::mt19937_64& rng, int placeable) {
  const int n = placeable + 2;
  std::vector<fx::F> flows;
  auto mi = [&] { return static_cast<double>(50 + rng() % 2000); };
  auto bits = [&] { return static_cast<double>(1 + rng() % 100) * 1e5; };
  for (int b = 1; b < n; ++b) {
    int a = static_cast<int>(rng() % static_cast<std::uint64_t>(b));
    flows.push_back({a, b, mi(), bits()});
    if (b > 1 && rng() % 3 == 0) {
      int c = static_cast<int>(rng() % static_cast<std::uint64_t>(b));
      if (c != a) flows.push_back({c, b, mi(), bits()});
    }
  }
  return fx::dag(n, flows, {0, n - 1});
}

}  // namespace

TEST_CASE("branch and bound equals exhaustive search") {
  std::mt19937_64 rng(99);
  std::vector<ServerId> pool;
  for (ServerId s : fx::three_level().servers()) pool.push_back(s);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    int k = 1 + static_cast<int>(rng() % 5);
    std::vector<ServerId> servers = pool;
    std::shuffle(servers.begin(), servers.end(), rng);
    std::size_t m = 2 + rng() % 4;
    while (std::pow(static_cast<double>(m), k) > 1e5) --m;
    servers.resize(m);
    fx::Bench b(fx::three_level_with_device(), random_app(rng, k));
    OracleInput in;
    in.router = &b.router;
    in.dag = &b.app;
    in.schedules = &b.sched;
    in.weights = {0.3 + 0.1 * static_cast<double>(rng() % 5), 0.0};
    in.weights.w2 = 1.0 - in.weights.w1;
    in.device = S(0, 5);
    in.servers = servers;
    for (ServerId s : servers) {
      if (rng() % 2) in.free_slots[s] = 1 + static_cast<int>(rng() % 2);
    }
    auto bb = optimal_placement(in);
    auto ex = exhaustive_placement(in);
    REQUIRE(bb.complete);
    CHECK(bb.feasible == ex.feasible);
    if (!ex.feasible) continue;
    CHECK(bb.cost == Approx(ex.cost).epsilon(1e-9));
    auto cost = app_cost(b.router, b.app, b.sched, bb.placement, in.weights, in.profile);
    CHECK(cost.total == Approx(bb.cost).epsilon(1e-9));
    ++checked;
  }
  CHECK(checked >= 40);
}

TEST_CASE("oracle is never worse than the distributed placement") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    Topology t = fx::three_level_with_device();
    t.add_cluster_link(S(1, 1), S(1, 2));
    fx::Bench b(std::move(t), random_app(rng, 3 + static_cast<int>(rng() % 2)));
    for (int i = 0; i < 6; ++i) b.topo.occupy_slot(S(1, 1), 0.0, false);

    Placement x = b.empty(S(0, 5));
    CapacityView cap(b.topo);
    std::vector<int> todo;
    for (int m = 1; m + 1 < b.app.module_count(); ++m) todo.push_back(m);
    ServerId at = S(1, 1);
    while (!todo.empty()) {
      auto d = dapt_place(b.ctx(), at, x, todo, cap);
      for (auto& [m, s] : d.assigned) {
        x.assignment[static_cast<std::size_t>(m)] = s;
        cap.take(s, 0.0);
      }
      todo = d.escalated;
      if (!todo.empty()) at = *b.topo.node(at).parent;
    }
    double dapt = app_cost(b.router, b.app, b.sched, x, {}, {}).total;

    OracleInput in;
    in.router = &b.router;
    in.dag = &b.app;
    in.schedules = &b.sched;
    in.device = S(0, 5);
    for (ServerId s : b.topo.servers()) {
      in.servers.push_back(s);
      in.free_slots[s] = b.topo.node(s).free_slots();
    }
    auto best = optimal_placement(in);
    REQUIRE(best.complete);
    REQUIRE(best.feasible);
    CHECK(best.cost <= dapt + 1e-12);
  }
}

TEST_CASE("budget exhaustion is reported") {
  std::mt19937_64 rng(1);
  fx::Bench b(fx::three_level_with_device(), random_app(rng, 5));
  OracleInput in;
  in.router = &b.router;
  in.dag = &b.app;
  in.schedules = &b.sched;
  in.device = S(0, 5);
  in.servers = b.topo.servers();
  in.node_budget = 10;
  auto r = optimal_placement(in);
  CHECK_FALSE(r.complete);
}

TEST_CASE("no capacity anywhere is infeasible") {
  std::mt19937_64 rng(3);
  fx::Bench b(fx::three_level_with_device(), random_app(rng, 2));
  OracleInput in;
  in.router = &b.router;
  in.dag = &b.app;
  in.schedules = &b.sched;
  in.device = S(0, 5);
  in.servers = {S(1, 1), S(1, 2)};
  in.free_slots = {{S(1, 1), 0}, {S(1, 2), 0}};
  auto r = optimal_placement(in);
  CHECK(r.complete);
  CHECK_FALSE(r.feasible);
}
