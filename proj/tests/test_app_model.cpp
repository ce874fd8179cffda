#include <doctest.h>

#include <random>

#include "support/fixtures.hpp"

using namespace fogsim;

TEST_CASE("diamond dag schedules") {
  auto d = fx::dag(5, {{0, 1, 1, 1}, {0, 2, 1, 1}, {1, 3, 1, 1}, {2, 3, 1, 1}, {3, 4, 1, 1}});
  ScheduleSet s = build_schedules(d);
  REQUIRE(s.count() == 4);
  CHECK(s.schedules[0] == std::vector<int>{0});
  CHECK(s.schedules[1] == std::vector<int>{1, 2});
  CHECK(s.schedules[2] == std::vector<int>{3});
  CHECK(s.schedules[3] == std::vector<int>{4});
}

TEST_CASE("degenerate dags") {
  CHECK(build_schedules(fx::dag(1, {})).count() == 1);
  auto chain = fx::dag(6, {{0, 1, 1, 1}, {1, 2, 1, 1}, {2, 3, 1, 1}, {3, 4, 1, 1}, {4, 5, 1, 1}});
  auto s = build_schedules(chain);
  CHECK(s.count() == 6);
  for (const auto& g : s.schedules) CHECK(g.size() == 1);
}

TEST_CASE("cycle is rejected") {
  auto d = fx::dag(3, {{0, 1, 1, 1}, {1, 2, 1, 1}, {2, 0, 1, 1}});
  CHECK_THROWS_AS(build_schedules(d), CycleError);
}

TEST_CASE("upward rank on a two module chain") {
  auto d = fx::dag(2, {{0, 1, 500, 0}});
  auto r = upward_rank(d, {0.5, 0.5}, {0.0});
  CHECK(r[1] == doctest::Approx(0.5));
  CHECK(r[0] == doctest::Approx(1.0));
  auto only = fx::dag(1, {});
  CHECK(upward_rank(only, {0.3}, {})[0] == doctest::Approx(0.3));
}

TEST_CASE("heavier sibling is ordered first") {
  auto d = fx::dag(5, {{0, 1, 1, 1}, {0, 2, 1, 1}, {1, 3, 1, 1}, {2, 3, 1, 1}, {3, 4, 1, 1}});
  auto r = upward_rank(d, {1, 2.0, 1.0, 1, 1}, {0, 0, 0, 0, 0});
  auto order = priority_order(build_schedules(d), r);
  CHECK(order == std::vector<int>{0, 1, 2, 3, 4});
  r = upward_rank(d, {1, 1.0, 2.0, 1, 1}, {0, 0, 0, 0, 0});
  CHECK(priority_order(build_schedules(d), r) == std::vector<int>{0, 2, 1, 3, 4});
}

TEST_CASE("random dags: orders respect predecessors and rank is monotone") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    int n = 2 + static_cast<int>(rng() % 9);
    std::vector<fx::F> flows;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (rng() % 3 == 0) flows.push_back({a, b, 1, 1});
      }
    }
    auto d = fx::dag(n, flows);
    auto s = build_schedules(d);
    std::vector<double> exe(static_cast<std::size_t>(n)), tra(flows.size());
    for (auto& e : exe) e = static_cast<double>(rng() % 100) / 10.0;
    for (auto& t : tra) t = static_cast<double>(rng() % 100) / 10.0;
    auto r = upward_rank(d, exe, tra);
    auto order = priority_order(s, r);
    CHECK(order.size() == static_cast<std::size_t>(n));
    std::vector<int> pos(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < order.size(); ++i) pos[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
    for (const auto& f : d.flows) CHECK(pos[static_cast<std::size_t>(f.from)] < pos[static_cast<std::size_t>(f.to)]);
    for (const auto& f : d.flows) {
      CHECK(s.to_value[static_cast<std::size_t>(f.to)] > s.to_value[static_cast<std::size_t>(f.from)]);
    }
    int v = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    auto heavier = exe;
    heavier[static_cast<std::size_t>(v)] += 5.0;
    auto r2 = upward_rank(d, heavier, tra);
    for (int i = 0; i < n; ++i) CHECK(r2[static_cast<std::size_t>(i)] >= r[static_cast<std::size_t>(i)] - 1e-12);
  }
}

TEST_CASE("bundled templates") {
  auto e = builtin_app("ECGMH");
  auto g = builtin_app("EEGTBG");
  CHECK(e.sensor_interval_s == doctest::Approx(0.010));
  CHECK(g.sensor_interval_s == doctest::Approx(0.015));
  CHECK(e.modules.front().pinned_to_device);
  CHECK(e.modules.back().pinned_to_device);
  auto round = app_from_json(app_to_json(e));
  CHECK(round.modules.size() == e.modules.size());
  CHECK(round.flows.size() == e.flows.size());
  CHECK_THROWS_AS(builtin_app("nope"), AppError);
}
