#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "fogsim/experiments.hpp"
#include "support/fixtures.hpp"

using namespace fogsim;

namespace {

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("bundled table scenario materializes 36 fog servers, a cloud and 80 devices") {
  Scenario s = load_scenario(scenario_path("paper_table3"));
  Materialized m = materialize(s);
  int fog = 0, cloud = 0;
  for (const auto& n : m.topology.nodes) {
    if (n.id.level == s.max_fog_level + 1) {
      ++cloud;
    } else {
      ++fog;
    }
  }
  CHECK(fog == 36);
  CHECK(cloud == 1);
  CHECK(m.devices.size() == 80);
  CHECK(s.weights.w1 == 0.5);
  CHECK(s.weights.w2 == 0.5);
  Topology t = Topology::build(m.topology);
  CHECK(t.ids_at_level(1).size() == 30);
  CHECK(t.ids_at_level(2).size() == 5);
  CHECK(t.ids_at_level(3).size() == 1);
}

TEST_CASE("missing cloud is a named error") {
  auto j = nlohmann::json::parse(effective_config(load_scenario(scenario_path("small_hierarchy"))));
  j.erase("cloud");
  CHECK_THROWS_WITH_AS(scenario_from_json(j).validate(), doctest::Contains("missing cloud"), ScenarioError);
}

TEST_CASE("weights need not sum to one") {
  auto j = nlohmann::json::parse(effective_config(load_scenario(scenario_path("small_hierarchy"))));
  j["weights"] = {{"w1", 0.7}, {"w2", 0.5}};
  Scenario s = scenario_from_json(j);
  CHECK_NOTHROW(s.validate());
  CHECK(s.weights.w1 == 0.7);
  j["weights"] = {{"w1", 1.2}, {"w2", 0.5}};
  CHECK_THROWS(scenario_from_json(j).validate());
}

TEST_CASE("unknown policy and malformed json are rejected") {
  auto j = nlohmann::json::parse(effective_config(load_scenario(scenario_path("small_hierarchy"))));
  j["policy"] = "greedy";
  CHECK_THROWS(scenario_from_json(j));
  CHECK_THROWS(load_scenario("/nonexistent/scenario.json"));
}

TEST_CASE("effective config is byte stable and determines the run") {
  Scenario s = load_scenario(scenario_path("small_hierarchy"));
  std::string a = effective_config(s);
  CHECK(a == effective_config(load_scenario(scenario_path("small_hierarchy"))));
  Scenario back = scenario_from_json(nlohmann::json::parse(a));
  CHECK(effective_config(back) == a);
  auto r1 = run_simulation(s);
  auto r2 = run_simulation(back);
  CHECK(to_csv(rows_for_run(s, r1.final_summary()), false) ==
        to_csv(rows_for_run(back, r2.final_summary()), false));
}

TEST_CASE("sweep of 3 policies, 2 apps, 4 horizons and 3 seeds gives 72 rows") {
  ExperimentMatrix m;
  m.scenario = "paper_table3";
  m.policies = {PolicyKind::Proposed, PolicyKind::MAAS, PolicyKind::Urmila};
  m.apps = {"ECGMH", "EEGTBG"};
  m.horizons = {5, 10, 15, 20};
  m.seeds = {1, 2, 3};
  m.devices = 10;
  auto out = run_experiments(m);
  CHECK(out.errors.empty());
  REQUIRE(out.rows.size() == 72);
  std::string csv = to_csv(out.rows, false);
  CHECK(count_lines(csv) == 73);
  CHECK(csv.rfind(csv_header(false), 0) == 0);
  CHECK(csv_header(false).find("oracle_gap") == std::string::npos);
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    const auto& a = out.rows[i - 1];
    const auto& b = out.rows[i];
    CHECK(std::tie(a.technique, a.app, a.horizon_s, a.seed) < std::tie(b.technique, b.app, b.horizon_s, b.seed));
  }
  m.threads = 1;
  CHECK(to_csv(run_experiments(m).rows, false) == csv);
}

TEST_CASE("optimality adds the oracle gap column") {
  ExperimentMatrix m;
  m.scenario = "desk_optimality";
  m.policies = {PolicyKind::Proposed};
  m.apps = {"ECGMH"};
  m.horizons = {5};
  m.seeds = {1};
  m.optimality = true;
  auto out = run_experiments(m);
  REQUIRE(out.rows.size() == 1);
  CHECK(out.rows[0].metrics.oracle_gap.has_value());
  std::string header = csv_header(true);
  CHECK(header.find("oracle_gap") != std::string::npos);
  std::string row = csv_row(out.rows[0], true);
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
}

TEST_CASE("matrix json") {
  auto j = nlohmann::json::parse(R"({"scenario": "small_hierarchy", "policies": ["Proposed", "MAAS"],
    "apps": ["ECGMH"], "horizons": [5], "seeds": [1, 2]})");
  auto m = matrix_from_json(j);
  CHECK(m.policies.size() == 2);
  CHECK(m.seeds == std::vector<std::uint64_t>{1, 2});
  auto out = run_experiments(m);
  CHECK(out.rows.size() == 4);
}

TEST_CASE("a failing cell is recorded and the sweep continues") {
  ExperimentMatrix m;
  m.scenario = "small_hierarchy";
  m.policies = {PolicyKind::Proposed};
  m.apps = {"ECGMH", "NOPE"};
  m.horizons = {2};
  m.seeds = {1};
  auto out = run_experiments(m);
  CHECK(out.rows.size() == 1);
  CHECK(out.errors.size() == 1);
}

TEST_CASE("failure recovery flag only for the proposed policy") {
  Scenario base = load_scenario(scenario_path("small_hierarchy"));
  ExperimentMatrix m;
  m.scenario = "small_hierarchy";
  m.policies = {PolicyKind::Proposed, PolicyKind::MAAS};
  m.apps = {"ECGMH"};
  m.horizons = {2};
  m.seeds = {1};
  m.failure_p = 0.05;
  auto out = run_experiments(m);
  REQUIRE(out.rows.size() == 2);
  for (const auto& r : out.rows) CHECK(r.failure_recovery == (r.technique == "Proposed"));
  Scenario c = cell_scenario(base, PolicyKind::MAAS, "EEGTBG", 7, 3, 0.05, 2);
  CHECK(c.horizon_s == 7);
  CHECK(c.seed == 3);
  CHECK(c.devices.count == 2);
  CHECK(c.devices.apps == std::vector<std::string>{"EEGTBG"});
}
