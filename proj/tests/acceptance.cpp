// Acceptance checks. One PASS/FAIL line per criterion; nonzero exit on any FAIL.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fogsim/experiments.hpp"
#include "fogsim/oracle.hpp"
#include "support/random_topology.hpp"
#include "support/route_interpreter.hpp"

using namespace fogsim;

namespace {

const std::vector<PolicyKind> kPolicies{PolicyKind::Proposed, PolicyKind::MAAS, PolicyKind::Urmila};
const std::vector<std::string> kApps{"ECGMH", "EEGTBG"};
const std::vector<double> kHorizons{100, 200, 300, 400};
const std::vector<std::uint64_t> kSeeds{1, 2, 3};

int failures = 0;

void verdict(int n, bool ok, const std::string& what) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", n, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void note(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void note(const char* fmt, ...) {
  std::printf("  ");
  va_list ap;
  va_start(ap, fmt);
  std::vprintf(fmt, ap);
  va_end(ap);
  std::printf("\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// technique -> app -> horizon -> seed -> metrics
using Table = std::map<std::string, std::map<std::string, std::map<double, std::map<std::uint64_t, AppMetrics>>>>;

Table tabulate(const std::vector<MetricsRow>& rows) {
  Table t;
  for (const auto& r : rows) t[r.technique][r.app][r.horizon_s][r.seed] = r.metrics;
  return t;
}

template <class F>
double seed_mean(const std::map<std::uint64_t, AppMetrics>& by_seed, F f) {
  double s = 0;
  for (const auto& [seed, m] : by_seed) s += f(m);
  return s / static_cast<double>(by_seed.size());
}

void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  Scenario base = load_scenario(scenario_path("desk_optimality"));
  double pc = 0, oc = 0;
  int incomplete = 0, instances = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Scenario s = base;
    s.seed = seed;
    RunOptions opt;
    opt.optimality = true;
    const auto& m = run_simulation(s, opt).final_summary().aggregate;
    note("seed %llu: dapt %.6f oracle %.6f gap %.4f over %d instances", static_cast<unsigned long long>(seed),
         m.policy_cost_mean, m.oracle_cost_mean, m.oracle_gap.value_or(NAN), m.oracle_instances);
    pc += m.policy_cost_mean;
    oc += m.oracle_cost_mean;
    incomplete += m.oracle_incomplete;
    instances += m.oracle_instances;
  }
  const double gap = pc / oc - 1.0;
  const double rt = seconds_since(t0);
  note("mean gap %.4f, %d instances, %d incomplete, %.1f s", gap, instances, incomplete, rt);
  char buf[160];
  std::snprintf(buf, sizeof buf, "desk optimality gap %.2f%% <= 25%% over 5 seeds, runtime %.1f s <= 600 s",
                100 * gap, rt);
  verdict(1, instances > 0 && incomplete == 0 && gap <= 0.25 && rt <= 600, buf);
}

void criterion_2() {
  Scenario base = load_scenario(scenario_path("paper_table3"));
  bool ok = true;
  for (int n : {10, 20, 40, 80, 120, 160}) {
    for (std::uint64_t seed : kSeeds) {
      std::map<PolicyKind, double> pdt;
      for (auto p : kPolicies) {
        Scenario s = base;
        s.policy = p;
        s.seed = seed;
        s.devices.count = n;
        s.horizon_s = 20;
        pdt[p] = run_simulation(s).final_summary().aggregate.pdt_s;
      }
      const bool order = pdt[PolicyKind::Proposed] < pdt[PolicyKind::MAAS] &&
                         pdt[PolicyKind::MAAS] < pdt[PolicyKind::Urmila];
      note("devices %3d seed %llu: PDT Proposed %.4f MAAS %.4f Urmila %.4f%s", n,
           static_cast<unsigned long long>(seed), pdt[PolicyKind::Proposed], pdt[PolicyKind::MAAS],
           pdt[PolicyKind::Urmila], order ? "" : "  (out of order)");
      if (n >= 40 && !order) ok = false;
    }
  }
  verdict(2, ok, "PDT Proposed < MAAS < Urmila at every device count >= 40, each of 3 seeds");
}

void criterion_3(const Table& t) {
  bool ok = true;
  struct M {
    const char* name;
    double AppMetrics::*field;
  };
  for (const auto& app : kApps) {
    for (std::uint64_t seed : kSeeds) {
      for (M m : {M{"ARTT", &AppMetrics::artt_s}, M{"AECT", &AppMetrics::aect_j}, M{"AWCT", &AppMetrics::awct}}) {
        double p = t.at("Proposed").at(app).at(400).at(seed).*m.field;
        double a = t.at("MAAS").at(app).at(400).at(seed).*m.field;
        double u = t.at("Urmila").at(app).at(400).at(seed).*m.field;
        bool order = p < a && a < u;
        note("%s seed %llu %s: Proposed %.6f MAAS %.6f Urmila %.6f%s", app.c_str(),
             static_cast<unsigned long long>(seed), m.name, p, a, u, order ? "" : "  (out of order)");
        ok = ok && order;
      }
    }
  }
  verdict(3, ok, "ARTT, AECT, AWCT Proposed < MAAS < Urmila at 400 s for both apps, each of 3 seeds");
}

void criterion_4(const Table& t) {
  bool ok = true;
  for (const auto& app : kApps) {
    auto mean = [&](const char* tech, auto f) { return seed_mean(t.at(tech).at(app).at(400), f); };
    auto mig = [](const AppMetrics& m) { return static_cast<double>(m.migrations); };
    auto tit = [](const AppMetrics& m) { return static_cast<double>(m.tit); };
    double mp = mean("Proposed", mig), ma = mean("MAAS", mig), mu = mean("Urmila", mig);
    double tp = mean("Proposed", tit), ta = mean("MAAS", tit), tu = mean("Urmila", tit);
    note("%s 400 s seed mean migrations: Proposed %.1f MAAS %.1f Urmila %.1f", app.c_str(), mp, ma, mu);
    note("%s 400 s seed mean TIT: Proposed %.1f MAAS %.1f Urmila %.1f", app.c_str(), tp, ta, tu);
    for (std::uint64_t seed : kSeeds) {
      note("  seed %llu migrations %ld/%ld/%ld TIT %ld/%ld/%ld", static_cast<unsigned long long>(seed),
           t.at("Proposed").at(app).at(400).at(seed).migrations, t.at("MAAS").at(app).at(400).at(seed).migrations,
           t.at("Urmila").at(app).at(400).at(seed).migrations, t.at("Proposed").at(app).at(400).at(seed).tit,
           t.at("MAAS").at(app).at(400).at(seed).tit, t.at("Urmila").at(app).at(400).at(seed).tit);
    }
    ok = ok && mp < ma && ma <= mu && tp < ta && ta <= tu;
  }
  for (const auto& tech : {"Proposed", "MAAS", "Urmila"}) {
    for (double h : kHorizons) {
      auto tit = [](const AppMetrics& m) { return static_cast<double>(m.tit); };
      double e = seed_mean(t.at(tech).at("EEGTBG").at(h), tit);
      double c = seed_mean(t.at(tech).at("ECGMH").at(h), tit);
      if (!(e < c)) {
        note("%s %.0f s: TIT EEGTBG %.1f not below ECGMH %.1f", tech, h, e, c);
        ok = false;
      }
    }
  }
  verdict(4, ok,
          "seed-mean migrations and TIT Proposed < MAAS <= Urmila; TIT(EEGTBG) < TIT(ECGMH) per technique and horizon");
}

void criterion_5(const Table& t) {
  bool ok = true;
  struct M {
    const char* name;
    double AppMetrics::*field;
  };
  for (const auto& app : kApps) {
    for (std::uint64_t seed : kSeeds) {
      for (M m : {M{"CMT", &AppMetrics::cmt_s}, M{"CMEC", &AppMetrics::cmec_j}, M{"CMWC", &AppMetrics::cmwc}}) {
        for (const auto& tech : {"Proposed", "MAAS", "Urmila"}) {
          for (std::size_t i = 1; i < kHorizons.size(); ++i) {
            double a = t.at(tech).at(app).at(kHorizons[i - 1]).at(seed).*m.field;
            double b = t.at(tech).at(app).at(kHorizons[i]).at(seed).*m.field;
            if (b < a) {
              note("%s %s seed %llu %s decreases %.0f->%.0f s", tech, app.c_str(),
                   static_cast<unsigned long long>(seed), m.name, kHorizons[i - 1], kHorizons[i]);
              ok = false;
            }
          }
        }
        double prev_p = 0, prev_u = 0;
        for (double h : kHorizons) {
          double p = t.at("Proposed").at(app).at(h).at(seed).*m.field;
          double u = t.at("Urmila").at(app).at(h).at(seed).*m.field;
          if (!(u - prev_u > p - prev_p)) {
            note("%s seed %llu %s: Urmila step %.4f not above Proposed step %.4f at %.0f s", app.c_str(),
                 static_cast<unsigned long long>(seed), m.name, u - prev_u, p - prev_p, h);
            ok = false;
          }
          prev_p = p;
          prev_u = u;
        }
      }
    }
    note("%s seed 1 CMT by horizon: Proposed %.2f %.2f %.2f %.2f, Urmila %.2f %.2f %.2f %.2f", app.c_str(),
         t.at("Proposed").at(app).at(100).at(1).cmt_s, t.at("Proposed").at(app).at(200).at(1).cmt_s,
         t.at("Proposed").at(app).at(300).at(1).cmt_s, t.at("Proposed").at(app).at(400).at(1).cmt_s,
         t.at("Urmila").at(app).at(100).at(1).cmt_s, t.at("Urmila").at(app).at(200).at(1).cmt_s,
         t.at("Urmila").at(app).at(300).at(1).cmt_s, t.at("Urmila").at(app).at(400).at(1).cmt_s);
  }
  verdict(5, ok, "CMT, CMEC, CMWC non-decreasing; Urmila step growth above Proposed at every step");
}

void criterion_6(const Table& t) {
  Scenario base = load_scenario(scenario_path("paper_table3"));
  bool ok = true;
  for (const auto& app : kApps) {
    double fr = 0;
    for (std::uint64_t seed : kSeeds) {
      for (auto p : kPolicies) {
        Scenario s = cell_scenario(base, p, app, 400, seed, 0.05, std::nullopt);
        RunResult r;
        try {
          r = run_simulation(s);
        } catch (const std::exception& e) {
          note("%s %s seed %llu did not complete: %s", to_string(p), app.c_str(),
               static_cast<unsigned long long>(seed), e.what());
          ok = false;
          continue;
        }
        const auto& m = r.final_summary().aggregate;
        if (!r.all_placed) {
          note("%s %s seed %llu: not every application placed at horizon", to_string(p), app.c_str(),
               static_cast<unsigned long long>(seed));
          ok = false;
        }
        if (p == PolicyKind::Proposed) {
          fr += static_cast<double>(m.migrations);
          note("%s seed %llu Proposed with recovery: migrations %ld, failures %ld", app.c_str(),
               static_cast<unsigned long long>(seed), m.migrations, m.migration_failures);
        }
      }
    }
    fr /= static_cast<double>(kSeeds.size());
    auto mig = [](const AppMetrics& m) { return static_cast<double>(m.migrations); };
    double ma = seed_mean(t.at("MAAS").at(app).at(400), mig);
    double mu = seed_mean(t.at("Urmila").at(app).at(400), mig);
    note("%s seed mean migrations: Proposed with recovery %.1f, MAAS %.1f, Urmila %.1f (p = 0)", app.c_str(), fr, ma,
         mu);
    ok = ok && fr < ma && fr < mu;
  }
  verdict(6, ok, "p = 0.05: all runs complete and fully placed; migrations with recovery below both baselines");
}

void criterion_7(const std::vector<MetricsRow>& rows, const Table& t) {
  bool ok = true;
  std::mt19937_64 rng(77);
  DeviceEnergyProfile prof;
  int pairs = 0, mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Topology topo = fx::random_topology(rng);
    Router r(topo);
    std::vector<ServerId> ids;
    for (const auto& [id, n] : topo.nodes()) ids.push_back(id);
    for (ServerId a : ids) {
      if (internodal_latency(r, a, a) != 0.0 || transmission_time(r, 1e6, a, a) != 0.0) ++mismatches;
    }
    for (int k = 0; k < 3; ++k) {
      ServerId a = ids[rng() % ids.size()], b = ids[rng() % ids.size()];
      auto steps = oracle::route(topo, a, b);
      int bound = 2 * (topo.max_fog_level() + 1) + static_cast<int>(topo.ids_at_level(a.level).size());
      auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y)); };
      if (static_cast<int>(steps.size()) > bound || walk_route(topo, a, b).hops != static_cast<int>(steps.size()) ||
          !close(internodal_latency(r, a, b), oracle::latency(topo, a, b)) ||
          !close(transmission_time(r, 1e6, a, b), oracle::transmission(topo, 1e6, a, b)) ||
          !close(transmission_energy(r, prof, 1e6, a, b), oracle::tx_energy(topo, prof, 1e6, a, b))) {
        ++mismatches;
      }
      ++pairs;
    }
  }
  note("router vs interpreter: %d pairs on 1000 topologies, %d mismatches", pairs, mismatches);
  ok = ok && mismatches == 0;

  // Weight degeneracies and B&B against enumeration; at most 11^4 assignments.
  int bb_bad = 0, bb_n = 0, deg_bad = 0;
  Topology base = fx::three_level_with_device();
  for (int trial = 0; trial < 40; ++trial) {
    int k = 1 + static_cast<int>(rng() % 4);
    std::vector<fx::F> flows;
    for (int b = 1; b < k + 2; ++b) {
      flows.push_back({static_cast<int>(rng() % static_cast<std::uint64_t>(b)), b,
                       static_cast<double>(50 + rng() % 2000), static_cast<double>(1 + rng() % 100) * 1e5});
    }
    fx::Bench bench(base, fx::dag(k + 2, flows, {0, k + 1}));
    std::vector<ServerId> servers = bench.topo.servers();
    OracleInput in;
    in.router = &bench.router;
    in.dag = &bench.app;
    in.schedules = &bench.sched;
    in.device = fx::S(0, 5);
    in.servers = servers;
    for (ServerId s : servers) {
      if (rng() % 2) in.free_slots[s] = 1 + static_cast<int>(rng() % 2);
    }
    auto bb = optimal_placement(in);
    auto ex = exhaustive_placement(in);
    ++bb_n;
    if (!bb.complete || bb.feasible != ex.feasible ||
        (ex.feasible && std::abs(bb.cost - ex.cost) > 1e-9 * std::max(1.0, ex.cost))) {
      ++bb_bad;
    }
    if (!ex.feasible) continue;
    const Placement& x = ex.placement;
    auto time = app_cost(bench.router, bench.app, bench.sched, x, {1.0, 0.0}, prof);
    auto energy = app_cost(bench.router, bench.app, bench.sched, x, {0.0, 1.0}, prof);
    if (std::abs(time.total - time.time) > 1e-12 || std::abs(energy.total - energy.energy) > 1e-12) ++deg_bad;
  }
  note("B&B vs enumeration: %d instances, %d disagree; weight degeneracy mismatches %d", bb_n, bb_bad, deg_bad);
  ok = ok && bb_bad == 0 && deg_bad == 0;

  // CMWC identity over every sweep row.
  int id_bad = 0;
  Scenario sc = load_scenario(scenario_path("paper_table3"));
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    double want = sc.weights.w1 * m.cmt_s + sc.weights.w2 * m.cmec_j;
    if (std::abs(m.cmwc - want) > 1e-9 * std::max(1e-300, std::abs(want))) ++id_bad;
  }
  note("CMWC identity: %d of %zu rows off", id_bad, rows.size());
  ok = ok && id_bad == 0;

  // Constraints on accepted placements and replay, one full-scale run per policy.
  int violations = 0, replay_bad = 0;
  for (auto p : kPolicies) {
    Scenario s = sc;
    s.policy = p;
    s.horizon_s = 100;
    std::ostringstream l1, l2;
    RunOptions o1, o2;
    o1.events = &l1;
    o2.events = &l2;
    auto a = run_simulation(s, o1);
    auto b = run_simulation(s, o2);
    violations += static_cast<int>(a.violations.size());
    if (l1.str() != l2.str() || to_csv(rows_for_run(s, a.final_summary()), false) !=
                                    to_csv(rows_for_run(s, b.final_summary()), false)) {
      ++replay_bad;
    }
  }
  note("C1-C3 violations %d; replays differing %d", violations, replay_bad);
  ok = ok && violations == 0 && replay_bad == 0;
  (void)t;
  verdict(7, ok, "property suite");
}

}  // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  criterion_1();
  criterion_2();

  ExperimentMatrix m;
  m.scenario = "paper_table3";
  m.policies = kPolicies;
  m.apps = kApps;
  m.horizons = kHorizons;
  m.seeds = kSeeds;
  ExperimentOutput out = run_experiments(m);
  for (const auto& e : out.errors) note("sweep cell %s failed: %s", e.cell.c_str(), e.message.c_str());
  if (!out.errors.empty()) {
    for (int c = 3; c <= 7; ++c) verdict(c, false, "full-scale sweep had failing cells");
    return 1;
  }
  Table t = tabulate(out.rows);
  criterion_3(t);
  criterion_4(t);
  criterion_5(t);
  criterion_6(t);
  criterion_7(out.rows, t);
  std::printf("%d of 7 criteria failed, %.1f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
