#include "fogsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

namespace fogsim {

using nlohmann::json;

ExperimentMatrix matrix_from_json(const json& j) {
  ExperimentMatrix m;
  try {
    m.scenario = j.at("scenario").get<std::string>();
    for (const auto& p : j.at("policies")) m.policies.push_back(parse_policy(p.get<std::string>()));
    m.apps = j.at("apps").get<std::vector<std::string>>();
    m.horizons = j.at("horizons").get<std::vector<double>>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.optimality = j.value("optimality", false);
    m.failure_p = j.value("failure_p", 0.0);
    if (j.contains("devices")) m.devices = j.at("devices").get<int>();
    m.threads = j.value("threads", 0);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("matrix: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("matrix: ") + e.what());
  }
  if (m.policies.empty() || m.apps.empty() || m.horizons.empty() || m.seeds.empty()) {
    throw ScenarioError("matrix: policies, apps, horizons and seeds must be non-empty");
  }
  return m;
}

ExperimentMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open matrix " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("matrix " + path + ": " + e.what());
  }
  return matrix_from_json(j);
}

Scenario cell_scenario(const Scenario& base, PolicyKind policy, const std::string& app,
                       double horizon, std::uint64_t seed, double failure_p,
                       std::optional<int> devices) {
  Scenario s = base;
  s.policy = policy;
  s.devices.apps = {app};
  s.horizon_s = horizon;
  s.seed = seed;
  s.failures.migration_failure_p = failure_p;
  if (devices) {
    s.devices.count = *devices;
    s.devices.positions.clear();
  }
  return s;
}

std::vector<MetricsRow> rows_for_run(const Scenario& s, const MetricsSummary& m) {
  std::vector<MetricsRow> out;
  for (const auto& [app, am] : m.per_app) {
    MetricsRow r;
    r.technique = to_string(s.policy);
    r.app = app;
    r.horizon_s = m.horizon_s;
    r.seed = s.seed;
    r.metrics = am;
    r.failure_recovery = s.failures.migration_failure_p > 0 && s.policy == PolicyKind::Proposed;
    out.push_back(r);
  }
  return out;
}

ExperimentOutput run_experiments(const ExperimentMatrix& m) {
  Scenario base = load_scenario(scenario_path(m.scenario));
  const double max_h = *std::max_element(m.horizons.begin(), m.horizons.end());

  struct Cell {
    PolicyKind policy;
    std::string app;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (auto p : m.policies) {
    for (const auto& a : m.apps) {
      for (auto s : m.seeds) cells.push_back({p, a, s});
    }
  }

  ExperimentOutput out;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      std::ostringstream key;
      key << to_string(c.policy) << '/' << c.app << '/' << c.seed;
      try {
        Scenario s = cell_scenario(base, c.policy, c.app, max_h, c.seed, m.failure_p, m.devices);
        RunOptions opt;
        opt.optimality = m.optimality;
        opt.checkpoints = m.horizons;
        RunResult res = run_simulation(s, opt);
        std::vector<MetricsRow> rows;
        for (double h : m.horizons) {
          const MetricsSummary& snap = res.at(h);
          MetricsRow r;
          r.technique = to_string(c.policy);
          r.app = c.app;
          r.horizon_s = h;
          r.seed = c.seed;
          auto it = snap.per_app.find(c.app);
          r.metrics = it != snap.per_app.end() ? it->second : snap.aggregate;
          r.failure_recovery = m.failure_p > 0 && c.policy == PolicyKind::Proposed;
          rows.push_back(r);
        }
        std::lock_guard<std::mutex> lock(mu);
        out.rows.insert(out.rows.end(), rows.begin(), rows.end());
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        out.errors.push_back({key.str(), e.what()});
      }
    }
  };
  unsigned n = m.threads > 0 ? static_cast<unsigned>(m.threads) : std::thread::hardware_concurrency();
  n = std::max(1u, std::min<unsigned>(n, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::sort(out.rows.begin(), out.rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return std::tie(a.technique, a.app, a.horizon_s, a.seed) <
           std::tie(b.technique, b.app, b.horizon_s, b.seed);
  });
  std::sort(out.errors.begin(), out.errors.end(),
            [](const CellError& a, const CellError& b) { return a.cell < b.cell; });
  return out;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string csv_header(bool with_gap) {
  std::string h =
      "technique,app,horizon_s,seed,pdt_s,artt_s,aect_j,awct,migrations,cmt_s,cmec_j,cmwc,tit,fr_mode";
  if (with_gap) h += ",oracle_gap";
  return h;
}

std::string csv_row(const MetricsRow& r, bool with_gap) {
  const AppMetrics& m = r.metrics;
  std::ostringstream o;
  o << r.technique << ',' << r.app << ',' << num(r.horizon_s) << ',' << r.seed << ','
    << num(m.pdt_s) << ',' << num(m.artt_s) << ',' << num(m.aect_j) << ',' << num(m.awct) << ','
    << m.migrations << ',' << num(m.cmt_s) << ',' << num(m.cmec_j) << ',' << num(m.cmwc) << ','
    << m.tit << ',' << (r.failure_recovery ? "on" : "off");
  if (with_gap) o << ',' << (m.oracle_gap ? num(*m.oracle_gap) : std::string());
  return o.str();
}

std::string to_csv(const std::vector<MetricsRow>& rows, bool with_gap) {
  std::string s = csv_header(with_gap) + "\n";
  for (const auto& r : rows) s += csv_row(r, with_gap) + "\n";
  return s;
}

}  // namespace fogsim
