#include "fogsim/app_model.hpp"

#include <algorithm>
#include <numeric>

namespace fogsim {

using nlohmann::json;

int AppDag::find_module(const std::string& name) const {
  for (int i = 0; i < module_count(); ++i) {
    if (modules[static_cast<std::size_t>(i)].name == name) return i;
  }
  return -1;
}

std::vector<int> AppDag::incoming(int module) const {
  std::vector<int> out;
  for (int f = 0; f < static_cast<int>(flows.size()); ++f) {
    if (flows[static_cast<std::size_t>(f)].to == module) out.push_back(f);
  }
  return out;
}

std::vector<int> AppDag::outgoing(int module) const {
  std::vector<int> out;
  for (int f = 0; f < static_cast<int>(flows.size()); ++f) {
    if (flows[static_cast<std::size_t>(f)].from == module) out.push_back(f);
  }
  return out;
}

std::vector<int> AppDag::predecessors(int module) const {
  std::vector<int> out;
  for (int f : incoming(module)) out.push_back(flows[static_cast<std::size_t>(f)].from);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> AppDag::successors(int module) const {
  std::vector<int> out;
  for (int f : outgoing(module)) out.push_back(flows[static_cast<std::size_t>(f)].to);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void AppDag::validate() const {
  if (modules.empty()) throw AppError("application '" + app_id + "' has no modules");
  for (const auto& f : flows) {
    if (f.from < 0 || f.from >= module_count() || f.to < 0 || f.to >= module_count()) {
      throw AppError("flow references an unknown module in '" + app_id + "'");
    }
    if (f.from == f.to) throw AppError("self-loop flow in '" + app_id + "'");
    if (f.instructions_mi < 0 || f.payload_bits < 0) {
      throw AppError("negative flow size in '" + app_id + "'");
    }
  }
  for (const auto& m : modules) {
    if (m.container_ram_mb < 0) throw AppError("negative RAM for module " + m.name);
  }
  if (sensor_interval_s < 0) throw AppError("negative sensor interval");
  build_schedules(*this);
}

ScheduleSet build_schedules(const AppDag& dag) {
  const int n = dag.module_count();
  std::vector<int> indegree(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> succ(static_cast<std::size_t>(n));
  for (const auto& f : dag.flows) {
    ++indegree[static_cast<std::size_t>(f.to)];
    succ[static_cast<std::size_t>(f.from)].push_back(f.to);
  }
  ScheduleSet out;
  out.to_value.assign(static_cast<std::size_t>(n), 1);
  // Kahn's algorithm in BFS order; TO is the longest path from any source.
  std::vector<int> queue;
  for (int v = 0; v < n; ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
  }
  std::size_t head = 0;
  while (head < queue.size()) {
    int v = queue[head++];
    for (int w : succ[static_cast<std::size_t>(v)]) {
      auto& tw = out.to_value[static_cast<std::size_t>(w)];
      tw = std::max(tw, out.to_value[static_cast<std::size_t>(v)] + 1);
      if (--indegree[static_cast<std::size_t>(w)] == 0) queue.push_back(w);
    }
  }
  if (static_cast<int>(queue.size()) != n) {
    throw CycleError("application '" + dag.app_id + "' contains a cycle");
  }
  int depth = n == 0 ? 0 : *std::max_element(out.to_value.begin(), out.to_value.end());
  out.schedules.resize(static_cast<std::size_t>(depth));
  for (int v = 0; v < n; ++v) {
    out.schedules[static_cast<std::size_t>(out.to_value[static_cast<std::size_t>(v)] - 1)]
        .push_back(v);
  }
  return out;
}

std::vector<double> upward_rank(const AppDag& dag, const std::vector<double>& exe_cost,
                                const std::vector<double>& flow_cost) {
  ScheduleSet s = build_schedules(dag);
  std::vector<double> rank(static_cast<std::size_t>(dag.module_count()), 0.0);
  for (int t = s.count() - 1; t >= 0; --t) {
    for (int v : s.schedules[static_cast<std::size_t>(t)]) {
      double best = 0.0;
      for (int f : dag.outgoing(v)) {
        int z = dag.flows[static_cast<std::size_t>(f)].to;
        best = std::max(best, flow_cost[static_cast<std::size_t>(f)] +
                                  rank[static_cast<std::size_t>(z)]);
      }
      rank[static_cast<std::size_t>(v)] = exe_cost[static_cast<std::size_t>(v)] + best;
    }
  }
  return rank;
}

std::vector<int> priority_order(const ScheduleSet& schedules, const std::vector<double>& rank) {
  std::vector<int> out;
  for (auto group : schedules.schedules) {
    std::stable_sort(group.begin(), group.end(), [&](int a, int b) {
      double ra = rank[static_cast<std::size_t>(a)];
      double rb = rank[static_cast<std::size_t>(b)];
      if (ra != rb) return ra > rb;
      return a < b;
    });
    out.insert(out.end(), group.begin(), group.end());
  }
  return out;
}

AppDag app_from_json(const json& j) {
  AppDag dag;
  dag.app_id = j.at("app_id").get<std::string>();
  dag.sensor_interval_s = j.at("sensor_interval_s").get<double>();
  for (const auto& m : j.at("modules")) {
    Module mod;
    mod.name = m.at("name").get<std::string>();
    mod.pinned_to_device = m.value("pinned", false);
    mod.container_ram_mb = m.value("ram_mb", 0.0);
    if (m.contains("max_tolerable_delay_s")) {
      mod.max_tolerable_delay_s = m.at("max_tolerable_delay_s").get<double>();
    }
    if (dag.find_module(mod.name) >= 0) throw AppError("duplicate module " + mod.name);
    dag.modules.push_back(std::move(mod));
  }
  for (const auto& f : j.at("flows")) {
    DataFlow flow;
    auto from = f.at("from").get<std::string>();
    auto to = f.at("to").get<std::string>();
    flow.from = dag.find_module(from);
    flow.to = dag.find_module(to);
    if (flow.from < 0) throw AppError("flow from unknown module " + from);
    if (flow.to < 0) throw AppError("flow to unknown module " + to);
    flow.instructions_mi = f.at("mi").get<double>();
    flow.payload_bits = f.at("bits").get<double>();
    dag.flows.push_back(flow);
  }
  dag.validate();
  return dag;
}

json app_to_json(const AppDag& dag) {
  json j;
  j["app_id"] = dag.app_id;
  j["sensor_interval_s"] = dag.sensor_interval_s;
  j["modules"] = json::array();
  for (const auto& m : dag.modules) {
    json mj{{"name", m.name}, {"pinned", m.pinned_to_device}, {"ram_mb", m.container_ram_mb}};
    if (m.max_tolerable_delay_s) mj["max_tolerable_delay_s"] = *m.max_tolerable_delay_s;
    j["modules"].push_back(mj);
  }
  j["flows"] = json::array();
  for (const auto& f : dag.flows) {
    j["flows"].push_back({{"from", dag.modules[static_cast<std::size_t>(f.from)].name},
                          {"to", dag.modules[static_cast<std::size_t>(f.to)].name},
                          {"mi", f.instructions_mi},
                          {"bits", f.payload_bits}});
  }
  return j;
}

namespace {

const char* kEcgmh = R"({
  "app_id": "ECGMH",
  "sensor_interval_s": 0.010,
  "modules": [
    {"name": "ecg_sensor", "pinned": true},
    {"name": "preprocessing", "ram_mb": 62.5},
    {"name": "feature_extraction", "ram_mb": 62.5},
    {"name": "arrhythmia_detection", "ram_mb": 62.5},
    {"name": "hrv_analysis", "ram_mb": 62.5},
    {"name": "alert_generation", "ram_mb": 62.5},
    {"name": "display", "pinned": true}
  ],
  "flows": [
    {"from": "ecg_sensor", "to": "preprocessing", "mi": 80, "bits": 40000},
    {"from": "preprocessing", "to": "feature_extraction", "mi": 100, "bits": 30000},
    {"from": "feature_extraction", "to": "arrhythmia_detection", "mi": 90, "bits": 20000},
    {"from": "feature_extraction", "to": "hrv_analysis", "mi": 70, "bits": 20000},
    {"from": "arrhythmia_detection", "to": "alert_generation", "mi": 40, "bits": 8000},
    {"from": "hrv_analysis", "to": "alert_generation", "mi": 40, "bits": 8000},
    {"from": "alert_generation", "to": "display", "mi": 5, "bits": 4000}
  ]
})";

const char* kEegtbg = R"({
  "app_id": "EEGTBG",
  "sensor_interval_s": 0.015,
  "modules": [
    {"name": "eeg_sensor", "pinned": true},
    {"name": "client", "ram_mb": 62.5},
    {"name": "concentration_calculator", "ram_mb": 62.5},
    {"name": "connector", "ram_mb": 62.5},
    {"name": "game_state", "ram_mb": 62.5},
    {"name": "display", "pinned": true}
  ],
  "flows": [
    {"from": "eeg_sensor", "to": "client", "mi": 60, "bits": 40000},
    {"from": "client", "to": "concentration_calculator", "mi": 80, "bits": 20000},
    {"from": "concentration_calculator", "to": "connector", "mi": 40, "bits": 10000},
    {"from": "concentration_calculator", "to": "game_state", "mi": 50, "bits": 10000},
    {"from": "connector", "to": "display", "mi": 5, "bits": 4000},
    {"from": "game_state", "to": "display", "mi": 5, "bits": 4000}
  ]
})";

}  // namespace

AppDag builtin_app(const std::string& name) {
  if (name == "ECGMH") return app_from_json(json::parse(kEcgmh));
  if (name == "EEGTBG") return app_from_json(json::parse(kEegtbg));
  throw AppError("unknown application template '" + name + "'");
}

std::vector<std::string> builtin_app_names() { return {"ECGMH", "EEGTBG"}; }

}  // namespace fogsim
