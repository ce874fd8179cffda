#include "fogsim/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fogsim {

using nlohmann::json;

std::vector<LevelLink> default_links() {
  std::vector<LevelLink> l(5);
  // Devices.
  l[0] = {0.005, 0.0, 0.0, 100e6, 10e9, 10e9};
  // Level 1: down to devices, clusters of 3-5 ms (midpoint).
  l[1] = {0.025, 0.005, 0.004, 10e9, 200e6, 10e9};
  // Level 2: clusters of 20-25 ms (midpoint).
  l[2] = {0.050, 0.025, 0.0225, 10e9, 10e9, 10e9};
  l[3] = {0.150, 0.050, 0.0, 10e9, 10e9, 10e9};
  // Cloud.
  l[4] = {0.0, 0.150, 0.0, 10e9, 10e9, 10e9};
  return l;
}

void Scenario::validate() const {
  if (max_fog_level < 0) throw ScenarioError("max_fog_level must be non-negative");
  if (!(area.width > 0) || !(area.height > 0)) throw ScenarioError("area must be positive");
  if (static_cast<int>(links.size()) < max_fog_level + 2) {
    throw ScenarioError("links must cover levels 0.." + std::to_string(max_fog_level + 1));
  }
  try {
    LinkParams(links).validate();
  } catch (const std::runtime_error& e) {
    throw ScenarioError(e.what());
  }
  for (const auto& g : levels) {
    if (g.level < 1 || g.level > max_fog_level) {
      throw ScenarioError("fog level " + std::to_string(g.level) + " outside 1.." +
                          std::to_string(max_fog_level));
    }
    if (g.count < 0) throw ScenarioError("negative server count at level " + std::to_string(g.level));
    if (g.layout == "grid" && g.cols * g.rows < g.count) {
      throw ScenarioError("grid at level " + std::to_string(g.level) + " too small for its servers");
    }
    if (g.layout != "grid" && g.layout != "row" && g.layout != "center") {
      throw ScenarioError("unknown layout '" + g.layout + "'");
    }
    if (g.cpu_min <= 0 || g.cpu_max < g.cpu_min) {
      throw ScenarioError("invalid cpu range at level " + std::to_string(g.level));
    }
  }
  bool has_cloud = cloud.has_value();
  for (const auto& n : nodes) {
    if (n.id == ServerId{max_fog_level + 1, 1}) has_cloud = true;
  }
  if (!has_cloud) {
    throw ScenarioError("missing cloud node " + to_string(ServerId{max_fog_level + 1, 1}));
  }
  if (devices.count < 0) throw ScenarioError("negative device count");
  if (!devices.positions.empty() && static_cast<int>(devices.positions.size()) != devices.count) {
    throw ScenarioError("device positions do not match device count");
  }
  if (devices.apps.empty() && devices.count > 0) throw ScenarioError("devices need an application");
  for (const auto& a : devices.apps) {
    if (!apps.count(a)) throw ScenarioError("device application '" + a + "' is not defined");
  }
  try {
    weights.validate();
    energy.validate();
    migration.validate();
  } catch (const std::runtime_error& e) {
    throw ScenarioError(e.what());
  }
  if (!(mobility.tick_s > 0)) throw ScenarioError("mobility tick must be positive");
  if (mobility.walk.speed_min < 0 || mobility.walk.speed_max < mobility.walk.speed_min) {
    throw ScenarioError("invalid speed range");
  }
  if (!(failures.migration_failure_p >= 0 && failures.migration_failure_p <= 1)) {
    throw ScenarioError("migration failure probability must lie in [0,1]");
  }
  if (engine.ram_max_mb < engine.ram_min_mb || engine.ram_min_mb < 0) {
    throw ScenarioError("invalid container RAM range");
  }
  if (!(horizon_s >= 0)) throw ScenarioError("horizon must be non-negative");
}

namespace {

ServerId id_from(const json& j, const std::string& field) {
  try {
    if (j.is_string()) return parse_server_id(j.get<std::string>());
    if (j.is_array() && j.size() == 2) return ServerId{j[0].get<int>(), j[1].get<int>()};
  } catch (const std::exception& e) {
    throw ScenarioError(field + ": " + e.what());
  }
  throw ScenarioError(field + ": expected \"(h,i)\" or [h,i]");
}

json id_to(ServerId id) { return to_string(id); }

Vec2 vec_from(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError(field + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json vec_to(Vec2 v) { return json::array({v.x, v.y}); }

std::vector<double> column(const json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<std::vector<double>>();
}

template <typename T>
T opt(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

double ram_from(const json& j) {
  if (!j.contains("ram_capacity_mb") || j.at("ram_capacity_mb").is_null()) {
    return std::numeric_limits<double>::infinity();
  }
  return j.at("ram_capacity_mb").get<double>();
}

json ram_to(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void parse_body(Scenario& s, const json& j) {
  s.name = opt<std::string>(j, "name", s.name);
  s.max_fog_level = opt<int>(j, "max_fog_level", s.max_fog_level);
  if (j.contains("area")) {
    s.area.width = j.at("area").at("width_m").get<double>();
    s.area.height = j.at("area").at("height_m").get<double>();
  }
  if (j.contains("fog_levels")) {
    for (const auto& g : j.at("fog_levels")) {
      LevelGenerator lg;
      lg.level = g.at("level").get<int>();
      lg.count = g.at("count").get<int>();
      if (g.contains("layout")) {
        const auto& l = g.at("layout");
        lg.layout = l.at("kind").get<std::string>();
        lg.cols = opt<int>(l, "cols", 0);
        lg.rows = opt<int>(l, "rows", 0);
        if (l.contains("y_m")) lg.row_y_m = l.at("y_m").get<double>();
      }
      const auto& cpu = g.at("cpu_mips");
      if (cpu.is_array()) {
        lg.cpu_min = cpu.at(0).get<double>();
        lg.cpu_max = cpu.at(1).get<double>();
      } else {
        lg.cpu_min = lg.cpu_max = cpu.get<double>();
      }
      lg.container_capacity = g.at("container_capacity").get<int>();
      lg.ram_capacity_mb = ram_from(g);
      lg.coverage_m = opt<double>(g, "coverage_m", 0.0);
      s.levels.push_back(lg);
    }
  }
  if (j.contains("nodes")) {
    for (const auto& n : j.at("nodes")) {
      ExplicitNode en;
      en.id = id_from(n.at("id"), "nodes.id");
      en.cpu_mips = n.at("cpu_mips").get<double>();
      en.container_capacity = n.at("container_capacity").get<int>();
      en.ram_capacity_mb = ram_from(n);
      if (n.contains("position")) en.position = vec_from(n.at("position"), "nodes.position");
      en.coverage_m = opt<double>(n, "coverage_m", 0.0);
      if (n.contains("parent") && !n.at("parent").is_null()) {
        en.parent = id_from(n.at("parent"), "nodes.parent");
      }
      s.nodes.push_back(en);
    }
  }
  if (j.contains("cloud") && !j.at("cloud").is_null()) {
    CloudSpec c;
    c.cpu_mips = opt<double>(j.at("cloud"), "cpu_mips", c.cpu_mips);
    c.container_capacity = opt<int>(j.at("cloud"), "container_capacity", c.container_capacity);
    s.cloud = c;
  }
  if (j.contains("cluster_links")) {
    for (const auto& p : j.at("cluster_links")) {
      s.cluster_links.emplace_back(id_from(p.at(0), "cluster_links"),
                                   id_from(p.at(1), "cluster_links"));
    }
  }
  s.bootstrap_clustering = opt<bool>(j, "bootstrap_clustering", s.bootstrap_clustering);

  std::vector<LevelLink> base = s.max_fog_level == 3 ? default_links()
                                                     : std::vector<LevelLink>();
  if (j.contains("links")) {
    const auto& l = j.at("links");
    auto pick = [&](auto member) {
      std::vector<double> v;
      for (const auto& b : base) v.push_back(b.*member);
      return v;
    };
    auto lat_up = column(l, "lat_up_s", pick(&LevelLink::lat_up));
    auto lat_down = column(l, "lat_down_s", pick(&LevelLink::lat_down));
    auto lat_cl = column(l, "lat_cluster_s", pick(&LevelLink::lat_cluster));
    auto bw_up = column(l, "bw_up_bps", pick(&LevelLink::bw_up));
    auto bw_down = column(l, "bw_down_bps", pick(&LevelLink::bw_down));
    auto bw_cl = column(l, "bw_cluster_bps", pick(&LevelLink::bw_cluster));
    std::size_t n = lat_up.size();
    for (const auto* v : {&lat_down, &lat_cl, &bw_up, &bw_down, &bw_cl}) {
      if (v->size() != n) throw ScenarioError("links: every column needs one value per level");
    }
    s.links.clear();
    for (std::size_t i = 0; i < n; ++i) {
      s.links.push_back({lat_up[i], lat_down[i], lat_cl[i], bw_up[i], bw_down[i], bw_cl[i]});
    }
  } else {
    s.links = base;
  }

  if (j.contains("devices")) {
    const auto& d = j.at("devices");
    s.devices.count = opt<int>(d, "count", 0);
    if (d.contains("app")) s.devices.apps = {d.at("app").get<std::string>()};
    if (d.contains("apps")) s.devices.apps = d.at("apps").get<std::vector<std::string>>();
    s.devices.cpu_mips = opt<double>(d, "cpu_mips", s.devices.cpu_mips);
    if (d.contains("positions")) {
      for (const auto& p : d.at("positions")) s.devices.positions.push_back(vec_from(p, "devices.positions"));
    }
  }
  if (j.contains("apps")) {
    for (const auto& [name, spec] : j.at("apps").items()) {
      if (spec.is_string() && spec.get<std::string>() == "builtin") {
        s.apps[name] = builtin_app(name);
      } else {
        AppDag dag = app_from_json(spec);
        if (dag.app_id != name) throw ScenarioError("apps." + name + ": app_id mismatch");
        s.apps[name] = dag;
      }
    }
  }
  for (const auto& a : s.devices.apps) {
    if (!s.apps.count(a)) s.apps[a] = builtin_app(a);
  }
  if (j.contains("weights")) {
    s.weights.w1 = opt<double>(j.at("weights"), "w1", s.weights.w1);
    s.weights.w2 = opt<double>(j.at("weights"), "w2", s.weights.w2);
  }
  if (j.contains("energy")) {
    const auto& e = j.at("energy");
    s.energy.p_cpu = opt<double>(e, "p_cpu_w", s.energy.p_cpu);
    s.energy.p_idle = opt<double>(e, "p_idle_w", s.energy.p_idle);
    s.energy.p_tx = opt<double>(e, "p_tx_w", s.energy.p_tx);
  }
  if (j.contains("migration")) {
    const auto& m = j.at("migration");
    s.migration.i_mig_s = opt<double>(m, "i_mig_s", s.migration.i_mig_s);
    s.migration.epsilon_fraction = opt<double>(m, "epsilon_fraction", s.migration.epsilon_fraction);
    s.migration.dump_fraction_min = opt<double>(m, "dump_fraction_min", s.migration.dump_fraction_min);
    s.migration.dump_fraction_max = opt<double>(m, "dump_fraction_max", s.migration.dump_fraction_max);
  }
  if (j.contains("mobility")) {
    const auto& m = j.at("mobility");
    s.mobility.enabled = opt<bool>(m, "enabled", s.mobility.enabled);
    s.mobility.walk.speed_min = opt<double>(m, "speed_min_mps", s.mobility.walk.speed_min);
    s.mobility.walk.speed_max = opt<double>(m, "speed_max_mps", s.mobility.walk.speed_max);
    s.mobility.tick_s = opt<double>(m, "tick_s", s.mobility.tick_s);
    s.mobility.departure_fraction = opt<double>(m, "departure_fraction", s.mobility.departure_fraction);
  }
  if (j.contains("failures")) {
    const auto& f = j.at("failures");
    s.failures.migration_failure_p = opt<double>(f, "migration_failure_p", s.failures.migration_failure_p);
    if (f.contains("node_crashes")) {
      for (const auto& c : f.at("node_crashes")) {
        s.failures.node_crashes.push_back({id_from(c.at("id"), "failures.node_crashes.id"),
                                           c.at("time_s").get<double>()});
      }
    }
  }
  if (j.contains("engine")) {
    const auto& e = j.at("engine");
    auto& g = s.engine;
    g.container_startup_s = opt<double>(e, "container_startup_s", g.container_startup_s);
    g.control_service_s = opt<double>(e, "control_service_s", g.control_service_s);
    g.placement_start_s = opt<double>(e, "placement_start_s", g.placement_start_s);
    g.notification_timeout_s = opt<double>(e, "notification_timeout_s", g.notification_timeout_s);
    g.heartbeat_s = opt<double>(e, "heartbeat_s", g.heartbeat_s);
    g.heartbeat_misses = opt<int>(e, "heartbeat_misses", g.heartbeat_misses);
    g.ram_min_mb = opt<double>(e, "ram_min_mb", g.ram_min_mb);
    g.ram_max_mb = opt<double>(e, "ram_max_mb", g.ram_max_mb);
    g.discard_interrupted = opt<bool>(e, "discard_interrupted", g.discard_interrupted);
  }
  if (j.contains("policy")) s.policy = parse_policy(j.at("policy").get<std::string>());
  s.horizon_s = opt<double>(j, "horizon_s", s.horizon_s);
  s.seed = opt<std::uint64_t>(j, "seed", s.seed);
  s.optimality = opt<bool>(j, "optimality", s.optimality);
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  Scenario s;
  try {
    parse_body(s, j);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario field error: ") + e.what());
  } catch (const AppError& e) {
    throw ScenarioError(std::string("application error: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw ScenarioError(e.what());
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ScenarioError(path + ":" + std::to_string(line) + ": " + e.what());
  }
  return scenario_from_json(j);
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["max_fog_level"] = s.max_fog_level;
  j["area"] = {{"width_m", s.area.width}, {"height_m", s.area.height}};
  j["fog_levels"] = json::array();
  for (const auto& g : s.levels) {
    json layout{{"kind", g.layout}};
    if (g.layout == "grid") {
      layout["cols"] = g.cols;
      layout["rows"] = g.rows;
    }
    if (g.row_y_m) layout["y_m"] = *g.row_y_m;
    j["fog_levels"].push_back({{"level", g.level},
                               {"count", g.count},
                               {"layout", layout},
                               {"cpu_mips", json::array({g.cpu_min, g.cpu_max})},
                               {"container_capacity", g.container_capacity},
                               {"ram_capacity_mb", ram_to(g.ram_capacity_mb)},
                               {"coverage_m", g.coverage_m}});
  }
  j["nodes"] = json::array();
  for (const auto& n : s.nodes) {
    j["nodes"].push_back({{"id", id_to(n.id)},
                          {"cpu_mips", n.cpu_mips},
                          {"container_capacity", n.container_capacity},
                          {"ram_capacity_mb", ram_to(n.ram_capacity_mb)},
                          {"position", vec_to(n.position)},
                          {"coverage_m", n.coverage_m},
                          {"parent", n.parent ? id_to(*n.parent) : json(nullptr)}});
  }
  j["cloud"] = s.cloud ? json{{"cpu_mips", s.cloud->cpu_mips},
                              {"container_capacity", s.cloud->container_capacity}}
                       : json(nullptr);
  j["cluster_links"] = json::array();
  for (const auto& [a, b] : s.cluster_links) j["cluster_links"].push_back({id_to(a), id_to(b)});
  j["bootstrap_clustering"] = s.bootstrap_clustering;
  json links;
  for (const auto& l : s.links) {
    links["lat_up_s"].push_back(l.lat_up);
    links["lat_down_s"].push_back(l.lat_down);
    links["lat_cluster_s"].push_back(l.lat_cluster);
    links["bw_up_bps"].push_back(l.bw_up);
    links["bw_down_bps"].push_back(l.bw_down);
    links["bw_cluster_bps"].push_back(l.bw_cluster);
  }
  j["links"] = links;
  json dev{{"count", s.devices.count}, {"apps", s.devices.apps}, {"cpu_mips", s.devices.cpu_mips}};
  if (!s.devices.positions.empty()) {
    dev["positions"] = json::array();
    for (auto p : s.devices.positions) dev["positions"].push_back(vec_to(p));
  }
  j["devices"] = dev;
  j["apps"] = json::object();
  for (const auto& [name, dag] : s.apps) j["apps"][name] = app_to_json(dag);
  j["weights"] = {{"w1", s.weights.w1}, {"w2", s.weights.w2}};
  j["energy"] = {{"p_cpu_w", s.energy.p_cpu}, {"p_idle_w", s.energy.p_idle}, {"p_tx_w", s.energy.p_tx}};
  j["migration"] = {{"i_mig_s", s.migration.i_mig_s},
                    {"epsilon_fraction", s.migration.epsilon_fraction},
                    {"dump_fraction_min", s.migration.dump_fraction_min},
                    {"dump_fraction_max", s.migration.dump_fraction_max}};
  j["mobility"] = {{"enabled", s.mobility.enabled},
                   {"speed_min_mps", s.mobility.walk.speed_min},
                   {"speed_max_mps", s.mobility.walk.speed_max},
                   {"tick_s", s.mobility.tick_s},
                   {"departure_fraction", s.mobility.departure_fraction}};
  json crashes = json::array();
  for (const auto& c : s.failures.node_crashes) {
    crashes.push_back({{"id", id_to(c.id)}, {"time_s", c.time_s}});
  }
  j["failures"] = {{"migration_failure_p", s.failures.migration_failure_p},
                   {"node_crashes", crashes}};
  const auto& g = s.engine;
  j["engine"] = {{"container_startup_s", g.container_startup_s},
                 {"control_service_s", g.control_service_s},
                 {"placement_start_s", g.placement_start_s},
                 {"notification_timeout_s", g.notification_timeout_s},
                 {"heartbeat_s", g.heartbeat_s},
                 {"heartbeat_misses", g.heartbeat_misses},
                 {"ram_min_mb", g.ram_min_mb},
                 {"ram_max_mb", g.ram_max_mb},
                 {"discard_interrupted", g.discard_interrupted}};
  j["policy"] = to_string(s.policy);
  j["horizon_s"] = s.horizon_s;
  j["seed"] = s.seed;
  j["optimality"] = s.optimality;
  return j;
}

std::string effective_config(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

std::string scenario_path(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  if (fs::exists(name_or_path)) return name_or_path;
  fs::path bundled = fs::path(FOGSIM_SOURCE_DIR) / "scenarios" / (name_or_path + ".json");
  if (fs::exists(bundled)) return bundled.string();
  throw ScenarioError("no scenario file or bundled scenario named '" + name_or_path + "'");
}

Materialized materialize(const Scenario& s) {
  Materialized out;
  out.topology.max_fog_level = s.max_fog_level;
  out.topology.links = LinkParams(s.links);
  auto topo_rng = derive_stream(s.seed, "topology");
  for (const auto& g : s.levels) {
    for (int k = 0; k < g.count; ++k) {
      NodeSpec n;
      n.id = ServerId{g.level, k + 1};
      n.cpu_mips = g.cpu_min == g.cpu_max ? g.cpu_min : uniform(topo_rng, g.cpu_min, g.cpu_max);
      n.container_capacity = g.container_capacity;
      n.ram_capacity_mb = g.ram_capacity_mb;
      n.coverage_radius = g.coverage_m;
      if (g.layout == "grid") {
        int c = k % g.cols, r = k / g.cols;
        n.position = {s.area.width * (c + 0.5) / g.cols, s.area.height * (r + 0.5) / g.rows};
      } else if (g.layout == "row") {
        n.position = {s.area.width * (k + 0.5) / g.count, g.row_y_m.value_or(s.area.height / 2)};
      } else {
        n.position = {s.area.width / 2, s.area.height / 2};
      }
      out.topology.nodes.push_back(n);
    }
  }
  for (const auto& en : s.nodes) {
    NodeSpec n;
    n.id = en.id;
    n.cpu_mips = en.cpu_mips;
    n.container_capacity = en.container_capacity;
    n.ram_capacity_mb = en.ram_capacity_mb;
    n.position = en.position;
    n.coverage_radius = en.coverage_m;
    n.parent = en.parent;
    out.topology.nodes.push_back(n);
  }
  if (s.cloud) {
    NodeSpec c;
    c.id = ServerId{s.max_fog_level + 1, 1};
    c.cpu_mips = s.cloud->cpu_mips;
    c.container_capacity = s.cloud->container_capacity;
    c.position = {s.area.width / 2, s.area.height / 2};
    out.topology.nodes.push_back(c);
  }
  out.cluster_links = s.cluster_links;
  auto dev_rng = derive_stream(s.seed, "devices");
  for (int k = 0; k < s.devices.count; ++k) {
    DeviceInstance d;
    d.id = ServerId{0, k + 1};
    if (!s.devices.positions.empty()) {
      d.position = s.devices.positions[static_cast<std::size_t>(k)];
    } else {
      d.position = {uniform(dev_rng, 0.0, s.area.width), uniform(dev_rng, 0.0, s.area.height)};
    }
    d.app = s.devices.apps[static_cast<std::size_t>(k) % s.devices.apps.size()];
    out.devices.push_back(d);
  }
  return out;
}

}  // namespace fogsim
