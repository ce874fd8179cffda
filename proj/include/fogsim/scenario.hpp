#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fogsim/app_model.hpp"
#include "fogsim/baselines.hpp"
#include "fogsim/cost_model.hpp"
#include "fogsim/mobility.hpp"
#include "fogsim/topology.hpp"

namespace fogsim {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Servers generated for one fog level.
struct LevelGenerator {
  int level = 1;
  int count = 0;
  std::string layout = "grid";  // grid | row | center
  int cols = 0;
  int rows = 0;
  std::optional<double> row_y_m;
  double cpu_min = 0.0;  // drawn uniformly per server
  double cpu_max = 0.0;
  int container_capacity = 0;
  double ram_capacity_mb = std::numeric_limits<double>::infinity();
  double coverage_m = 0.0;
};

struct ExplicitNode {
  ServerId id;
  double cpu_mips = 0.0;
  int container_capacity = 0;
  double ram_capacity_mb = std::numeric_limits<double>::infinity();
  Vec2 position;
  double coverage_m = 0.0;
  std::optional<ServerId> parent;
};

struct CloudSpec {
  double cpu_mips = 80000.0;
  int container_capacity = 10000;
};

struct DevicePopulation {
  int count = 0;
  std::vector<std::string> apps{"ECGMH"};  // assigned round-robin
  double cpu_mips = 500.0;
  std::vector<Vec2> positions;  // empty: uniform in the area
};

struct MobilityConfig {
  bool enabled = true;
  WalkParams walk;
  double tick_s = 0.1;
  double departure_fraction = 0.95;
};

struct NodeCrash {
  ServerId id;
  double time_s = 0.0;
};

struct FailureConfig {
  double migration_failure_p = 0.0;
  std::vector<NodeCrash> node_crashes;
};

struct EngineConfig {
  double container_startup_s = 0.1;
  double control_service_s = 0.001;   // per request at any deciding node
  double placement_start_s = 0.5;
  double notification_timeout_s = 1.0;
  double heartbeat_s = 1.0;
  int heartbeat_misses = 3;
  double ram_min_mb = 50.0;
  double ram_max_mb = 75.0;
  bool discard_interrupted = false;
};

struct Scenario {
  std::string name = "unnamed";
  int max_fog_level = 3;
  Area area;
  std::vector<LevelGenerator> levels;
  std::vector<ExplicitNode> nodes;
  std::optional<CloudSpec> cloud;
  std::vector<std::pair<ServerId, ServerId>> cluster_links;
  bool bootstrap_clustering = true;
  std::vector<LevelLink> links;
  DevicePopulation devices;
  std::map<std::string, AppDag> apps;
  CostWeights weights;
  DeviceEnergyProfile energy;
  MigrationParams migration;
  MobilityConfig mobility;
  FailureConfig failures;
  EngineConfig engine;
  PolicyKind policy = PolicyKind::Proposed;
  double horizon_s = 100.0;
  std::uint64_t seed = 1;
  bool optimality = false;

  void validate() const;
};

// Default link parameters for a hierarchy with fog levels 1..3.
std::vector<LevelLink> default_links();

Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);
nlohmann::json scenario_to_json(const Scenario& s);
std::string effective_config(const Scenario& s);

// Resolves a bundled scenario name or a path.
std::string scenario_path(const std::string& name_or_path);

struct DeviceInstance {
  ServerId id;
  Vec2 position;
  std::string app;
};

struct Materialized {
  TopologySpec topology;  // fog servers and the cloud, devices excluded
  std::vector<std::pair<ServerId, ServerId>> cluster_links;
  std::vector<DeviceInstance> devices;
};

// Draws the seeded parts of a scenario (server cpu, device positions).
Materialized materialize(const Scenario& s);

}  // namespace fogsim
