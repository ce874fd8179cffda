#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fogsim/app_model.hpp"
#include "fogsim/topology.hpp"

namespace fogsim {

struct CostWeights {
  double w1 = 0.5;
  double w2 = 0.5;
  void validate() const;
};

struct DeviceEnergyProfile {
  double p_cpu = 0.9;
  double p_idle = 0.3;
  double p_tx = 1.3;
  void validate() const;
};

class RoutingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CostError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class HopKind { Up, Down, Cluster, Arrived };

struct Hop {
  HopKind kind = HopKind::Arrived;
  ServerId next;
  int rule = 7;  // which NST case fired, 1..7
};

Hop next_hop(const Topology& topo, ServerId current, ServerId dest);

// Route totals. Transmission time of b bits is b * inv_bandwidth.
struct RouteSummary {
  double latency = 0.0;
  double inv_bandwidth = 0.0;
  int hops = 0;
};

RouteSummary walk_route(const Topology& topo, ServerId src, ServerId dst);

// Memoizes route summaries for one topology revision.
class Router {
 public:
  Router(const Topology& topo) : topo_(&topo) {}  // NOLINT: implicit by design

  const Topology& topology() const { return *topo_; }
  const RouteSummary& summary(ServerId src, ServerId dst) const;

 private:
  struct Key {
    ServerId a, b;
    bool operator==(const Key& o) const { return a == o.a && b == o.b; }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = static_cast<std::size_t>(k.a.level) * 1000003u + k.a.index;
      h = h * 1000033u + static_cast<std::size_t>(k.b.level);
      return h * 1000037u + static_cast<std::size_t>(k.b.index);
    }
  };
  const Topology* topo_;
  mutable std::uint64_t revision_ = ~0ull;
  mutable std::unordered_map<Key, RouteSummary, KeyHash> cache_;
};

double transmission_time(const Router& r, double payload_bits, ServerId src, ServerId dst);
double internodal_latency(const Router& r, ServerId src, ServerId dst);
double transmission_energy(const Router& r, const DeviceEnergyProfile& p, double payload_bits,
                           ServerId src, ServerId dst);
double internodal_energy(const Router& r, const DeviceEnergyProfile& p, ServerId src,
                         ServerId dst);

// Module-to-server assignment for one device's application. Pinned modules
// map to the device itself.
struct Placement {
  std::string app_id;
  ServerId device;
  std::vector<std::optional<ServerId>> assignment;

  static Placement empty_for(const AppDag& dag, ServerId device);
  bool complete() const;
};

struct ModuleCost {
  double t_exe = 0, t_lat = 0, t_tra = 0;
  double e_exe = 0, e_lat = 0, e_tra = 0;
  double time() const { return t_exe + t_lat + t_tra; }
  double energy() const { return e_exe + e_lat + e_tra; }
};

// With skip_unplaced, flows from unassigned predecessors are ignored instead
// of raising CostError.
ModuleCost module_cost(const Router& r, const AppDag& dag, const DeviceEnergyProfile& p,
                       const Placement& x, int module, bool skip_unplaced = false);
double module_time(const Router& r, const AppDag& dag, const Placement& x, int module);
double module_energy(const Router& r, const AppDag& dag, const DeviceEnergyProfile& p,
                     const Placement& x, int module);

struct ScheduleCost {
  double gamma = 0.0;  // time
  double theta = 0.0;  // energy
  double psi = 0.0;    // weighted
};

ScheduleCost schedule_cost(const Router& r, const AppDag& dag, const ScheduleSet& s,
                           const Placement& x, const CostWeights& w,
                           const DeviceEnergyProfile& p, int t);

struct Violation {
  std::string constraint;  // "C1", "C2" or "C3"
  std::string detail;
};

struct AppCost {
  double total = 0.0;
  double time = 0.0;    // sum of schedule times
  double energy = 0.0;  // sum of schedule energies
  std::vector<ScheduleCost> schedules;
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// C1: every module on exactly one existing server (pinned ones on the device).
// C2: per server, modules of this placement fit within its container capacity
//     and the server's own accounting is within capacity.
// C3: predecessors belong to strictly earlier schedules and are placed.
std::vector<Violation> check_constraints(const Topology& topo, const AppDag& dag,
                                         const ScheduleSet& s, const Placement& x);

AppCost app_cost(const Router& r, const AppDag& dag, const ScheduleSet& s, const Placement& x,
                 const CostWeights& w, const DeviceEnergyProfile& p);

// Cost over the assigned modules only; used while a placement is being built.
double partial_app_cost(const Router& r, const AppDag& dag, const ScheduleSet& s,
                        const Placement& x, const CostWeights& w, const DeviceEnergyProfile& p);

struct MigrationParams {
  double i_mig_s = 0.05;
  double epsilon_fraction = 0.05;  // of the reference application cost
  double dump_fraction_min = 0.05;
  double dump_fraction_max = 0.10;
  void validate() const;
};

struct MigrationCost {
  double time = 0.0;
  double energy = 0.0;
  double weighted = 0.0;
};

MigrationCost module_migration_cost(const Router& r, const DeviceEnergyProfile& p,
                                    const MigrationParams& params, const CostWeights& w,
                                    double dump_bits, ServerId from, ServerId to,
                                    double remaining_mi);

// Per-schedule max combination of module migration costs.
MigrationCost combine_schedule_migration(const std::vector<MigrationCost>& costs,
                                         const CostWeights& w);

bool migration_admissible(double old_cost, double new_cost, double epsilon);

}  // namespace fogsim
