#include "fogsim/cost_model.hpp"

#include <algorithm>
#include <cmath>

namespace fogsim {

void CostWeights::validate() const {
  if (!(w1 >= 0.0 && w1 <= 1.0) || !(w2 >= 0.0 && w2 <= 1.0)) {
    throw CostError("weights must lie in [0,1]");
  }
}

void DeviceEnergyProfile::validate() const {
  if (!(p_cpu >= 0) || !(p_idle >= 0) || !(p_tx >= 0)) {
    throw CostError("device powers must be non-negative");
  }
}

void MigrationParams::validate() const {
  if (!(i_mig_s >= 0)) throw CostError("i_mig must be non-negative");
  if (!(epsilon_fraction >= 0)) throw CostError("epsilon must be non-negative");
  if (!(dump_fraction_min > 0) || !(dump_fraction_max <= 1) ||
      dump_fraction_min > dump_fraction_max) {
    throw CostError("dump fractions must satisfy 0 < min <= max <= 1");
  }
}

namespace {

std::optional<ServerId> first_route(const Topology& topo, const std::set<ServerId>& candidates,
                                    ServerId dest) {
  for (ServerId c : candidates) {
    if (!topo.contains(c)) continue;
    const ServerNode& n = topo.node(c);
    if (!n.alive) continue;
    if (topo.omega(c).count(dest)) return c;
  }
  return std::nullopt;
}

Hop parent_hop(const Topology& topo, ServerId current, ServerId dest, int rule) {
  const auto& parent = topo.node(current).parent;
  if (!parent || !topo.contains(*parent) || !topo.node(*parent).alive) {
    throw RoutingError("no route from " + to_string(current) + " to " + to_string(dest));
  }
  return Hop{HopKind::Up, *parent, rule};
}

}  // namespace

Hop next_hop(const Topology& topo, ServerId current, ServerId dest) {
  if (!topo.contains(current)) throw RoutingError("unknown server " + to_string(current));
  if (!topo.contains(dest)) throw RoutingError("unknown server " + to_string(dest));
  if (current == dest) return Hop{HopKind::Arrived, current, 7};
  const ServerNode& cur = topo.node(current);
  if (current.level < dest.level) return parent_hop(topo, current, dest, 1);
  if (current.level == dest.level) {
    if (auto cm = first_route(topo, cur.cluster_members, dest)) {
      return Hop{HopKind::Cluster, *cm, 3};
    }
    return parent_hop(topo, current, dest, 4);
  }
  if (auto ch = first_route(topo, cur.children, dest)) return Hop{HopKind::Down, *ch, 2};
  if (auto cm = first_route(topo, cur.cluster_members, dest)) {
    return Hop{HopKind::Cluster, *cm, 5};
  }
  return parent_hop(topo, current, dest, 6);
}

RouteSummary walk_route(const Topology& topo, ServerId src, ServerId dst) {
  RouteSummary s;
  ServerId cur = src;
  const int limit = static_cast<int>(topo.nodes().size()) * 2 + 8;
  while (true) {
    Hop hop = next_hop(topo, cur, dst);
    if (hop.kind == HopKind::Arrived) return s;
    const LevelLink& l = topo.links().at(cur.level);
    switch (hop.kind) {
      case HopKind::Up:
        s.latency += l.lat_up;
        s.inv_bandwidth += 1.0 / l.bw_up;
        break;
      case HopKind::Down:
        s.latency += l.lat_down;
        s.inv_bandwidth += 1.0 / l.bw_down;
        break;
      case HopKind::Cluster:
        s.latency += l.lat_cluster;
        s.inv_bandwidth += 1.0 / l.bw_cluster;
        break;
      case HopKind::Arrived:
        break;
    }
    cur = hop.next;
    if (++s.hops > limit) {
      throw RoutingError("routing loop from " + to_string(src) + " to " + to_string(dst));
    }
  }
}

const RouteSummary& Router::summary(ServerId src, ServerId dst) const {
  if (revision_ != topo_->revision()) {
    cache_.clear();
    revision_ = topo_->revision();
  }
  Key k{src, dst};
  auto it = cache_.find(k);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(k, walk_route(*topo_, src, dst)).first->second;
}

double transmission_time(const Router& r, double payload_bits, ServerId src, ServerId dst) {
  if (src == dst) return 0.0;
  return payload_bits * r.summary(src, dst).inv_bandwidth;
}

double internodal_latency(const Router& r, ServerId src, ServerId dst) {
  if (src == dst) return 0.0;
  return r.summary(src, dst).latency;
}

double transmission_energy(const Router& r, const DeviceEnergyProfile& p, double payload_bits,
                           ServerId src, ServerId dst) {
  if (src == dst) return 0.0;
  const Topology& topo = r.topology();
  if (src.level == 0 && dst.level > 0) {
    const auto& par = topo.node(src).parent;
    if (!par) throw RoutingError("device " + to_string(src) + " has no parent");
    double first = payload_bits / topo.links().at(0).bw_up;
    return first * p.p_tx + transmission_time(r, payload_bits, *par, dst) * p.p_idle;
  }
  if (dst.level == 0 && src.level > 0) {
    const auto& par = topo.node(dst).parent;
    if (!par) throw RoutingError("device " + to_string(dst) + " has no parent");
    double last = payload_bits / topo.links().at(par->level).bw_down;
    return last * p.p_tx + transmission_time(r, payload_bits, src, *par) * p.p_idle;
  }
  return transmission_time(r, payload_bits, src, dst) * p.p_idle;
}

double internodal_energy(const Router& r, const DeviceEnergyProfile& p, ServerId src,
                         ServerId dst) {
  return internodal_latency(r, src, dst) * p.p_idle;
}

Placement Placement::empty_for(const AppDag& dag, ServerId device) {
  Placement x;
  x.app_id = dag.app_id;
  x.device = device;
  x.assignment.resize(static_cast<std::size_t>(dag.module_count()));
  for (int m = 0; m < dag.module_count(); ++m) {
    if (dag.modules[static_cast<std::size_t>(m)].pinned_to_device) {
      x.assignment[static_cast<std::size_t>(m)] = device;
    }
  }
  return x;
}

bool Placement::complete() const {
  return std::all_of(assignment.begin(), assignment.end(),
                     [](const auto& a) { return a.has_value(); });
}

ModuleCost module_cost(const Router& r, const AppDag& dag, const DeviceEnergyProfile& p,
                       const Placement& x, int module, bool skip_unplaced) {
  const auto& self = x.assignment.at(static_cast<std::size_t>(module));
  if (!self) throw CostError("module " + dag.modules[static_cast<std::size_t>(module)].name +
                             " is not placed");
  const Topology& topo = r.topology();
  const double cpu = topo.node(*self).cpu_mips;
  ModuleCost c;
  for (const auto& f : dag.flows) {
    if (f.to != module) continue;
    const auto& src = x.assignment[static_cast<std::size_t>(f.from)];
    if (!src) {
      if (skip_unplaced) continue;
      throw CostError("predecessor " + dag.modules[static_cast<std::size_t>(f.from)].name +
                      " is not placed");
    }
    if (f.instructions_mi > 0) {
      if (!(cpu > 0)) throw CostError("server " + to_string(*self) + " has no cpu");
      c.t_exe += f.instructions_mi / cpu;
    }
    c.t_tra = std::max(c.t_tra, transmission_time(r, f.payload_bits, *src, *self));
    c.t_lat = std::max(c.t_lat, internodal_latency(r, *src, *self));
    c.e_tra = std::max(c.e_tra, transmission_energy(r, p, f.payload_bits, *src, *self));
    c.e_lat = std::max(c.e_lat, internodal_energy(r, p, *src, *self));
  }
  c.e_exe = c.t_exe * (self->is_device() ? p.p_cpu : p.p_idle);
  return c;
}

double module_time(const Router& r, const AppDag& dag, const Placement& x, int module) {
  return module_cost(r, dag, DeviceEnergyProfile{}, x, module).time();
}

double module_energy(const Router& r, const AppDag& dag, const DeviceEnergyProfile& p,
                     const Placement& x, int module) {
  return module_cost(r, dag, p, x, module).energy();
}

namespace {

ScheduleCost schedule_cost_impl(const Router& r, const AppDag& dag, const ScheduleSet& s,
                                const Placement& x, const CostWeights& w,
                                const DeviceEnergyProfile& p, int t, bool partial) {
  ScheduleCost sc;
  for (int m : s.schedules.at(static_cast<std::size_t>(t))) {
    if (partial && !x.assignment[static_cast<std::size_t>(m)]) continue;
    ModuleCost c = module_cost(r, dag, p, x, m, partial);
    sc.gamma = std::max(sc.gamma, c.time());
    sc.theta = std::max(sc.theta, c.energy());
  }
  sc.psi = w.w1 * sc.gamma + w.w2 * sc.theta;
  return sc;
}

}  // namespace

ScheduleCost schedule_cost(const Router& r, const AppDag& dag, const ScheduleSet& s,
                           const Placement& x, const CostWeights& w,
                           const DeviceEnergyProfile& p, int t) {
  return schedule_cost_impl(r, dag, s, x, w, p, t, false);
}

std::vector<Violation> check_constraints(const Topology& topo, const AppDag& dag,
                                         const ScheduleSet& s, const Placement& x) {
  std::vector<Violation> out;
  std::map<ServerId, int> load;
  if (static_cast<int>(x.assignment.size()) != dag.module_count()) {
    out.push_back({"C1", "assignment size does not match module count"});
    return out;
  }
  for (int m = 0; m < dag.module_count(); ++m) {
    const auto& mod = dag.modules[static_cast<std::size_t>(m)];
    const auto& a = x.assignment[static_cast<std::size_t>(m)];
    if (!a) {
      out.push_back({"C1", "module " + mod.name + " has no server"});
      continue;
    }
    if (mod.pinned_to_device) {
      if (*a != x.device) out.push_back({"C1", "pinned module " + mod.name + " left the device"});
      continue;
    }
    if (!topo.contains(*a) || a->is_device()) {
      out.push_back({"C1", "module " + mod.name + " on invalid server " + to_string(*a)});
      continue;
    }
    ++load[*a];
  }
  for (const auto& [id, count] : load) {
    const ServerNode& n = topo.node(id);
    if (count > n.container_capacity ||
        n.active_containers + n.reserved_containers > n.container_capacity) {
      out.push_back({"C2", "server " + to_string(id) + " over capacity"});
    }
  }
  for (const auto& f : dag.flows) {
    int tf = s.to_value[static_cast<std::size_t>(f.from)];
    int tt = s.to_value[static_cast<std::size_t>(f.to)];
    if (tf >= tt) {
      out.push_back({"C3", "module " + dag.modules[static_cast<std::size_t>(f.to)].name +
                               " is not after its predecessor"});
    }
  }
  return out;
}

AppCost app_cost(const Router& r, const AppDag& dag, const ScheduleSet& s, const Placement& x,
                 const CostWeights& w, const DeviceEnergyProfile& p) {
  AppCost out;
  out.violations = check_constraints(r.topology(), dag, s, x);
  if (!out.ok()) return out;
  for (int t = 0; t < s.count(); ++t) {
    ScheduleCost sc = schedule_cost(r, dag, s, x, w, p, t);
    out.total += sc.psi;
    out.time += sc.gamma;
    out.energy += sc.theta;
    out.schedules.push_back(sc);
  }
  return out;
}

double partial_app_cost(const Router& r, const AppDag& dag, const ScheduleSet& s,
                        const Placement& x, const CostWeights& w,
                        const DeviceEnergyProfile& p) {
  double total = 0.0;
  for (int t = 0; t < s.count(); ++t) total += schedule_cost_impl(r, dag, s, x, w, p, t, true).psi;
  return total;
}

MigrationCost module_migration_cost(const Router& r, const DeviceEnergyProfile& p,
                                    const MigrationParams& params, const CostWeights& w,
                                    double dump_bits, ServerId from, ServerId to,
                                    double remaining_mi) {
  const double cpu = r.topology().node(to).cpu_mips;
  if (remaining_mi > 0 && !(cpu > 0)) throw CostError("server " + to_string(to) + " has no cpu");
  const double t_rem = remaining_mi > 0 ? remaining_mi / cpu : 0.0;
  MigrationCost c;
  c.time = internodal_latency(r, from, to) + params.i_mig_s +
           transmission_time(r, dump_bits, from, to) + t_rem;
  c.energy = internodal_energy(r, p, from, to) + params.i_mig_s * p.p_idle +
             transmission_energy(r, p, dump_bits, from, to) +
             t_rem * (to.is_device() ? p.p_cpu : p.p_idle);
  c.weighted = w.w1 * c.time + w.w2 * c.energy;
  return c;
}

MigrationCost combine_schedule_migration(const std::vector<MigrationCost>& costs,
                                         const CostWeights& w) {
  MigrationCost out;
  for (const auto& c : costs) {
    out.time = std::max(out.time, c.time);
    out.energy = std::max(out.energy, c.energy);
  }
  out.weighted = w.w1 * out.time + w.w2 * out.energy;
  return out;
}

bool migration_admissible(double old_cost, double new_cost, double epsilon) {
  return new_cost <= old_cost + epsilon;
}

}  // namespace fogsim
