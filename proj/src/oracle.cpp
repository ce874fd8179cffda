#include "fogsim/oracle.hpp"

#include <algorithm>
#include <limits>

#include "fogsim/placement.hpp"

namespace fogsim {

namespace {

struct Search {
  const OracleInput& in;
  std::vector<int> order;
  std::vector<std::vector<ServerId>> candidates;  // per position in order
  std::vector<double> lb_t, lb_e;                 // per module
  std::vector<double> g, e;                       // per schedule, fixed modules
  std::map<ServerId, int> slots;
  Placement x;
  OracleResult best;
  bool aborted = false;
  bool use_bound = true;

  explicit Search(const OracleInput& input) : in(input) {}

  bool has_slot(ServerId s) const {
    auto it = slots.find(s);
    return it == slots.end() || it->second > 0;
  }
  void take(ServerId s, int delta) {
    auto it = slots.find(s);
    if (it != slots.end()) it->second += delta;
  }

  double bound() const {
    const auto& sched = *in.schedules;
    double total = 0.0;
    for (int t = 0; t < sched.count(); ++t) {
      double gt = g[static_cast<std::size_t>(t)], et = e[static_cast<std::size_t>(t)];
      for (int m : sched.schedules[static_cast<std::size_t>(t)]) {
        if (x.assignment[static_cast<std::size_t>(m)]) continue;
        gt = std::max(gt, lb_t[static_cast<std::size_t>(m)]);
        et = std::max(et, lb_e[static_cast<std::size_t>(m)]);
      }
      total += in.weights.w1 * gt + in.weights.w2 * et;
    }
    return total;
  }

  void dfs(std::size_t k) {
    if (aborted) return;
    if (k == order.size()) {
      double cost = 0.0;
      for (std::size_t t = 0; t < g.size(); ++t) cost += in.weights.w1 * g[t] + in.weights.w2 * e[t];
      if (!best.feasible || cost < best.cost - 1e-12) {
        best.feasible = true;
        best.cost = cost;
        best.placement = x;
      }
      return;
    }
    const int m = order[k];
    const bool pinned = in.dag->modules[static_cast<std::size_t>(m)].pinned_to_device;
    const int t = in.schedules->to_value[static_cast<std::size_t>(m)] - 1;
    for (ServerId s : candidates[k]) {
      if (!pinned && !has_slot(s)) continue;
      if (++best.nodes > in.node_budget) {
        aborted = true;
        return;
      }
      x.assignment[static_cast<std::size_t>(m)] = s;
      if (!pinned) take(s, -1);
      ModuleCost c = module_cost(*in.router, *in.dag, in.profile, x, m);
      const double g_old = g[static_cast<std::size_t>(t)], e_old = e[static_cast<std::size_t>(t)];
      g[static_cast<std::size_t>(t)] = std::max(g_old, c.time());
      e[static_cast<std::size_t>(t)] = std::max(e_old, c.energy());
      if (!use_bound || !best.feasible || bound() < best.cost - 1e-12) dfs(k + 1);
      g[static_cast<std::size_t>(t)] = g_old;
      e[static_cast<std::size_t>(t)] = e_old;
      if (!pinned) take(s, +1);
      x.assignment[static_cast<std::size_t>(m)].reset();
      if (aborted) return;
    }
  }
};

Search prepare(const OracleInput& in) {
  Search s(in);
  const AppDag& dag = *in.dag;
  std::vector<ServerId> servers = in.servers;
  std::sort(servers.begin(), servers.end());
  DecisionContext ctx{in.router, in.dag, in.schedules, in.weights, in.profile};
  std::vector<double> rank = servers.empty() ? std::vector<double>(dag.modules.size(), 0.0)
                                             : rank_modules(ctx, servers, in.device);
  s.order = priority_order(*in.schedules, rank);
  s.x = Placement::empty_for(dag, in.device);
  for (auto& a : s.x.assignment) a.reset();
  s.lb_t.assign(dag.modules.size(), 0.0);
  s.lb_e.assign(dag.modules.size(), 0.0);
  const Topology& topo = in.router->topology();
  for (int m = 0; m < dag.module_count(); ++m) {
    double mi = 0.0;
    for (const auto& f : dag.flows) {
      if (f.to == m) mi += f.instructions_mi;
    }
    const bool pinned = dag.modules[static_cast<std::size_t>(m)].pinned_to_device;
    std::vector<ServerId> where = pinned ? std::vector<ServerId>{in.device} : servers;
    double bt = std::numeric_limits<double>::infinity(), be = bt;
    for (ServerId srv : where) {
      double tt = mi > 0 ? mi / topo.node(srv).cpu_mips : 0.0;
      bt = std::min(bt, tt);
      be = std::min(be, tt * (srv.is_device() ? in.profile.p_cpu : in.profile.p_idle));
    }
    s.lb_t[static_cast<std::size_t>(m)] = where.empty() ? 0.0 : bt;
    s.lb_e[static_cast<std::size_t>(m)] = where.empty() ? 0.0 : be;
  }
  for (int m : s.order) {
    bool pinned = dag.modules[static_cast<std::size_t>(m)].pinned_to_device;
    s.candidates.push_back(pinned ? std::vector<ServerId>{in.device} : servers);
  }
  s.g.assign(static_cast<std::size_t>(in.schedules->count()), 0.0);
  s.e.assign(static_cast<std::size_t>(in.schedules->count()), 0.0);
  s.slots = in.free_slots;
  s.best.placement = Placement::empty_for(dag, in.device);
  return s;
}

}  // namespace

OracleResult optimal_placement(const OracleInput& in) {
  Search s = prepare(in);
  s.dfs(0);
  s.best.complete = !s.aborted;
  return s.best;
}

OracleResult exhaustive_placement(const OracleInput& in) {
  OracleResult best;
  best.placement = Placement::empty_for(*in.dag, in.device);
  std::vector<int> free_mods;
  for (int m = 0; m < in.dag->module_count(); ++m) {
    if (!in.dag->modules[static_cast<std::size_t>(m)].pinned_to_device) free_mods.push_back(m);
  }
  std::vector<ServerId> servers = in.servers;
  std::sort(servers.begin(), servers.end());
  std::vector<std::size_t> digit(free_mods.size(), 0);
  Placement x = Placement::empty_for(*in.dag, in.device);
  if (servers.empty() && !free_mods.empty()) {
    best.complete = true;
    return best;
  }
  while (true) {
    std::map<ServerId, int> used;
    for (std::size_t i = 0; i < free_mods.size(); ++i) {
      ServerId s = servers[digit[i]];
      x.assignment[static_cast<std::size_t>(free_mods[i])] = s;
      ++used[s];
    }
    bool fits = true;
    for (const auto& [s, n] : used) {
      auto it = in.free_slots.find(s);
      if (it != in.free_slots.end() && n > it->second) fits = false;
    }
    ++best.nodes;
    if (fits) {
      double cost = 0.0;
      for (int t = 0; t < in.schedules->count(); ++t) {
        cost += schedule_cost(*in.router, *in.dag, *in.schedules, x, in.weights, in.profile, t).psi;
      }
      if (!best.feasible || cost < best.cost) {
        best.feasible = true;
        best.cost = cost;
        best.placement = x;
      }
    }
    std::size_t i = 0;
    while (i < digit.size() && ++digit[i] == servers.size()) digit[i++] = 0;
    if (i == digit.size()) break;
  }
  best.complete = true;
  return best;
}

}  // namespace fogsim
