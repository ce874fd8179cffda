#include "fogsim/placement.hpp"

#include <algorithm>
#include <cmath>

namespace fogsim {

namespace {
constexpr double kTieTol = 1e-12;
}

bool CapacityView::can_host(ServerId id, double ram_mb) const {
  if (!topo_->contains(id)) return false;
  const ServerNode& n = topo_->node(id);
  if (!n.alive || id.is_device()) return false;
  auto s = slots_.find(id);
  auto r = ram_.find(id);
  int extra_slots = s == slots_.end() ? 0 : s->second;
  double extra_ram = r == ram_.end() ? 0.0 : r->second;
  return n.free_slots() - extra_slots > 0 && n.ram_used_mb + extra_ram + ram_mb <= n.ram_capacity_mb;
}

void CapacityView::take(ServerId id, double ram_mb) {
  ++slots_[id];
  ram_[id] += ram_mb;
}

int CapacityView::free_slots(ServerId id) const {
  auto s = slots_.find(id);
  return topo_->node(id).free_slots() - (s == slots_.end() ? 0 : s->second);
}

std::vector<ServerId> ready_servers(const Topology& topo, ServerId node) {
  std::vector<ServerId> out;
  const ServerNode& me = topo.node(node);
  if (me.alive) out.push_back(node);
  for (ServerId cm : me.cluster_members) {
    if (topo.contains(cm) && topo.node(cm).alive) out.push_back(cm);
  }
  if (me.parent && topo.contains(*me.parent) && topo.node(*me.parent).alive) {
    out.push_back(*me.parent);
  }
  return out;
}

std::vector<double> rank_modules(const DecisionContext& ctx, const std::vector<ServerId>& servers,
                                 ServerId device) {
  const AppDag& dag = *ctx.dag;
  const Topology& topo = ctx.topology();
  const auto& w = ctx.weights;
  const auto& p = ctx.profile;
  std::vector<double> exe(static_cast<std::size_t>(dag.module_count()), 0.0);
  for (int m = 0; m < dag.module_count(); ++m) {
    double mi = 0.0;
    for (const auto& f : dag.flows) {
      if (f.to == m) mi += f.instructions_mi;
    }
    const bool pinned = dag.modules[static_cast<std::size_t>(m)].pinned_to_device;
    std::vector<ServerId> where = pinned ? std::vector<ServerId>{device} : servers;
    double t_sum = 0.0, e_sum = 0.0;
    for (ServerId s : where) {
      double cpu = topo.node(s).cpu_mips;
      double t = mi > 0 ? mi / cpu : 0.0;
      t_sum += t;
      e_sum += t * (s.is_device() ? p.p_cpu : p.p_idle);
    }
    const double n = static_cast<double>(where.size());
    exe[static_cast<std::size_t>(m)] = w.w1 * t_sum / n + w.w2 * e_sum / n;
  }
  std::vector<double> tra(dag.flows.size(), 0.0);
  const double pairs = static_cast<double>(servers.size() * servers.size());
  for (std::size_t f = 0; f < dag.flows.size(); ++f) {
    double t_sum = 0.0, e_sum = 0.0;
    for (ServerId a : servers) {
      for (ServerId b : servers) {
        t_sum += transmission_time(*ctx.router, dag.flows[f].payload_bits, a, b);
        e_sum += transmission_energy(*ctx.router, p, dag.flows[f].payload_bits, a, b);
      }
    }
    tra[f] = w.w1 * t_sum / pairs + w.w2 * e_sum / pairs;
  }
  return upward_rank(dag, exe, tra);
}

std::optional<ServerId> find_min_cost(const DecisionContext& ctx,
                                      const std::vector<ServerId>& candidates, const Placement& x,
                                      int module, const CapacityView& cap) {
  const double ram = ctx.dag->modules.at(static_cast<std::size_t>(module)).container_ram_mb;
  std::optional<ServerId> best;
  double best_cost = 0.0, best_own = 0.0;
  Placement trial = x;
  for (ServerId s : candidates) {
    if (!cap.can_host(s, ram)) continue;
    trial.assignment[static_cast<std::size_t>(module)] = s;
    double cost = partial_app_cost(*ctx.router, *ctx.dag, *ctx.schedules, trial, ctx.weights,
                                   ctx.profile);
    ModuleCost own_c = module_cost(*ctx.router, *ctx.dag, ctx.profile, trial, module, true);
    double own = ctx.weights.w1 * own_c.time() + ctx.weights.w2 * own_c.energy();
    bool better = false;
    if (!best) {
      better = true;
    } else if (cost < best_cost - kTieTol) {
      better = true;
    } else if (std::abs(cost - best_cost) <= kTieTol) {
      if (own < best_own - kTieTol) {
        better = true;
      } else if (std::abs(own - best_own) <= kTieTol) {
        better = s < *best;  // lower level, then lower index
      }
    }
    if (better) {
      best = s;
      best_cost = cost;
      best_own = own;
    }
  }
  return best;
}

PlacementDecision dapt_place(const DecisionContext& ctx, ServerId node, const Placement& x,
                             const std::vector<int>& unassigned, const CapacityView& cap,
                             const std::set<ServerId>& excluded) {
  PlacementDecision out;
  std::vector<ServerId> sr;
  for (ServerId s : ready_servers(ctx.topology(), node)) {
    if (!excluded.count(s)) sr.push_back(s);
  }
  std::set<int> todo(unassigned.begin(), unassigned.end());
  std::vector<int> order;
  if (!sr.empty()) {
    auto rank = rank_modules(ctx, sr, x.device);
    for (int m : priority_order(*ctx.schedules, rank)) {
      if (todo.count(m)) order.push_back(m);
    }
  } else {
    order.assign(todo.begin(), todo.end());
  }
  Placement work = x;
  CapacityView local = cap;
  bool escalating = sr.empty();
  for (int m : order) {
    if (!escalating) {
      auto s = find_min_cost(ctx, sr, work, m, local);
      if (s) {
        work.assignment[static_cast<std::size_t>(m)] = *s;
        local.take(*s, ctx.dag->modules[static_cast<std::size_t>(m)].container_ram_mb);
        out.assigned.emplace_back(m, *s);
        continue;
      }
      escalating = true;
    }
    out.escalated.push_back(m);
  }
  return out;
}

PlacementDecision dapt_failure_recovery(const DecisionContext& ctx, ServerId node,
                                        const Placement& x, const std::vector<int>& failed,
                                        ServerId failed_server, const CapacityView& cap) {
  const Topology& topo = ctx.topology();
  const auto& parent = topo.node(node).parent;
  bool only_parent = true;
  for (ServerId s : ready_servers(topo, node)) {
    if (s == failed_server || (parent && s == *parent)) continue;
    only_parent = false;
  }
  if (only_parent) {
    PlacementDecision out;
    out.escalated = failed;
    return out;
  }
  return dapt_place(ctx, node, x, failed, cap, {failed_server});
}

RemotePlacementResult handle_remote_placement(Topology& topo, ServerId node, const AppDag& dag,
                                              const std::vector<int>& modules) {
  RemotePlacementResult out;
  for (int m : modules) {
    const double ram = dag.modules.at(static_cast<std::size_t>(m)).container_ram_mb;
    const ServerNode& n = topo.node(node);
    bool reserved = n.reserved_containers > 0;
    bool fits = n.alive && n.ram_used_mb + ram <= n.ram_capacity_mb &&
                (reserved || n.free_slots() > 0);
    if (fits) {
      topo.occupy_slot(node, ram, reserved);
      out.started.push_back(m);
    } else {
      if (reserved) topo.release_reservation(node);
      out.failed.push_back(m);
    }
  }
  return out;
}

}  // namespace fogsim
