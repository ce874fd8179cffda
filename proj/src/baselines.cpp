#include "fogsim/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

namespace fogsim {

const char* to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::Proposed: return "Proposed";
    case PolicyKind::MAAS: return "MAAS";
    case PolicyKind::Urmila: return "Urmila";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "proposed" || t == "dapt" || t == "dapt_mmt") return PolicyKind::Proposed;
  if (t == "maas") return PolicyKind::MAAS;
  if (t == "urmila") return PolicyKind::Urmila;
  throw std::invalid_argument("unknown policy '" + text + "'");
}

PlacementDecision maas_place(const DecisionContext& ctx, ServerId node, const Placement& x,
                             const std::vector<int>& unassigned, const CapacityView& cap) {
  PlacementDecision out;
  std::set<int> todo(unassigned.begin(), unassigned.end());
  CapacityView local = cap;
  bool forwarding = false;
  for (const auto& group : ctx.schedules->schedules) {
    for (int m : group) {
      if (!todo.count(m)) continue;
      const double ram = ctx.dag->modules[static_cast<std::size_t>(m)].container_ram_mb;
      if (!forwarding && local.can_host(node, ram)) {
        local.take(node, ram);
        out.assigned.emplace_back(m, node);
      } else {
        forwarding = true;
        out.escalated.push_back(m);
      }
    }
  }
  (void)x;
  return out;
}

std::optional<ServerId> nearest_sensed(const Topology& topo, Vec2 pos,
                                       std::optional<ServerId> exclude) {
  std::optional<ServerId> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (ServerId s : sensed_fogs(topo, pos)) {
    if (exclude && s == *exclude) continue;
    double d = distance(pos, topo.node(s).position);
    if (d < best_d) {
      best_d = d;
      best = s;
    }
  }
  return best;
}

MigrationDecision maas_migration_req(const DecisionContext& ctx, const MigrationParams& params,
                                     ServerId node, const std::vector<MigrationItem>& items,
                                     const CapacityView& cap, bool top_level) {
  MigrationDecision out;
  CapacityView local = cap;
  bool forwarding = false;
  std::vector<MigrationItem> ordered = items;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [&](const MigrationItem& a, const MigrationItem& b) {
                     return ctx.schedules->to_value[static_cast<std::size_t>(a.module)] <
                            ctx.schedules->to_value[static_cast<std::size_t>(b.module)];
                   });
  for (const auto& item : ordered) {
    if (item.from == node) {
      out.stayed.push_back(item.module);
      continue;
    }
    if (!forwarding && local.can_host(node, item.ram_mb)) {
      local.take(node, item.ram_mb);
      out.moves.push_back({item.module, item.from, node,
                           module_migration_cost(*ctx.router, ctx.profile, params, ctx.weights,
                                                 item.dump_bits, item.from, node,
                                                 item.remaining_mi)});
      continue;
    }
    forwarding = true;
    if (top_level) {
      out.stayed.push_back(item.module);
    } else {
      out.escalated.push_back(item);
    }
  }
  return out;
}

ServerId central_controller(const Topology& topo) {
  for (int level = topo.max_fog_level(); level >= 1; --level) {
    for (ServerId id : topo.ids_at_level(level)) {
      if (topo.node(id).alive) return id;
    }
  }
  return topo.cloud();
}

PlacementDecision urmila_place(const DecisionContext& ctx, const Placement& x,
                               const std::vector<int>& unassigned, const CapacityView& cap) {
  PlacementDecision out;
  std::vector<ServerId> all;
  for (ServerId s : ctx.topology().servers()) {
    if (ctx.topology().node(s).alive) all.push_back(s);
  }
  auto rank = rank_modules(ctx, all, x.device);
  std::set<int> todo(unassigned.begin(), unassigned.end());
  Placement work = x;
  CapacityView local = cap;
  for (int m : priority_order(*ctx.schedules, rank)) {
    if (!todo.count(m)) continue;
    auto s = find_min_cost(ctx, all, work, m, local);
    if (!s) {
      out.escalated.push_back(m);
      continue;
    }
    work.assignment[static_cast<std::size_t>(m)] = *s;
    local.take(*s, ctx.dag->modules[static_cast<std::size_t>(m)].container_ram_mb);
    out.assigned.emplace_back(m, *s);
  }
  return out;
}

MigrationCost relayed_migration_cost(const Router& r, const DeviceEnergyProfile& p,
                                     const MigrationParams& params, const CostWeights& w,
                                     double dump_bits, ServerId from, ServerId via, ServerId to,
                                     double remaining_mi) {
  const double cpu = r.topology().node(to).cpu_mips;
  const double t_rem = remaining_mi > 0 && cpu > 0 ? remaining_mi / cpu : 0.0;
  MigrationCost c;
  c.time = internodal_latency(r, from, via) + internodal_latency(r, via, to) + params.i_mig_s +
           transmission_time(r, dump_bits, from, via) + transmission_time(r, dump_bits, via, to) +
           t_rem;
  c.energy = internodal_energy(r, p, from, via) + internodal_energy(r, p, via, to) +
             params.i_mig_s * p.p_idle + transmission_energy(r, p, dump_bits, from, via) +
             transmission_energy(r, p, dump_bits, via, to) +
             t_rem * (to.is_device() ? p.p_cpu : p.p_idle);
  c.weighted = w.w1 * c.time + w.w2 * c.energy;
  return c;
}

MigrationDecision urmila_migration(const DecisionContext& ctx, const MigrationParams& params,
                                   ServerId central, const std::vector<MigrationItem>& items,
                                   const Placement& x, const CapacityView& cap) {
  MigrationDecision out;
  CapacityView local = cap;
  std::vector<ServerId> all;
  for (ServerId s : ctx.topology().servers()) {
    if (ctx.topology().node(s).alive) all.push_back(s);
  }
  std::vector<MigrationItem> ordered = items;
  sort_by_ram(ordered);
  Placement work = x;
  for (const auto& item : ordered) {
    const auto idx = static_cast<std::size_t>(item.module);
    ServerId best = item.from;
    double best_cost = std::numeric_limits<double>::infinity();
    for (ServerId s : all) {
      if (s == item.from || !local.can_host(s, item.ram_mb)) continue;
      work.assignment[idx] = s;
      double c = partial_app_cost(*ctx.router, *ctx.dag, *ctx.schedules, work, ctx.weights,
                                  ctx.profile);
      if (c < best_cost) {
        best = s;
        best_cost = c;
      }
    }
    work.assignment[idx] = best;
    if (best == item.from) {
      out.stayed.push_back(item.module);
      continue;
    }
    local.take(best, item.ram_mb);
    out.moves.push_back({item.module, item.from, best,
                         relayed_migration_cost(*ctx.router, ctx.profile, params, ctx.weights,
                                                item.dump_bits, item.from, central, best,
                                                item.remaining_mi)});
  }
  return out;
}

}  // namespace fogsim
