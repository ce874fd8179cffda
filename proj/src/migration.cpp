#include "fogsim/migration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fogsim {

double sojourn_time(Vec2 pos, Vec2 vel, Vec2 center, double radius) {
  const double dx = pos.x - center.x, dy = pos.y - center.y;
  const double a = vel.x * vel.x + vel.y * vel.y;
  const double c = dx * dx + dy * dy - radius * radius;
  if (a == 0.0) return c <= 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  const double b = 2.0 * (dx * vel.x + dy * vel.y);
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return 0.0;
  const double t = (-b + std::sqrt(disc)) / (2.0 * a);
  return t > 0.0 ? t : 0.0;
}

bool departure_detected(Vec2 pos, Vec2 vel, Vec2 center, double radius, double fraction) {
  const double dx = pos.x - center.x, dy = pos.y - center.y;
  if (std::hypot(dx, dy) <= fraction * radius) return false;
  return dx * vel.x + dy * vel.y > 0.0;
}

std::vector<ServerId> sensed_fogs(const Topology& topo, Vec2 pos) {
  std::vector<ServerId> out;
  for (ServerId id : topo.ids_at_level(1)) {
    const ServerNode& n = topo.node(id);
    if (n.alive && n.covers(pos)) out.push_back(id);
  }
  return out;
}

bool reachable_from(const Topology& topo, ServerId controller, ServerId candidate) {
  const auto& members = topo.node(controller).cluster_members;
  if (members.count(candidate)) return true;
  for (ServerId m : members) {
    if (topo.contains(m) && topo.node(m).alive && topo.node(m).cluster_members.count(candidate)) {
      return true;
    }
  }
  return false;
}

std::optional<ServerId> analyze_mobility(const Topology& topo, ServerId controller,
                                         const MobilityState& mob, int modules_on_controller,
                                         const std::function<std::size_t(std::size_t)>& pick_random) {
  std::vector<ServerId> reach, unreach;
  for (ServerId s : mob.sensed) {
    if (s == controller) continue;
    (reachable_from(topo, controller, s) ? reach : unreach).push_back(s);
  }
  auto best_sojourn = [&](const std::vector<ServerId>& pool) -> std::optional<ServerId> {
    std::optional<ServerId> best;
    double best_t = -1.0;
    for (ServerId s : pool) {
      const ServerNode& n = topo.node(s);
      double t = sojourn_time(mob.position, mob.velocity, n.position, n.coverage_radius);
      if (t > best_t) {
        best_t = t;
        best = s;
      }
    }
    return best;
  };
  std::vector<ServerId> sufficient;
  for (ServerId s : reach) {
    if (topo.node(s).free_slots() >= modules_on_controller) sufficient.push_back(s);
  }
  if (auto s = best_sojourn(sufficient)) return s;
  if (auto s = best_sojourn(reach)) return s;
  if (!unreach.empty()) return unreach[pick_random(unreach.size())];
  return std::nullopt;
}

ServerId migration_decider(const Topology& topo, ServerId new_controller, ServerId previous) {
  if (previous.level <= new_controller.level) return new_controller;
  if (auto a = topo.ancestor_at_level(new_controller, previous.level)) return *a;
  return previous;
}

void sort_by_ram(std::vector<MigrationItem>& items) {
  std::stable_sort(items.begin(), items.end(), [](const MigrationItem& a, const MigrationItem& b) {
    if (a.ram_mb != b.ram_mb) return a.ram_mb > b.ram_mb;
    return a.module < b.module;
  });
}

std::vector<ServerId> migration_candidates(const Topology& topo, ServerId node) {
  std::set<ServerId> out;
  const ServerNode& me = topo.node(node);
  if (me.alive) out.insert(node);
  for (ServerId cm : me.cluster_members) {
    if (topo.contains(cm) && topo.node(cm).alive) out.insert(cm);
  }
  for (ServerId ch : me.children) {
    if (!ch.is_device() && topo.contains(ch) && topo.node(ch).alive) out.insert(ch);
  }
  return {out.begin(), out.end()};
}

MigrationDecision handle_migration_req(const DecisionContext& ctx, const MigrationParams& params,
                                       ServerId node, const std::vector<MigrationItem>& items,
                                       const Placement& x, double reference_cost,
                                       const CapacityView& cap, const std::set<ServerId>& excluded,
                                       bool top_level) {
  MigrationDecision out;
  std::vector<ServerId> sr;
  for (ServerId s : migration_candidates(ctx.topology(), node)) {
    if (!excluded.count(s)) sr.push_back(s);
  }
  std::vector<MigrationItem> ordered = items;
  sort_by_ram(ordered);
  Placement work = x;
  CapacityView local = cap;
  const double limit = reference_cost * (1.0 + params.epsilon_fraction);
  for (const auto& item : ordered) {
    struct Scored {
      ServerId to;
      MigrationCost cost;
    };
    std::vector<Scored> scored;
    for (ServerId s : sr) {
      if (s == item.from || !local.can_host(s, item.ram_mb)) continue;
      scored.push_back({s, module_migration_cost(*ctx.router, ctx.profile, params, ctx.weights,
                                                 item.dump_bits, item.from, s, item.remaining_mi)});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
      if (a.cost.weighted != b.cost.weighted) return a.cost.weighted < b.cost.weighted;
      return a.to < b.to;
    });
    std::optional<Scored> chosen;
    std::optional<Scored> cheapest_app;
    double cheapest_app_cost = 0.0;
    for (const auto& c : scored) {
      work.assignment[static_cast<std::size_t>(item.module)] = c.to;
      double cost = partial_app_cost(*ctx.router, *ctx.dag, *ctx.schedules, work, ctx.weights,
                                     ctx.profile);
      if (cost <= limit) {
        chosen = c;
        break;
      }
      if (!cheapest_app || cost < cheapest_app_cost) {
        cheapest_app = c;
        cheapest_app_cost = cost;
      }
    }
    if (!chosen && top_level) chosen = cheapest_app;
    if (chosen) {
      work.assignment[static_cast<std::size_t>(item.module)] = chosen->to;
      local.take(chosen->to, item.ram_mb);
      out.moves.push_back({item.module, item.from, chosen->to, chosen->cost});
    } else {
      work.assignment[static_cast<std::size_t>(item.module)] = item.from;
      if (top_level) {
        out.stayed.push_back(item.module);
      } else {
        out.escalated.push_back(item);
      }
    }
  }
  return out;
}

MigrationDecision mmt_failure_recovery(const DecisionContext& ctx, const MigrationParams& params,
                                       ServerId controller, const MigrationItem& item,
                                       ServerId failed_server, const Placement& x,
                                       double reference_cost, const CapacityView& cap) {
  return handle_migration_req(ctx, params, controller, {item}, x, reference_cost, cap,
                              {failed_server}, false);
}

}  // namespace fogsim
