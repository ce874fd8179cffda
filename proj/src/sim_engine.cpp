#include "fogsim/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <queue>
#include <set>

#include "fogsim/clustering.hpp"
#include "fogsim/oracle.hpp"

namespace fogsim {

const MetricsSummary& RunResult::at(double horizon) const {
  for (const auto& s : snapshots) {
    if (std::abs(s.horizon_s - horizon) < 1e-9) return s;
  }
  throw std::out_of_range("no metrics captured at horizon " + std::to_string(horizon));
}

namespace {

using nlohmann::json;

struct Event {
  double t = 0.0;
  int prio = 0;
  std::uint64_t seq = 0;
  std::function<void()> fn;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t != b.t) return a.t > b.t;
    if (a.prio != b.prio) return a.prio > b.prio;
    return a.seq > b.seq;
  }
};

struct Window {
  double start = 0.0;
  double end = 0.0;
};

// Timing of one task through the serving placement.
struct Profile {
  bool valid = false;
  std::vector<double> sched_start;  // offset of each schedule from emission
  std::vector<double> arrive;       // per module, inputs in, relative to its schedule
  std::vector<double> exe;
  double response = 0.0;
  double energy = 0.0;
};

struct Task {
  double emit = 0.0;
  std::shared_ptr<const Profile> prof;
  double finish = 0.0;
  double delay = 0.0;
  bool interrupted = false;
  bool dropped = false;
};

struct Round {
  ServerId old_ctrl;
  ServerId new_ctrl;
  ServerId coordinator;
  double reference = 0.0;
  std::vector<std::vector<MigrationItem>> groups;  // per schedule
  std::size_t next_group = 0;
  int open = 0;  // decisions, destinations, starts and notifications outstanding
  int moved = 0;
  std::map<int, std::vector<MigrationCost>> costs;  // per schedule
};

struct Device {
  int idx = 0;
  ServerId id;
  std::string app;
  AppDag dag;
  ScheduleSet sched;
  Placement planned;  // decided, including migrations in progress
  Placement active;   // serving
  int outstanding = 0;
  bool placing = false;
  bool placed = false;
  bool rejected = false;
  double request_time = 0.0;
  double pdt = -1.0;

  std::int64_t next_k = 1;
  std::vector<Task> pending;
  std::vector<std::vector<Window>> windows;
  std::uint64_t version = 0;
  std::shared_ptr<const Profile> profile;
  std::uint64_t prof_version = ~0ull;
  std::uint64_t prof_global = ~0ull;

  long emitted = 0, completed = 0, dropped = 0, tit = 0;
  double sum_rt = 0.0, sum_e = 0.0;
  long migrations = 0, handovers = 0, moves = 0, mig_failures = 0;
  double cmt = 0.0, cmec = 0.0;

  WalkState walk;
  std::mt19937_64 walk_rng, dump_rng, fail_rng, pick_rng;
  std::optional<Round> round;
  int open_windows = 0;
  bool in_handover = false;
  double cooldown = 0.0;

  bool oracle_done = false;
  bool oracle_complete = true;
  std::optional<double> oracle_cost;
  std::optional<double> policy_cost;
};

json jid(ServerId id) { return to_string(id); }

class Engine {
 public:
  Engine(const Scenario& s, const RunOptions& o) : sc_(s), opt_(o) {}
  RunResult run();

 private:
  // kernel
  void at(double t, std::function<void()> fn, int prio = 0) {
    q_.push(Event{t, prio, seq_++, std::move(fn)});
  }
  double hop_latency(ServerId a, ServerId b) const;
  double latency(ServerId a, ServerId b) const;
  void deliver(ServerId from, ServerId to, bool serviced, std::function<void()> fn);
  void serve(ServerId node, std::function<void()> fn);
  void log(const char* ev, json f = json::object());
  DecisionContext ctx(const Device& d) const {
    return DecisionContext{&router_, &d.dag, &d.sched, sc_.weights, sc_.energy};
  }
  ServerId central() const { return central_controller(topo_); }

  // setup
  void setup();
  std::optional<ServerId> attach_point(Vec2 pos) const;
  void static_clustering();

  // clustering
  void cluster_send(ServerId from, const std::vector<Outgoing>& outs);
  void cluster_receive(ServerId self, const ControlMessage& msg);
  void heartbeat(long k);
  void crash(ServerId id);
  void crash_detected(ServerId id);

  // placement
  void start_placement(Device& d);
  void request_placement(Device& d, ServerId from, std::vector<int> mods);
  void decide_placement(int idx, ServerId node, std::vector<int> mods,
                        std::optional<ServerId> failed);
  void remote_place(int idx, ServerId s, std::vector<int> mods, ServerId decider);
  double start_container(ServerId s, const std::string& type);
  void placement_ack(int idx, int m, ServerId s);
  void reject(Device& d, const std::string& why);
  void maybe_run_oracle(Device& d);

  // tasks
  std::shared_ptr<const Profile> profile(Device& d);
  void evaluate(const Device& d, Task& k) const;
  void emit(Device& d, double e);
  void finalize_task(Device& d, const Task& k);
  void catch_up(Device& d);
  void catch_up_all();
  void add_window(Device& d, int m, double start, double end);
  double remaining_mi(Device& d, int m);

  // mobility and migration
  void mobility_tick(long k);
  void maybe_depart(Device& d);
  void choose_controller(int idx, ServerId old_ctrl);
  void new_controller(int idx, ServerId old_ctrl, ServerId dest);
  void next_group(Device& d);
  void migration_req(int idx, ServerId node, std::vector<MigrationItem> items, bool recovery);
  void dispatch_moves(Device& d, ServerId node, const MigrationDecision& dec,
                      const std::vector<MigrationItem>& items, bool recovery);
  void migration_destination(int idx, MigrationItem item, ServerId to, bool recovery);
  void mmt_recovery(int idx, MigrationItem item, ServerId failed);
  void start_migration(int idx, MigrationItem item, ServerId to);
  void end_window(int idx, MigrationItem item, ServerId to);
  void check_group(Device& d);
  void finish_round(Device& d);

  MetricsSummary summarize(double horizon) const;

  const Scenario& sc_;
  RunOptions opt_;
  Topology topo_;
  Router router_{topo_};
  std::vector<Device> devs_;
  std::map<ServerId, ClusterState> cstate_;
  std::map<ServerId, double> busy_;
  std::map<ServerId, std::map<std::string, int>> active_types_;
  std::map<ServerId, std::map<std::string, double>> warming_;
  std::priority_queue<Event, std::vector<Event>, Later> q_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::uint64_t global_version_ = 0;
  RunResult result_;
};

// Latency of a direct link between two nodes, used before routes exist.
double Engine::hop_latency(ServerId a, ServerId b) const {
  if (a == b) return 0.0;
  const LinkParams& l = topo_.links();
  double t = 0.0;
  if (a.level == b.level) {
    double c = l.at(a.level).lat_cluster;
    return c > 0 ? c : l.at(a.level).lat_up + l.at(a.level + 1).lat_down;
  }
  if (a.level < b.level) {
    for (int h = a.level; h < b.level; ++h) t += l.at(h).lat_up;
  } else {
    for (int h = a.level; h > b.level; --h) t += l.at(h).lat_down;
  }
  return t;
}

double Engine::latency(ServerId a, ServerId b) const {
  if (a == b) return 0.0;
  try {
    return internodal_latency(router_, a, b);
  } catch (const RoutingError&) {
    return hop_latency(a, b);
  } catch (const TopologyError&) {
    return hop_latency(a, b);
  }
}

void Engine::deliver(ServerId from, ServerId to, bool serviced, std::function<void()> fn) {
  const double arrival = now_ + latency(from, to);
  if (!serviced) {
    at(arrival, std::move(fn));
    return;
  }
  at(arrival, [this, to, fn = std::move(fn)]() mutable { serve(to, std::move(fn)); });
}

// FIFO request processing at a deciding node.
void Engine::serve(ServerId node, std::function<void()> fn) {
  double& busy = busy_[node];
  const double start = std::max(now_, busy);
  busy = start + sc_.engine.control_service_s;
  at(busy, std::move(fn));
}

void Engine::log(const char* ev, json f) {
  if (!opt_.events) return;
  f["t"] = now_;
  f["ev"] = ev;
  *opt_.events << f.dump() << '\n';
}

std::optional<ServerId> Engine::attach_point(Vec2 pos) const {
  if (auto s = nearest_sensed(topo_, pos, std::nullopt)) return s;
  std::optional<ServerId> best;
  double best_d = 0.0;
  for (ServerId id : topo_.ids_at_level(1)) {
    if (!topo_.node(id).alive) continue;
    double d = distance(pos, topo_.node(id).position);
    if (!best || d < best_d) {
      best = id;
      best_d = d;
    }
  }
  return best;
}

void Engine::static_clustering() {
  ClusterConfig cfg;
  for (int level = 1; level <= topo_.max_fog_level(); ++level) {
    for (ServerId id : topo_.ids_at_level(level)) {
      if (topo_.node(id).parent) continue;
      std::map<ServerId, double> cand;
      for (ServerId up : topo_.ids_at_level(level + 1)) {
        cand[up] = estimate_parent_latency(topo_, id, up, cfg);
      }
      if (auto p = select_parent(topo_, id, cand)) topo_.set_parent(id, p);
    }
  }
  if (sc_.cluster_links.empty()) {
    for (int level = 1; level <= topo_.max_fog_level(); ++level) {
      auto ids = topo_.ids_at_level(level);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
          if (in_cluster_range(topo_.node(ids[i]), topo_.node(ids[j]))) {
            topo_.add_cluster_link(ids[i], ids[j]);
          }
        }
      }
    }
  }
}

void Engine::setup() {
  Materialized m = materialize(sc_);
  topo_ = Topology::build(m.topology);
  for (const auto& [a, b] : m.cluster_links) topo_.add_cluster_link(a, b);
  if (!sc_.bootstrap_clustering) static_clustering();
  for (ServerId id : topo_.servers()) cstate_[id];

  devs_.resize(m.devices.size());
  for (std::size_t i = 0; i < m.devices.size(); ++i) {
    const DeviceInstance& di = m.devices[i];
    Device& d = devs_[i];
    d.idx = static_cast<int>(i);
    d.id = di.id;
    d.app = di.app;
    d.dag = sc_.apps.at(di.app);
    auto ram_rng = derive_stream(sc_.seed, "ram", i);
    int pinned = 0;
    for (auto& mod : d.dag.modules) {
      if (mod.pinned_to_device) {
        ++pinned;
      } else {
        mod.container_ram_mb = uniform(ram_rng, sc_.engine.ram_min_mb, sc_.engine.ram_max_mb);
      }
    }
    d.sched = build_schedules(d.dag);
    NodeSpec ns;
    ns.id = d.id;
    ns.cpu_mips = sc_.devices.cpu_mips;
    ns.container_capacity = pinned;
    ns.position = di.position;
    ns.parent = attach_point(di.position);
    topo_.add_node(ns);
    d.planned = Placement::empty_for(d.dag, d.id);
    d.active = d.planned;
    d.windows.resize(d.dag.modules.size());
    d.walk_rng = derive_stream(sc_.seed, "walk", i);
    d.dump_rng = derive_stream(sc_.seed, "dump", i);
    d.fail_rng = derive_stream(sc_.seed, "failure", i);
    d.pick_rng = derive_stream(sc_.seed, "handover", i);
    d.walk = start_walk(di.position, sc_.area, sc_.mobility.walk, d.walk_rng);
  }
}

// ---------------------------------------------------------------- clustering

void Engine::cluster_send(ServerId from, const std::vector<Outgoing>& outs) {
  for (const auto& o : outs) {
    at(now_ + hop_latency(from, o.dest), [this, o] { cluster_receive(o.dest, o.msg); });
  }
}

void Engine::cluster_receive(ServerId self, const ControlMessage& msg) {
  if (!topo_.contains(self)) return;
  LocalContainers local;
  for (const auto& [type, n] : active_types_[self]) {
    (n > 0 ? local.active : local.inactive).push_back(type);
  }
  HandlerResult r = handle_cluster_message(self, cstate_[self], msg, topo_, ClusterConfig{}, local);
  if (!r.deltas.empty()) {
    catch_up_all();
    apply_deltas(topo_, self, r.deltas);
    ++global_version_;
  }
  log("cluster", {{"kind", to_string(msg.kind)}, {"node", jid(self)}, {"from", jid(msg.source)}});
  cluster_send(self, r.out);
}

void Engine::heartbeat(long k) {
  for (int level = 1; level <= topo_.max_fog_level(); ++level) {
    for (ServerId id : topo_.ids_at_level(level)) {
      const ServerNode& n = topo_.node(id);
      if (!n.alive) continue;
      if (n.parent && topo_.contains(*n.parent) && topo_.node(*n.parent).alive) continue;
      for (ServerId up : topo_.ids_at_level(level + 1)) {
        const ServerNode& u = topo_.node(up);
        if (!u.alive) continue;
        ControlMessage m;
        m.kind = ClusterMsgKind::CandidParent;
        m.source = up;
        m.position = u.position;
        m.coverage_radius = u.coverage_radius;
        cluster_send(up, {Outgoing{id, m}});
      }
    }
  }
  const double hb = sc_.engine.heartbeat_s;
  at(static_cast<double>(k + 1) * hb, [this, k] { heartbeat(k + 1); });
}

void Engine::crash(ServerId id) {
  if (!topo_.contains(id) || !topo_.node(id).alive) return;
  catch_up_all();
  topo_.set_alive(id, false);
  ++global_version_;
  log("crash", {{"node", jid(id)}});
  at(now_ + sc_.engine.heartbeat_misses * sc_.engine.heartbeat_s, [this, id] { crash_detected(id); });
}

void Engine::crash_detected(ServerId id) {
  log("crash_detected", {{"node", jid(id)}});
  if (auto p = topo_.node(id).parent; p && topo_.contains(*p) && topo_.node(*p).alive) {
    ControlMessage m;
    m.kind = ClusterMsgKind::StartFogFailureRecovery;
    m.source = *p;
    m.subject = id;
    cluster_receive(*p, m);
  }
  for (auto& d : devs_) {
    if (d.rejected) continue;
    catch_up(d);
    if (topo_.node(d.id).parent == id) {
      if (auto np = attach_point(d.walk.position)) {
        topo_.set_parent(d.id, np);
        ++d.version;
      }
    }
    std::vector<int> lost;
    for (int m = 0; m < d.dag.module_count(); ++m) {
      auto& pl = d.planned.assignment[static_cast<std::size_t>(m)];
      auto& ac = d.active.assignment[static_cast<std::size_t>(m)];
      if (d.dag.modules[static_cast<std::size_t>(m)].pinned_to_device) continue;
      if ((pl && *pl == id) || (ac && *ac == id)) {
        lost.push_back(m);
        pl.reset();
        ac.reset();
      }
    }
    if (lost.empty()) continue;
    ++d.version;
    d.placed = false;
    d.placing = true;
    d.outstanding += static_cast<int>(lost.size());
    log("replace", {{"device", jid(d.id)}, {"modules", lost.size()}});
    request_placement(d, d.id, lost);
  }
}

// ----------------------------------------------------------------- placement

void Engine::start_placement(Device& d) {
  std::vector<int> mods;
  for (int m = 0; m < d.dag.module_count(); ++m) {
    if (!d.dag.modules[static_cast<std::size_t>(m)].pinned_to_device) mods.push_back(m);
  }
  d.request_time = now_;
  d.placing = true;
  d.outstanding = static_cast<int>(mods.size());
  log("place_request", {{"device", jid(d.id)}, {"app", d.app}});
  if (mods.empty()) {
    d.placing = false;
    d.placed = true;
    d.pdt = 0.0;
    return;
  }
  request_placement(d, d.id, mods);
}

void Engine::request_placement(Device& d, ServerId from, std::vector<int> mods) {
  auto ctrl = topo_.node(d.id).parent;
  if (!ctrl) {
    reject(d, "no controller");
    return;
  }
  const int idx = d.idx;
  if (sc_.policy == PolicyKind::Urmila) {
    ServerId c = *ctrl;
    at(now_ + latency(from, c), [this, idx, c, mods] {
      ServerId cc = central();
      deliver(c, cc, true, [this, idx, cc, mods] { decide_placement(idx, cc, mods, std::nullopt); });
    });
    return;
  }
  ServerId c = *ctrl;
  deliver(from, c, true, [this, idx, c, mods] { decide_placement(idx, c, mods, std::nullopt); });
}

void Engine::maybe_run_oracle(Device& d) {
  if (!opt_.optimality || d.oracle_done) return;
  d.oracle_done = true;
  OracleInput in;
  in.router = &router_;
  in.dag = &d.dag;
  in.schedules = &d.sched;
  in.weights = sc_.weights;
  in.profile = sc_.energy;
  in.device = d.id;
  for (ServerId s : topo_.servers()) {
    if (!topo_.node(s).alive) continue;
    in.servers.push_back(s);
    in.free_slots[s] = std::max(0, topo_.node(s).free_slots());
  }
  OracleResult r = optimal_placement(in);
  d.oracle_complete = r.complete;
  if (r.complete && r.feasible) d.oracle_cost = r.cost;
  log("oracle", {{"device", jid(d.id)}, {"cost", r.cost}, {"complete", r.complete},
                 {"nodes", r.nodes}});
}

void Engine::decide_placement(int idx, ServerId node, std::vector<int> mods,
                              std::optional<ServerId> failed) {
  Device& d = devs_[static_cast<std::size_t>(idx)];
  if (d.rejected) return;
  if (!topo_.node(node).alive) {
    reject(d, "decision node " + to_string(node) + " is down");
    return;
  }
  maybe_run_oracle(d);
  for (int m : mods) d.planned.assignment[static_cast<std::size_t>(m)].reset();
  CapacityView cap(topo_);
  DecisionContext c = ctx(d);
  PlacementDecision dec;
  switch (sc_.policy) {
    case PolicyKind::Proposed:
      dec = failed ? dapt_failure_recovery(c, node, d.planned, mods, *failed, cap)
                   : dapt_place(c, node, d.planned, mods, cap);
      break;
    case PolicyKind::MAAS:
      dec = maas_place(c, node, d.planned, mods, cap);
      break;
    case PolicyKind::Urmila:
      dec = urmila_place(c, d.planned, mods, cap);
      break;
  }
  std::map<ServerId, std::vector<int>> by_server;
  json assigned = json::array();
  for (const auto& [m, s] : dec.assigned) {
    topo_.reserve_slot(s);
    d.planned.assignment[static_cast<std::size_t>(m)] = s;
    by_server[s].push_back(m);
    assigned.push_back({d.dag.modules[static_cast<std::size_t>(m)].name, to_string(s)});
  }
  log("place_decision", {{"device", jid(d.id)}, {"node", jid(node)}, {"assigned", assigned},
                         {"escalated", dec.escalated.size()}});
  for (const auto& [s, ms] : by_server) {
    ServerId srv = s;
    std::vector<int> list = ms;
    deliver(node, srv, true, [this, idx, srv, list, node] { remote_place(idx, srv, list, node); });
  }
  if (dec.escalated.empty()) return;
  auto par = topo_.node(node).parent;
  if (sc_.policy != PolicyKind::Urmila && par && topo_.node(*par).alive) {
    ServerId p = *par;
    std::vector<int> esc = dec.escalated;
    deliver(node, p, true, [this, idx, p, esc] { decide_placement(idx, p, esc, std::nullopt); });
  } else {
    reject(d, "no server can host the remaining modules");
  }
}

double Engine::start_container(ServerId s, const std::string& type) {
  int& n = active_types_[s][type];
  double& warm = warming_[s][type];
  double ready;
  if (warm > now_) {
    ready = warm;
  } else if (n > 0) {
    ready = now_;
  } else {
    ready = now_ + sc_.engine.container_startup_s;
    warm = ready;
  }
  ++n;
  return ready;
}

void Engine::remote_place(int idx, ServerId s, std::vector<int> mods, ServerId decider) {
  Device& d = devs_[static_cast<std::size_t>(idx)];
  if (d.rejected) {
    for (std::size_t i = 0; i < mods.size(); ++i) topo_.release_reservation(s);
    return;
  }
  RemotePlacementResult res = handle_remote_placement(topo_, s, d.dag, mods);
  for (int m : res.started) {
    const double ready = start_container(s, d.dag.modules[static_cast<std::size_t>(m)].name);
    at(ready, [this, idx, m, s] {
      Device& dd = devs_[static_cast<std::size_t>(idx)];
      ServerId target = sc_.policy == PolicyKind::Urmila ? central()
                                                         : topo_.node(dd.id).parent.value_or(s);
      deliver(s, target, false, [this, idx, m, s] { placement_ack(idx, m, s); });
    });
  }
  if (!res.failed.empty()) {
    for (int m : res.failed) d.planned.assignment[static_cast<std::size_t>(m)].reset();
    log("place_failure", {{"device", jid(d.id)}, {"server", jid(s)}, {"modules", res.failed.size()}});
    std::vector<int> failed = res.failed;
    if (sc_.policy == PolicyKind::Urmila) decider = central();
    deliver(s, decider, true, [this, idx, decider, failed, s] {
      decide_placement(idx, decider, failed, s);
    });
  }
}

void Engine::placement_ack(int idx, int m, ServerId s) {
  Device& d = devs_[static_cast<std::size_t>(idx)];
  const auto& mod = d.dag.modules[static_cast<std::size_t>(m)];
  if (d.rejected) {
    topo_.free_slot(s, mod.container_ram_mb);
    --active_types_[s][mod.name];
    return;
  }
  catch_up(d);
  d.active.assignment[static_cast<std::size_t>(m)] = s;
  ++d.version;
  if (--d.outstanding > 0) return;
  d.placing = false;
  d.placed = true;
  if (d.pdt < 0) {
    d.pdt = now_ - d.request_time;
    d.policy_cost = partial_app_cost(router_, d.dag, d.sched, d.active, sc_.weights, sc_.energy);
    for (const auto& v : check_constraints(topo_, d.dag, d.sched, d.active)) {
      result_.violations.push_back(to_string(d.id) + " " + v.constraint + ": " + v.detail);
    }
  }
  log("placed", {{"device", jid(d.id)}, {"pdt", d.pdt}});
}

void Engine::reject(Device& d, const std::string& why) {
  if (d.rejected) return;
  catch_up(d);
  d.rejected = true;
  d.placing = false;
  d.placed = false;
  for (int m = 0; m < d.dag.module_count(); ++m) {
    const auto& mod = d.dag.modules[static_cast<std::size_t>(m)];
    auto& a = d.active.assignment[static_cast<std::size_t>(m)];
    if (mod.pinned_to_device || !a) continue;
    if (topo_.contains(*a)) {
      topo_.free_slot(*a, mod.container_ram_mb);
      --active_types_[*a][mod.name];
    }
    a.reset();
  }
  ++d.version;
  log("reject", {{"device", jid(d.id)}, {"reason", why}});
}

// --------------------------------------------------------------------- tasks

std::shared_ptr<const Profile> Engine::profile(Device& d) {
  if (d.profile && d.prof_version == d.version && d.prof_global == global_version_) {
    return d.profile;
  }
  auto p = std::make_shared<Profile>();
  bool ok = d.active.complete() && topo_.node(d.id).parent.has_value();
  for (const auto& a : d.active.assignment) {
    if (ok && (!topo_.contains(*a) || !topo_.node(*a).alive)) ok = false;
  }
  if (ok) {
    try {
      const int T = d.sched.count();
      p->sched_start.assign(static_cast<std::size_t>(T), 0.0);
      p->arrive.assign(d.dag.modules.size(), 0.0);
      p->exe.assign(d.dag.modules.size(), 0.0);
      double start = 0.0;
      for (int t = 0; t < T; ++t) {
        ScheduleCost c = schedule_cost(router_, d.dag, d.sched, d.active, sc_.weights, sc_.energy, t);
        p->sched_start[static_cast<std::size_t>(t)] = start;
        start += c.gamma;
        p->energy += c.theta;
        for (int m : d.sched.schedules[static_cast<std::size_t>(t)]) {
          ModuleCost mc = module_cost(router_, d.dag, sc_.energy, d.active, m);
          p->arrive[static_cast<std::size_t>(m)] = mc.t_lat + mc.t_tra;
          p->exe[static_cast<std::size_t>(m)] = mc.t_exe;
        }
      }
      p->response = start;
      p->valid = true;
    } catch (const std::exception&) {
      p->valid = false;
    }
  }
  d.profile = p;
  d.prof_version = d.version;
  d.prof_global = global_version_;
  return p;
}

void Engine::evaluate(const Device& d, Task& k) const {
  const Profile& p = *k.prof;
  double delay = 0.0;
  k.interrupted = false;
  k.dropped = false;
  for (int t = 0; t < d.sched.count(); ++t) {
    double sd = 0.0;
    for (int m : d.sched.schedules[static_cast<std::size_t>(t)]) {
      const auto& ws = d.windows[static_cast<std::size_t>(m)];
      if (ws.empty()) continue;
      const double arr = k.emit + p.sched_start[static_cast<std::size_t>(t)] + delay +
                         p.arrive[static_cast<std::size_t>(m)];
      for (const auto& w : ws) {
        auto wait = downtime_wait(arr, w.start, w.end);
        if (!wait) continue;
        k.interrupted = true;
        if (sc_.engine.discard_interrupted) {
          k.dropped = true;
          k.finish = arr;
          k.delay = delay;
          return;
        }
        sd = std::max(sd, *wait);
      }
    }
    delay += sd;
  }
  k.delay = delay;
  k.finish = k.emit + p.response + delay;
}

void Engine::finalize_task(Device& d, const Task& k) {
  if (k.interrupted) ++d.tit;
  if (k.dropped) {
    ++d.dropped;
    return;
  }
  ++d.completed;
  d.sum_rt += k.finish - k.emit;
  d.sum_e += k.prof->energy + sc_.energy.p_idle * k.delay;
}

void Engine::emit(Device& d, double e) {
  ++d.emitted;
  if (!d.placed || d.rejected) {
    ++d.dropped;
    return;
  }
  auto p = profile(d);
  if (!p->valid) {
    ++d.dropped;
    return;
  }
  Task k;
  k.emit = e;
  k.prof = std::move(p);
  evaluate(d, k);
  if (k.finish <= now_) {
    finalize_task(d, k);
  } else {
    d.pending.push_back(std::move(k));
  }
}

// Brings the device's tasks up to the current time. Every change to what a
// task sees is preceded by a call, so each task uses the state at emission.
void Engine::catch_up(Device& d) {
  const double iv = d.dag.sensor_interval_s;
  if (iv > 0) {
    while (true) {
      const double e = static_cast<double>(d.next_k) * iv;
      if (e > now_) break;
      emit(d, e);
      ++d.next_k;
    }
  }
  auto keep = std::partition(d.pending.begin(), d.pending.end(),
                             [this](const Task& k) { return k.finish > now_; });
  for (auto it = keep; it != d.pending.end(); ++it) finalize_task(d, *it);
  d.pending.erase(keep, d.pending.end());
  std::sort(d.pending.begin(), d.pending.end(),
            [](const Task& a, const Task& b) { return a.emit < b.emit; });
  double cutoff = iv > 0 ? static_cast<double>(d.next_k) * iv : now_;
  if (!d.pending.empty()) cutoff = std::min(cutoff, d.pending.front().emit);
  for (auto& ws : d.windows) {
    ws.erase(std::remove_if(ws.begin(), ws.end(), [cutoff](const Window& w) { return w.end <= cutoff; }),
             ws.end());
  }
}

void Engine::catch_up_all() {
  for (auto& d : devs_) catch_up(d);
}

void Engine::add_window(Device& d, int m, double start, double end) {
  catch_up(d);
  d.windows[static_cast<std::size_t>(m)].push_back({start, end});
  for (auto& k : d.pending) evaluate(d, k);
  catch_up(d);
}

// Unexecuted share of the module's work for the latest task.
double Engine::remaining_mi(Device& d, int m) {
  const double iv = d.dag.sensor_interval_s;
  if (d.next_k <= 1 || iv <= 0) return 0.0;
  auto p = profile(d);
  if (!p->valid) return 0.0;
  const double e = static_cast<double>(d.next_k - 1) * iv;
  const int t = d.sched.to_value[static_cast<std::size_t>(m)] - 1;
  const double start = e + p->sched_start[static_cast<std::size_t>(t)] + p->arrive[static_cast<std::size_t>(m)];
  const double dur = p->exe[static_cast<std::size_t>(m)];
  if (dur <= 0 || now_ < start || now_ >= start + dur) return 0.0;
  double mi = 0.0;
  for (const auto& f : d.dag.flows) {
    if (f.to == m) mi += f.instructions_mi;
  }
  return mi * (start + dur - now_) / dur;
}

// ------------------------------------------------------ mobility, migration

void Engine::mobility_tick(long k) {
  const double dt = sc_.mobility.tick_s;
  for (auto& d : devs_) {
    random_walk_step(d.walk, sc_.area, sc_.mobility.walk, dt, d.walk_rng);
    topo_.set_position(d.id, d.walk.position);
    maybe_depart(d);
  }
  at(static_cast<double>(k + 1) * dt, [this, k] { mobility_tick(k + 1); });
}

void Engine::maybe_depart(Device& d) {
  if (!d.placed || d.rejected || d.in_handover || now_ < d.cooldown) return;
  auto c = topo_.node(d.id).parent;
  if (!c) return;
  const ServerNode& cn = topo_.node(*c);
  if (!departure_detected(d.walk.position, d.walk.velocity(), cn.position, cn.coverage_radius,
                          sc_.mobility.departure_fraction)) {
    return;
  }
  d.in_handover = true;
  const int idx = d.idx;
  ServerId ctrl = *c;
  log("departure", {{"device", jid(d.id)}, {"controller", jid(ctrl)}});
  deliver(d.id, ctrl, true, [this, idx, ctrl] { choose_controller(idx, ctrl); });
}

void Engine::choose_controller(int idx, ServerId old_ctrl) {
  Device& d = devs_[static_cast<std::size_t>(idx)];
  auto give_up = [this, &d] {
    d.in_handover = false;
    d.cooldown = now_ + sc_.engine.notification_timeout_s;
    log("handover_skipped", {{"device", jid(d.id)}});
  };
  if (sc_.policy == PolicyKind::Urmila) {
    ServerId cc = central();
    deliver(old_ctrl, cc, true, [this, idx, old_ctrl, cc] {
      Device& dd = devs_[static_cast<std::size_t>(idx)];
      auto dest = nearest_sensed(topo_, dd.walk.position, old_ctrl);
      if (!dest) {
        dd.in_handover = false;
        dd.cooldown = now_ + sc_.engine.notification_timeout_s;
        log("handover_skipped", {{"device", jid(dd.id)}});
        return;
      }
      ServerId ds = *dest;
      deliver(cc, ds, true, [this, idx, old_ctrl, ds] { new_controller(idx, old_ctrl, ds); });
    });
    return;
  }
  std::optional<ServerId> dest;
  if (sc_.policy == PolicyKind::Proposed) {
    MobilityState mob;
    mob.device = d.id;
    mob.position = d.walk.position;
    mob.velocity = d.walk.velocity();
    for (ServerId s : sensed_fogs(topo_, mob.position)) {
      if (s != old_ctrl) mob.sensed.push_back(s);
    }
    int on_ctrl = 0;
    for (const auto& a : d.planned.assignment) {
      if (a && *a == old_ctrl) ++on_ctrl;
    }
    dest = analyze_mobility(topo_, old_ctrl, mob, on_ctrl,
                            [&d](std::size_t n) { return static_cast<std::size_t>(d.pick_rng() % n); });
  } else {
    dest = nearest_sensed(topo_, d.walk.position, old_ctrl);
  }
  if (!dest) {
    give_up();
    return;
  }
  ServerId ds = *dest;
  deliver(old_ctrl, ds, true, [this, idx, old_ctrl, ds] { new_controller(idx, old_ctrl, ds); });
}

void Engine::new_controller(int idx, ServerId old_ctrl, ServerId dest) {
  Device& d = devs_[static_cast<std::size_t>(idx)];
  if (d.rejected || !topo_.node(dest).alive) {
    d.in_handover = false;
    return;
  }
  catch_up(d);
  topo_.set_parent(d.id, dest);
  ++d.version;
  ++d.handovers;
  Round r;
  r.old_ctrl = old_ctrl;
  r.new_ctrl = dest;
  r.coordinator = sc_.policy == PolicyKind::Urmila ? central() : dest;
  r.reference = partial_app_cost(router_, d.dag, d.sched, d.planned, sc_.weights, sc_.energy);
  r.groups.resize(static_cast<std::size_t>(d.sched.count()));
  json items = json::array();
  for (int m = 0; m < d.dag.module_count(); ++m) {
    const auto& mod = d.dag.modules[static_cast<std::size_t>(m)];
    const auto& a = d.planned.assignment[static_cast<std::size_t>(m)];
    if (mod.pinned_to_device || !a) continue;
    const ServerId from = *a;
    bool need = true;
    if (sc_.policy == PolicyKind::Proposed) {
      // The current server scores as a zero-cost candidate when the decider
      // can reach it, so the module stays.
      auto cands = migration_candidates(topo_, migration_decider(topo_, dest, from));
      need = std::find(cands.begin(), cands.end(), from) == cands.end();
    } else {
      need = topo_.ancestor_at_level(dest, from.level) != from;
    }
    if (!need) continue;
    MigrationItem it;
    it.module = m;
    it.from = from;
    it.ram_mb = mod.container_ram_mb;
    it.dump_bits = uniform(d.dump_rng, sc_.migration.dump_fraction_min,
                           sc_.migration.dump_fraction_max) * mod.container_ram_mb * 8e6;
    it.remaining_mi = remaining_mi(d, m);
    r.groups[static_cast<std::size_t>(d.sched.to_value[static_cast<std::size_t>(m)] - 1)].push_back(it);
    items.push_back(mod.name);
  }
  log("handover", {{"device", jid(d.id)}, {"from", jid(old_ctrl)}, {"to", jid(dest)},
                   {"items", items}});
  d.round = std::move(r);
  next_group(d);
}

void Engine::next_group(Device& d) {
  Round& r = *d.round;
  while (r.next_group < r.groups.size() && r.groups[r.next_group].empty()) ++r.next_group;
  if (r.next_group == r.groups.size()) {
    finish_round(d);
    return;
  }
  const auto& items = r.groups[r.next_group++];
  std::map<ServerId, std::vector<MigrationItem>> by_decider;
  for (const auto& it : items) {
    ServerId dec = r.new_ctrl;
    if (sc_.policy == PolicyKind::Proposed) dec = migration_decider(topo_, r.new_ctrl, it.from);
    if (sc_.policy == PolicyKind::Urmila) dec = r.coordinator;
    by_decider[dec].push_back(it);
  }
  const int idx = d.idx;
  const ServerId sender = r.coordinator;
  for (auto& [dec, list] : by_decider) {
    ++r.open;
    ServerId node = dec;
    std::vector<MigrationItem> batch = list;
    deliver(sender, node, true, [this, idx, node, batch] { migration_req(idx, node, batch, false); });
  }
}

void Engine::migration_req(int idx, ServerId node, std::vector<MigrationItem> items,
                           bool recovery) {
  Device& d = devs_[static_cast<std::size_t>(idx)];
  Round& r = *d.round;
  CapacityView cap(topo_);
  DecisionContext c = ctx(d);
  const bool top = !topo_.node(node).parent.has_value();
  MigrationDecision dec;
  switch (sc_.policy) {
    case PolicyKind::Proposed:
      dec = handle_migration_req(c, sc_.migration, node, items, d.planned, r.reference, cap, {}, top);
      break;
    case PolicyKind::MAAS:
      dec = maas_migration_req(c, sc_.migration, node, items, cap, top);
      break;
    case PolicyKind::Urmila:
      dec = urmila_migration(c, sc_.migration, node, items, d.planned, cap);
      break;
  }
  log("migration_decision", {{"device", jid(d.id)}, {"node", jid(node)}, {"moves", dec.moves.size()},
                             {"escalated", dec.escalated.size()}, {"stayed", dec.stayed.size()}});
  dispatch_moves(d, node, dec, items, recovery);
  --r.open;
  check_group(d);
}

void Engine::dispatch_moves(Device& d, ServerId node, const MigrationDecision& dec,
                            const std::vector<MigrationItem>& items, bool recovery) {
  Round& r = *d.round;
  const int idx = d.idx;
  for (const auto& mv : dec.moves) {
    auto it = std::find_if(items.begin(), items.end(),
                           [&](const MigrationItem& i) { return i.module == mv.module; });
    MigrationItem item = *it;
    topo_.reserve_slot(mv.to);
    d.planned.assignment[static_cast<std::size_t>(mv.module)] = mv.to;
    ++r.open;
    ServerId to = mv.to;
    deliver(node, to, true, [this, idx, item, to, recovery] {
      migration_destination(idx, item, to, recovery);
    });
  }
  if (dec.escalated.empty()) return;
  auto par = topo_.node(node).parent;
  if (!par) return;
  ++r.open;
  ServerId p = *par;
  std::vector<MigrationItem> esc = dec.escalated;
  deliver(node, p, true, [this, idx, p, esc, recovery] { migration_req(idx, p, esc, recovery); });
}

void Engine::migration_destination(int idx, MigrationItem item, ServerId to, bool recovery) {
  Device& d = devs_[static_cast<std::size_t>(idx)];
  Round& r = *d.round;
  const double p = sc_.failures.migration_failure_p;
  const bool fail = !topo_.node(to).alive ||
                    (!recovery && p > 0 && uniform(d.fail_rng, 0.0, 1.0) < p);
  if (fail) {
    topo_.release_reservation(to);
    d.planned.assignment[static_cast<std::size_t>(item.module)] = item.from;
    ++d.mig_failures;
    log("migration_failure", {{"device", jid(d.id)}, {"module", d.dag.modules[static_cast<std::size_t>(item.module)].name},
                              {"server", jid(to)}});
    if (sc_.policy == PolicyKind::Proposed) {
      ServerId coord = r.coordinator;
      deliver(to, coord, true, [this, idx, item, to] { mmt_recovery(idx, item, to); });
      return;
    }
    --r.open;
    check_group(d);
    return;
  }
  topo_.occupy_slot(to, item.ram_mb, true);
  ++r.open;  // this acceptance becomes a start plus a notification
  deliver(to, item.from, false, [this, idx, item, to] { start_migration(idx, item, to); });
  deliver(to, r.coordinator, false, [this, idx] {
    Device& dd = devs_[static_cast<std::size_t>(idx)];
    --dd.round->open;
    check_group(dd);
  });
}

void Engine::mmt_recovery(int idx, MigrationItem item, ServerId failed) {
  Device& d = devs_[static_cast<std::size_t>(idx)];
  Round& r = *d.round;
  CapacityView cap(topo_);
  MigrationDecision dec = mmt_failure_recovery(ctx(d), sc_.migration, r.coordinator, item, failed,
                                               d.planned, r.reference, cap);
  log("migration_recovery", {{"device", jid(d.id)}, {"moves", dec.moves.size()},
                             {"escalated", dec.escalated.size()}});
  dispatch_moves(d, r.coordinator, dec, {item}, true);
  --r.open;
  check_group(d);
}

void Engine::start_migration(int idx, MigrationItem item, ServerId to) {
  Device& d = devs_[static_cast<std::size_t>(idx)];
  Round& r = *d.round;
  catch_up(d);
  const double rem = remaining_mi(d, item.module);
  MigrationCost c;
  try {
    c = sc_.policy == PolicyKind::Urmila
            ? relayed_migration_cost(router_, sc_.energy, sc_.migration, sc_.weights, item.dump_bits,
                                     item.from, r.coordinator, to, rem)
            : module_migration_cost(router_, sc_.energy, sc_.migration, sc_.weights, item.dump_bits,
                                    item.from, to, rem);
  } catch (const RoutingError&) {
    c.time = hop_latency(item.from, to) + sc_.migration.i_mig_s;
    c.energy = c.time * sc_.energy.p_idle;
    c.weighted = sc_.weights.w1 * c.time + sc_.weights.w2 * c.energy;
  }
  add_window(d, item.module, now_, now_ + c.time);
  r.costs[d.sched.to_value[static_cast<std::size_t>(item.module)] - 1].push_back(c);
  ++r.moved;
  ++d.moves;
  ++d.open_windows;
  log("migrate", {{"device", jid(d.id)}, {"module", d.dag.modules[static_cast<std::size_t>(item.module)].name},
                  {"from", jid(item.from)}, {"to", jid(to)}, {"time", c.time}, {"energy", c.energy}});
  at(now_ + c.time, [this, idx, item, to] { end_window(idx, item, to); });
  --r.open;
  check_group(d);
}

void Engine::end_window(int idx, MigrationItem item, ServerId to) {
  Device& d = devs_[static_cast<std::size_t>(idx)];
  catch_up(d);
  const std::string& type = d.dag.modules[static_cast<std::size_t>(item.module)].name;
  if (topo_.contains(item.from)) {
    topo_.free_slot(item.from, item.ram_mb);
    --active_types_[item.from][type];
  }
  ++active_types_[to][type];
  d.active.assignment[static_cast<std::size_t>(item.module)] = to;
  ++d.version;
  --d.open_windows;
  if (!d.round && d.open_windows == 0) d.in_handover = false;
}

void Engine::check_group(Device& d) {
  if (d.round && d.round->open == 0) next_group(d);
}

void Engine::finish_round(Device& d) {
  Round& r = *d.round;
  if (r.moved > 0) {
    ++d.migrations;
    for (const auto& [t, cs] : r.costs) {
      MigrationCost c = combine_schedule_migration(cs, sc_.weights);
      d.cmt += c.time;
      d.cmec += c.energy;
    }
  }
  log("round_done", {{"device", jid(d.id)}, {"moved", r.moved}});
  d.round.reset();
  if (d.open_windows == 0) d.in_handover = false;
}

// ------------------------------------------------------------------- metrics

MetricsSummary Engine::summarize(double horizon) const {
  struct Acc {
    AppMetrics m;
    double pdt_sum = 0.0;
    int pdt_n = 0;
    double rt = 0.0, en = 0.0;
    double pc = 0.0, oc = 0.0;
  };
  std::map<std::string, Acc> per;
  Acc all;
  all.m.app = "all";
  for (const auto& d : devs_) {
    Acc& a = per[d.app];
    a.m.app = d.app;
    for (Acc* x : {&a, &all}) {
      AppMetrics& m = x->m;
      ++m.devices;
      if (d.pdt >= 0) {
        ++m.placed;
        x->pdt_sum += d.pdt;
        ++x->pdt_n;
      }
      if (d.rejected) ++m.rejected;
      m.migrations += d.migrations;
      m.handovers += d.handovers;
      m.module_moves += d.moves;
      m.migration_failures += d.mig_failures;
      m.cmt_s += d.cmt;
      m.cmec_j += d.cmec;
      m.tit += d.tit;
      m.emitted += d.emitted;
      m.completed += d.completed;
      m.dropped += d.dropped;
      m.in_flight += static_cast<long>(d.pending.size());
      x->rt += d.sum_rt;
      x->en += d.sum_e;
      if (d.oracle_done && !d.oracle_complete) ++m.oracle_incomplete;
      if (d.oracle_cost && d.policy_cost) {
        ++m.oracle_instances;
        x->pc += *d.policy_cost;
        x->oc += *d.oracle_cost;
      }
    }
  }
  const auto& w = sc_.weights;
  auto finish = [&](Acc& x) {
    AppMetrics& m = x.m;
    m.pdt_s = x.pdt_n ? x.pdt_sum / x.pdt_n : 0.0;
    m.artt_s = m.completed ? x.rt / static_cast<double>(m.completed) : 0.0;
    m.aect_j = m.completed ? x.en / static_cast<double>(m.completed) : 0.0;
    m.awct = w.w1 * m.artt_s + w.w2 * m.aect_j;
    m.cmwc = w.w1 * m.cmt_s + w.w2 * m.cmec_j;
    if (m.oracle_instances > 0) {
      m.policy_cost_mean = x.pc / m.oracle_instances;
      m.oracle_cost_mean = x.oc / m.oracle_instances;
      if (m.oracle_cost_mean > 0) m.oracle_gap = m.policy_cost_mean / m.oracle_cost_mean - 1.0;
    }
    return m;
  };
  MetricsSummary s;
  s.horizon_s = horizon;
  for (auto& [name, a] : per) s.per_app[name] = finish(a);
  s.aggregate = finish(all);
  return s;
}

RunResult Engine::run() {
  sc_.validate();
  setup();
  const double horizon = sc_.horizon_s;
  if (horizon <= 0) {
    result_.snapshots.push_back(summarize(0.0));
    return result_;
  }
  if (sc_.bootstrap_clustering) {
    at(0.0, [this] {
      for (int level = topo_.max_fog_level() + 1; level >= 1; --level) {
        for (ServerId id : topo_.ids_at_level(level)) {
          HandlerResult r = start_join(id, cstate_[id], topo_);
          cluster_send(id, r.out);
        }
      }
    });
  }
  at(sc_.engine.heartbeat_s, [this] { heartbeat(1); });
  at(sc_.engine.placement_start_s, [this] {
    for (auto& d : devs_) start_placement(d);
  });
  if (sc_.mobility.enabled) at(sc_.mobility.tick_s, [this] { mobility_tick(1); });
  for (const auto& c : sc_.failures.node_crashes) {
    ServerId id = c.id;
    at(c.time_s, [this, id] { crash(id); });
  }
  std::vector<double> cps = opt_.checkpoints;
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  for (double t : cps) {
    if (t <= 0 || t >= horizon) continue;
    at(t, [this, t] {
      catch_up_all();
      result_.snapshots.push_back(summarize(t));
    }, 1);
  }
  while (!q_.empty() && q_.top().t <= horizon) {
    Event e = q_.top();
    q_.pop();
    now_ = e.t;
    e.fn();
    ++result_.events_processed;
  }
  now_ = horizon;
  catch_up_all();
  result_.snapshots.push_back(summarize(horizon));
  result_.all_placed = true;
  for (const auto& d : devs_) {
    if (!d.placed || d.rejected || !d.active.complete()) result_.all_placed = false;
  }
  return std::move(result_);
}

}  // namespace

std::optional<double> downtime_wait(double arrival, double start, double end) {
  if (arrival < start || arrival >= end) return std::nullopt;
  return end - arrival;
}

RunResult run_simulation(const Scenario& s, const RunOptions& opt) {
  Engine e(s, opt);
  return e.run();
}

}  // namespace fogsim
