#include "engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <queue>
#include <sstream>
#include <thread>

#include "errors.hpp"
#include "orchestrator.hpp"
#include "routing.hpp"

namespace sbdc {

namespace {

enum class EvType {
    PhysicsStep,
    ServingEpoch,
    MeoEpoch,
    GeoEpoch,
    LocalRetry,
    TaskRelease,
    TransferHop,
    TransferDelivered,
    TaskCompleted,
};

// priority classes: physics=0, control=1, traffic=2, completion=3
int priority_of(EvType t) {
    switch (t) {
        case EvType::PhysicsStep: return 0;
        case EvType::MeoEpoch:
        case EvType::GeoEpoch:
        case EvType::LocalRetry: return 1;
        case EvType::ServingEpoch:
        case EvType::TaskRelease: return 2;
        case EvType::TransferHop:
        case EvType::TransferDelivered:
        case EvType::TaskCompleted: return 3;
    }
    return 3;
}

struct Event {
    double t = 0.0;
    int priority = 0;
    std::uint64_t seq = 0;
    EvType type = EvType::PhysicsStep;
    std::int64_t i0 = 0;
    std::int64_t i1 = 0;
    double d0 = 0.0;
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.priority != b.priority) return a.priority > b.priority;
        return a.seq > b.seq;
    }
};

enum class TransferPurpose { Uplink, TaskInput, TaskOutput, MigrationCheckpoint, ControlTable };

struct TransferRt {
    int id = -1;
    TaskId task = -1;
    TransferPurpose purpose = TransferPurpose::TaskInput;
    double size_bits = 0.0;
    Route route;
    int dst = -1;
    bool cancelled = false;
    double resume_progress = 0.0;  // MigrationCheckpoint
    PrecomputedTable table;        // ControlTable payload
};

struct TxInterval {
    double start_s, end_s, power_W;
};

struct NodeRt {
    NodeSpec spec;
    std::optional<CircularOrbit> orbit;
    std::optional<GroundStation> site;  // ground stations and cohort endpoints
    bool powered = false;
    bool is_lunar = false;
    bool is_cohort = false;
    bool is_ground = false;
    NodeHealth health;
    double dose_rate_krad_per_year = 0.0;
    PowerThermalState pstate;
    std::vector<TaskExecution> running;
    std::vector<TaskExecution> paused;
    std::vector<TaskId> queued;
    std::vector<TaskId> pending_outputs;  // completed, waiting for a return route
    std::vector<TxInterval> tx_intervals;
    std::optional<PrecomputedTable> table;
    NodeEnergyAccount account;
};

struct TaskRt {
    Task task;
    int location = -1;
    bool terminal = false;
    bool output_started = false;
    std::set<int> replica_nodes;
    double resume_progress = 0.0;  // used when a queued task resumes execution
};

class Engine {
public:
    explicit Engine(const Scenario& sc) : sc_(sc), pc_(sc.constants), rng_(sc.seed) {}

    MetricsLedger run_all();

private:
    // --- setup ---
    void build_nodes();
    void build_plan();
    void precompute_eclipses();
    void pregenerate_tasks();
    void bootstrap_plan();

    // --- event handlers ---
    void on_physics(double t);
    void on_serving_epoch(double t);
    void on_meo_epoch(double t);
    void on_geo_epoch(double t, bool bootstrap);
    void on_local_retry(double t);
    void on_task_release(double t, TaskId id);
    void on_transfer_hop(double t, int transfer_id, int hop_idx);
    void on_transfer_delivered(double t, int transfer_id);
    void on_task_completed(double t, TaskId id, int node_id, double exact_t);

    // --- helpers ---
    void push(double t, EvType type, std::int64_t i0 = 0, std::int64_t i1 = 0, double d0 = 0.0);
    void log(double t, const std::string& tier, const std::string& action, TaskId task,
             const std::string& nodes, const std::string& detail = "");
    bool eclipsed_at(int node_id, double t) const;
    double eclipse_remaining(int node_id, double t) const;
    double next_contact_gap(int node_id, double t) const;
    TimeExpandedGraph routing_graph() const;  // annotation-free, full-horizon
    TimeExpandedGraph forecast_graph(double t) const;
    ForecastTable forecast_table(double t) const;
    PlacementContext placement_context() const;
    std::set<int> ground_set() const { return {ground_ids_.begin(), ground_ids_.end()}; }
    int start_transfer(TaskId task, TransferPurpose purpose, const Route& route, double size_bits,
                       double resume_progress = 0.0, const PrecomputedTable* table = nullptr);
    void decide_at_node(double t, TaskId id, int node_id);
    bool admit_execution(double t, TaskId id, int node_id, double resume_progress);
    void reconcile_zone(double t, int node_id);
    void on_node_failure(double t, int node_id);
    void finish_task(double t, TaskId id, double completion_s, const std::string& detail);
    void miss_task(double t, TaskId id, const std::string& detail);
    void cancel_replicas(TaskId id, int except_node);
    TaskId new_runtime_task(Task task);
    LocalNodeView node_view(int node_id) const;
    void attempt_uplinks(double t, int cohort_idx);
    void enact_placement(double t, TaskId id, const PlacementDecision& d, bool is_replica);
    std::vector<Contact> alive_contacts() const;
    TaskRecord& rec(TaskId id) { return ledger_.tasks[static_cast<std::size_t>(id)]; }

    const Scenario& sc_;
    PhysicalConstants pc_;
    RngStreams rng_;
    MetricsLedger ledger_;

    std::vector<NodeRt> nodes_;
    std::vector<int> leo_ids_, meo_ids_, geo_ids_, ground_ids_, cohort_ids_;
    int lunar_id_ = -1;
    std::map<int, int> cohort_node_;  // cohort_id -> node id
    std::vector<Contact> plan_;
    std::map<int, std::vector<const Contact*>> contacts_of_node_;  // either endpoint
    ReservationLedger reservations_;
    std::map<int, std::vector<ContactWindow>> eclipse_windows_;
    std::map<int, double> storage_map_;
    std::map<int, Layer> layer_map_;

    std::priority_queue<Event, std::vector<Event>, EventAfter> events_;
    std::uint64_t seq_ = 0;
    double now_ = 0.0;
    double last_physics_ = 0.0;

    std::vector<TaskRt> tasks_;
    std::vector<TransferRt> transfers_;
    std::map<int, std::optional<int>> serving_;
    std::map<int, std::vector<TaskId>> cohort_queue_;
    std::map<int, double> uplink_tokens_;
    double effective_latency_multiplier_ = 1.0;
    int geo_controller_ = -1;
};

void Engine::push(double t, EvType type, std::int64_t i0, std::int64_t i1, double d0) {
    events_.push(Event{t, priority_of(type), seq_++, type, i0, i1, d0});
}

void Engine::log(double t, const std::string& tier, const std::string& action, TaskId task,
                 const std::string& nodes, const std::string& detail) {
    ledger_.orchestration.push_back({t, tier, action, task, nodes, detail});
}

void Engine::build_nodes() {
    int next_id = 0;
    auto add_sat = [&](const ShellConfig& shell, int shell_idx, int plane, int k) {
        const double raan =
            shell.raan_offset_deg + plane * (360.0 / shell.planes);
        const double phase =
            k * (360.0 / shell.sats_per_plane) + plane * shell.phase_offset_deg;
        NodeRt node;
        node.orbit = make_circular_orbit(shell.altitude_km, shell.inclination_deg, raan, phase,
                                         shell.layer);
        const auto& lspec = sc_.node_specs.at(shell.layer);
        node.spec = NodeSpec{next_id, shell.layer, lspec.compute_capacity_units_s,
                             lspec.storage_bits, lspec.isl_terminals, lspec.power, lspec.thermal};
        node.powered = true;
        node.pstate.soc_Wh = lspec.power.battery_capacity_Wh;
        node.pstate.radiator_temperature_K = 290.0;
        node.pstate.thermal_headroom = thermal_headroom_fraction(lspec.thermal, 0.0, pc_);
        node.account.initial_soc_Wh = node.pstate.soc_Wh;
        node.account.battery_capacity_Wh = lspec.power.battery_capacity_Wh;
        (void)shell_idx;
        switch (shell.layer) {
            case Layer::Leo: leo_ids_.push_back(next_id); break;
            case Layer::Meo: meo_ids_.push_back(next_id); break;
            case Layer::Geo: geo_ids_.push_back(next_id); break;
            default: break;
        }
        nodes_.push_back(std::move(node));
        ++next_id;
    };
    for (std::size_t si = 0; si < sc_.shells.size(); ++si) {
        const auto& shell = sc_.shells[si];
        for (int p = 0; p < shell.planes; ++p)
            for (int k = 0; k < shell.sats_per_plane; ++k) add_sat(shell, static_cast<int>(si), p, k);
    }
    if (sc_.lunar.enabled) {
        NodeRt node;
        const auto& lspec = sc_.node_specs.at(Layer::Lunar);
        node.spec = NodeSpec{next_id, Layer::Lunar, lspec.compute_capacity_units_s,
                             lspec.storage_bits, lspec.isl_terminals, lspec.power, lspec.thermal};
        node.powered = true;
        node.is_lunar = true;
        node.pstate.soc_Wh = lspec.power.battery_capacity_Wh;
        node.pstate.radiator_temperature_K = 290.0;
        node.pstate.thermal_headroom = thermal_headroom_fraction(lspec.thermal, 0.0, pc_);
        node.account.initial_soc_Wh = node.pstate.soc_Wh;
        node.account.battery_capacity_Wh = lspec.power.battery_capacity_Wh;
        lunar_id_ = next_id;
        nodes_.push_back(std::move(node));
        ++next_id;
    }
    for (const auto& gs : sc_.ground_stations) {
        NodeRt node;
        const auto& lspec = sc_.node_specs.at(Layer::Ground);
        node.spec = NodeSpec{next_id, Layer::Ground, sc_.links.ground_capacity_units_s,
                             lspec.storage_bits, 0, lspec.power, lspec.thermal};
        node.site = GroundStation{gs.latitude_deg, gs.longitude_deg, gs.min_elevation_deg};
        node.is_ground = true;
        ground_ids_.push_back(next_id);
        nodes_.push_back(std::move(node));
        ++next_id;
    }
    for (const auto& co : sc_.cohorts) {
        NodeRt node;
        const auto& lspec = sc_.node_specs.at(Layer::Ground);
        node.spec = NodeSpec{next_id, Layer::Ground, 0.0, lspec.storage_bits, 0, lspec.power,
                             lspec.thermal};
        node.site = GroundStation{co.latitude_deg, co.longitude_deg, co.min_elevation_deg};
        node.is_cohort = true;
        cohort_node_[co.cohort_id] = next_id;
        cohort_ids_.push_back(next_id);
        nodes_.push_back(std::move(node));
        ++next_id;
    }

    // TID tolerance sampled per powered node from its own stream, id order;
    // overrides are applied afterwards so they do not shift the stream.
    for (auto& node : nodes_) {
        if (!node.powered) continue;
        node.health.tid_tolerance_krad = rng_.tid_tolerance.uniform(
            sc_.radiation.tid_tolerance_min_krad, sc_.radiation.tid_tolerance_max_krad);
        node.health.tid_accumulated_krad = sc_.radiation.initial_tid_krad;
        node.health.seu_rate_per_s = sc_.radiation.seu_rate_per_s;
        node.dose_rate_krad_per_year = sc_.radiation.dose_rate_krad_per_year;
    }
    for (const auto& ov : sc_.radiation.overrides) {
        if (ov.node_id < 0 || ov.node_id >= static_cast<int>(nodes_.size()))
            throw ConfigError("radiation.overrides: node_id out of range");
        auto& node = nodes_[ov.node_id];
        if (ov.initial_tid_krad) node.health.tid_accumulated_krad = *ov.initial_tid_krad;
        if (ov.dose_rate_krad_per_year) node.dose_rate_krad_per_year = *ov.dose_rate_krad_per_year;
        if (ov.seu_rate_per_s) node.health.seu_rate_per_s = *ov.seu_rate_per_s;
        if (ov.tid_tolerance_krad) node.health.tid_tolerance_krad = *ov.tid_tolerance_krad;
    }

    for (const auto& node : nodes_) {
        storage_map_[node.spec.node_id] = node.spec.storage_bits;
        layer_map_[node.spec.node_id] = node.spec.layer;
    }
    if (!geo_ids_.empty()) geo_controller_ = geo_ids_.front();
}

void Engine::build_plan() {
    if (sc_.injected_contacts_text) {
        std::istringstream in(*sc_.injected_contacts_text);
        plan_ = contacts_from_text(in);
        for (const auto& c : plan_) {
            if (c.src_node < 0 || c.src_node >= static_cast<int>(nodes_.size()) ||
                c.dst_node < 0 || c.dst_node >= static_cast<int>(nodes_.size()))
                throw ConfigError("injected contact plan references unknown node ids");
        }
    } else {
        std::vector<SatelliteEntry> sats;
        int plane_counter = 0;
        int id = 0;
        for (std::size_t si = 0; si < sc_.shells.size(); ++si) {
            const auto& shell = sc_.shells[si];
            for (int p = 0; p < shell.planes; ++p) {
                for (int k = 0; k < shell.sats_per_plane; ++k) {
                    sats.push_back(SatelliteEntry{id, *nodes_[id].orbit, static_cast<int>(si),
                                                  plane_counter + p, k});
                    ++id;
                }
            }
            plane_counter += shell.planes;
        }
        std::vector<GroundEndpoint> ground;
        for (int gid : ground_ids_) ground.push_back({gid, *nodes_[gid].site, false});
        for (int cid : cohort_ids_) ground.push_back({cid, *nodes_[cid].site, true});
        std::optional<LunarEntry> lunar;
        if (lunar_id_ >= 0) lunar = LunarEntry{lunar_id_, sc_.lunar.owlt_s};

        ContactPlanConfig cfg;
        cfg.isl_rate_bps = sc_.links.isl_rate_bps;
        cfg.feeder_rate_bps = sc_.links.feeder_rate_bps;
        cfg.access_rate_bps = sc_.links.access_rate_bps;
        cfg.lunar_rate_bps = sc_.links.lunar_rate_bps;
        cfg.topology = sc_.links.topology;
        cfg.sample_step_s = sc_.sim.contact_sample_step_s;
        cfg.earth_rotation = sc_.earth_rotation;
        cfg.feeder_blackout = sc_.links.feeder_blackout;
        plan_ = build_contact_plan(sats, ground, lunar, cfg, sc_.horizon_s, pc_);
    }
    plan_ = apply_outages(plan_, sc_.outage_model, rng_.outages);

    for (const auto& c : plan_) {
        contacts_of_node_[c.src_node].push_back(&c);
        contacts_of_node_[c.dst_node].push_back(&c);
        ledger_.links.push_back({c.id, c.src_node, c.dst_node, c.kind, c.start_s, c.end_s,
                                 c.rate_bps * (c.end_s - c.start_s), 0.0});
    }
    for (auto& [nid, list] : contacts_of_node_) {
        std::sort(list.begin(), list.end(), [](const Contact* a, const Contact* b) {
            return std::tie(a->start_s, a->id) < std::tie(b->start_s, b->id);
        });
    }
}

void Engine::precompute_eclipses() {
    for (const auto& node : nodes_) {
        if (!node.powered || node.is_lunar) continue;
        const auto& orbit = *node.orbit;
        auto ecl = [&](double t) {
            return in_eclipse(propagate(orbit, t, pc_), sc_.sun.direction_at(t), pc_);
        };
        std::vector<ContactWindow> windows;
        const double step = 10.0;
        bool prev = ecl(0.0);
        double start = prev ? 0.0 : -1.0;
        double prev_t = 0.0;
        for (double t = step; t <= sc_.horizon_s + 0.5 * step; t += step) {
            const double tc = std::min(t, sc_.horizon_s);
            const bool cur = ecl(tc);
            if (cur != prev) {
                double lo = prev_t, hi = tc;
                while (hi - lo > 0.1) {
                    const double mid = 0.5 * (lo + hi);
                    if (ecl(mid) == prev)
                        lo = mid;
                    else
                        hi = mid;
                }
                const double edge = 0.5 * (lo + hi);
                if (cur)
                    start = edge;
                else
                    windows.push_back({start, edge});
            }
            prev = cur;
            prev_t = tc;
            if (tc >= sc_.horizon_s) break;
        }
        if (prev) windows.push_back({start, sc_.horizon_s});
        eclipse_windows_[node.spec.node_id] = std::move(windows);
    }
}

bool Engine::eclipsed_at(int node_id, double t) const {
    const auto it = eclipse_windows_.find(node_id);
    if (it == eclipse_windows_.end()) return false;
    for (const auto& w : it->second) {
        if (t < w.start_s) return false;
        if (t < w.end_s) return true;
    }
    return false;
}

double Engine::eclipse_remaining(int node_id, double t) const {
    const auto it = eclipse_windows_.find(node_id);
    if (it == eclipse_windows_.end()) return 0.0;
    for (const auto& w : it->second) {
        if (t < w.start_s) return 0.0;
        if (t < w.end_s) return w.end_s - t;
    }
    return 0.0;
}

double Engine::next_contact_gap(int node_id, double t) const {
    const auto it = contacts_of_node_.find(node_id);
    if (it == contacts_of_node_.end()) return sc_.horizon_s;
    for (const Contact* c : it->second) {
        if (t < c->end_s && t >= c->start_s) return 0.0;
        if (c->start_s > t) return c->start_s - t;
    }
    return sc_.horizon_s;
}

std::vector<Contact> Engine::alive_contacts() const {
    std::vector<Contact> out;
    out.reserve(plan_.size());
    for (const auto& c : plan_) {
        if (nodes_[c.src_node].powered && nodes_[c.src_node].health.failed) continue;
        if (nodes_[c.dst_node].powered && nodes_[c.dst_node].health.failed) continue;
        out.push_back(c);
    }
    return out;
}

TimeExpandedGraph Engine::routing_graph() const {
    TimeExpandedGraph g;
    g.t0_s = 0.0;
    g.slot_s = sc_.sim.slot_s;
    g.horizon_s = sc_.horizon_s;
    g.n_slots = static_cast<int>(std::ceil(sc_.horizon_s / sc_.sim.slot_s));
    for (const auto& node : nodes_) g.node_ids.push_back(node.spec.node_id);
    g.contacts = alive_contacts();
    g.storage_bits = storage_map_;
    g.node_layers = layer_map_;
    return g;
}

ForecastTable Engine::forecast_table(double t) const {
    ForecastInputs inputs;
    inputs.zone_policy = sc_.zone_policy;
    inputs.risk_params = sc_.radiation.risk;
    for (const auto& node : nodes_) {
        ForecastInputs::NodeState ns;
        ns.node_id = node.spec.node_id;
        ns.spec = node.spec;
        ns.health = node.health;
        ns.state = node.pstate;
        ns.baseline_load_W = node.powered ? std::max(node.pstate.load_W, node.spec.power.p_idle_W)
                                          : 0.0;
        ns.dose_rate_krad_per_year = node.dose_rate_krad_per_year;
        ns.static_green = !node.powered;
        inputs.nodes.push_back(ns);
    }
    inputs.eclipsed = [this](int nid, double tt) { return eclipsed_at(nid, tt); };
    inputs.eclipse_remaining_s = [this](int nid, double tt) { return eclipse_remaining(nid, tt); };
    inputs.time_to_next_contact_s = [this](int nid, double tt) {
        return next_contact_gap(nid, tt);
    };
    return build_forecasts(inputs, t, sc_.orchestrator.planning_horizon_s, sc_.sim.slot_s, pc_);
}

TimeExpandedGraph Engine::forecast_graph(double t) const {
    return build_time_expanded_graph(alive_contacts(), forecast_table(t), sc_.sim.slot_s,
                                     sc_.orchestrator.planning_horizon_s, storage_map_,
                                     layer_map_);
}

PlacementContext Engine::placement_context() const {
    PlacementContext ctx;
    ctx.outage = sc_.outage_model;
    ctx.risk_params = sc_.radiation.risk;
    ctx.zone_policy = sc_.zone_policy;
    ctx.max_hops = sc_.orchestrator.max_route_hops;
    for (const auto& node : nodes_) {
        NodeRoutingInfo info;
        info.node_id = node.spec.node_id;
        info.layer = node.spec.layer;
        info.alive = !node.powered || !node.health.failed;
        info.p_tx_W_per_bps = node.powered ? node.spec.power.p_tx_W_per_bps : 0.0;
        info.energy_per_unit_J =
            node.spec.compute_capacity_units_s > 0.0
                ? node.spec.power.p_compute_max_W / node.spec.compute_capacity_units_s
                : 0.0;
        info.health = node.health;
        ctx.nodes[info.node_id] = info;
    }
    return ctx;
}

LocalNodeView Engine::node_view(int node_id) const {
    const auto& node = nodes_[node_id];
    return LocalNodeView{node_id, node.pstate.zone,
                         node.health.failed ? 0.0
                                            : derated_capacity_units_s(node.spec, node.health),
                         static_cast<int>(node.running.size()),
                         sc_.orchestrator.max_concurrent_tasks};
}

TaskId Engine::new_runtime_task(Task task) {
    task.task_id = static_cast<TaskId>(tasks_.size());
    TaskRt rt;
    rt.task = task;
    rt.location = task.origin_node;
    tasks_.push_back(rt);
    TaskRecord record;
    record.id = task.task_id;
    record.cls = task.task_class;
    record.origin_node = task.origin_node;
    record.origin_cohort = task.origin_cohort;
    record.arrival_s = task.arrival_time_s;
    record.deadline_s = task.deadline_s.value_or(-1.0);
    record.input_bits = task.input_bits;
    record.output_bits = task.output_bits;
    ledger_.tasks.push_back(record);
    return task.task_id;
}

void Engine::pregenerate_tasks() {
    const auto& w = sc_.workloads;

    // DHTS cohort arrivals
    if (w.dhts.enabled) {
        for (const auto& co : sc_.cohorts) {
            const auto times = generate_arrival_times(co, 0.0, sc_.horizon_s, rng_.traffic);
            for (double at : times) {
                Task task;
                task.task_class = TaskClass::RealTimeInference;
                task.arrival_time_s = at;
                task.origin_cohort = co.cohort_id;
                task.origin_node = cohort_node_.at(co.cohort_id);
                task.input_bits = w.dhts.input_bits;
                task.output_bits = w.dhts.output_bits;
                task.compute_demand_units = w.dhts.compute_demand_units;
                if (w.dhts.deadline_offset_s) task.deadline_s = at + *w.dhts.deadline_offset_s;
                task.replication_k = w.dhts.replication_k;
                const TaskId id = new_runtime_task(task);
                push(at, EvType::TaskRelease, id);
            }
        }
    }

    // Earth-observation imaging on every LEO satellite
    if (w.eo.enabled) {
        for (int sat : leo_ids_) {
            std::vector<ImagingEvent> schedule;
            for (double t = w.eo.start_s; t < sc_.horizon_s; t += w.eo.imaging_period_s)
                schedule.push_back({t, w.eo.input_bits});
            if (sc_.mode == SimMode::RelayOnly) {
                // relay-only: raw payload goes to ground untouched
                for (const auto& ev : schedule) {
                    Task task;
                    task.task_class = TaskClass::StorageRetrieval;
                    task.arrival_time_s = ev.time_s;
                    task.origin_node = sat;
                    task.input_bits = ev.input_bits;
                    task.output_bits = ev.input_bits;
                    task.compute_demand_units = 0.0;
                    const TaskId id = new_runtime_task(task);
                    push(ev.time_s, EvType::TaskRelease, id);
                }
            } else {
                const auto pairs =
                    generate_eo_workload(sat, schedule, w.eo.compression_ratio,
                                         w.eo.compute_units_per_bit,
                                         static_cast<TaskId>(tasks_.size()));
                for (const auto& pair : pairs) {
                    const TaskId cid = new_runtime_task(pair.compression);
                    Task retrieval = pair.retrieval;
                    retrieval.predecessor = cid;
                    new_runtime_task(retrieval);
                    push(pair.compression.arrival_time_s, EvType::TaskRelease, cid);
                    // retrieval releases when the compression completes
                }
            }
        }
    }

    if (w.bulk_training.enabled && !ground_ids_.empty()) {
        const int origin = ground_ids_[w.bulk_training.origin_station];
        for (double t = w.bulk_training.start_s; t < sc_.horizon_s; t += w.bulk_training.period_s) {
            Task task;
            task.task_class = TaskClass::BulkTraining;
            task.arrival_time_s = t;
            task.origin_node = origin;
            task.input_bits = w.bulk_training.input_bits;
            task.output_bits = w.bulk_training.output_bits;
            task.compute_demand_units = w.bulk_training.compute_demand_units;
            task.replication_k = w.bulk_training.replication_k;
            const TaskId id = new_runtime_task(task);
            push(t, EvType::TaskRelease, id);
        }
    }

    if (w.housekeeping.period_s > 0.0 && w.housekeeping.compute_demand_units > 0.0) {
        for (const auto& node : nodes_) {
            if (!node.powered) continue;
            for (double t = w.housekeeping.period_s; t < sc_.horizon_s;
                 t += w.housekeeping.period_s) {
                Task task;
                task.task_class = TaskClass::Housekeeping;
                task.arrival_time_s = t;
                task.origin_node = node.spec.node_id;
                task.input_bits = 0.0;
                task.output_bits = 0.0;
                task.compute_demand_units = w.housekeeping.compute_demand_units;
                const TaskId id = new_runtime_task(task);
                push(t, EvType::TaskRelease, id);
            }
        }
    }
}

void Engine::bootstrap_plan() { on_geo_epoch(0.0, true); }

// ---------------------------------------------------------------------------

MetricsLedger Engine::run_all() {
    ledger_.scenario_name = sc_.name;
    ledger_.scenario_hash = sc_.scenario_hash;
    ledger_.seed = sc_.seed;
    ledger_.rng_algorithm = RngStreams::algorithm();
    ledger_.mode = mode_name(sc_.mode);
    ledger_.resolved_scenario_json = sc_.resolved_json;
    ledger_.horizon_s = sc_.horizon_s;

    build_nodes();
    build_plan();
    precompute_eclipses();
    pregenerate_tasks();
    bootstrap_plan();

    push(std::min(sc_.sim.physics_step_s, sc_.horizon_s), EvType::PhysicsStep);
    push(0.0, EvType::ServingEpoch);
    if (!meo_ids_.empty()) push(sc_.orchestrator.meo_epoch_s, EvType::MeoEpoch);
    if (geo_controller_ >= 0) push(sc_.orchestrator.geo_epoch_s, EvType::GeoEpoch);
    push(sc_.orchestrator.local_retry_s, EvType::LocalRetry);

    // initial energy samples
    for (const auto& node : nodes_) {
        if (!node.powered) continue;
        ledger_.energy.push_back({0.0, node.spec.node_id, node.pstate.soc_Wh,
                                  node.pstate.radiator_temperature_K, node.pstate.zone,
                                  node.pstate.harvest_W, node.pstate.load_W});
    }

    while (!events_.empty()) {
        const Event ev = events_.top();
        events_.pop();
        if (ev.t > sc_.horizon_s + 1e-9) continue;
        if (ev.t < now_ - 1e-9)
            throw InvariantError("event causality violated: event time precedes simulation clock");
        now_ = std::max(now_, ev.t);
        switch (ev.type) {
            case EvType::PhysicsStep: on_physics(ev.t); break;
            case EvType::ServingEpoch: on_serving_epoch(ev.t); break;
            case EvType::MeoEpoch: on_meo_epoch(ev.t); break;
            case EvType::GeoEpoch: on_geo_epoch(ev.t, false); break;
            case EvType::LocalRetry: on_local_retry(ev.t); break;
            case EvType::TaskRelease: on_task_release(ev.t, ev.i0); break;
            case EvType::TransferHop:
                on_transfer_hop(ev.t, static_cast<int>(ev.i0), static_cast<int>(ev.i1));
                break;
            case EvType::TransferDelivered:
                on_transfer_delivered(ev.t, static_cast<int>(ev.i0));
                break;
            case EvType::TaskCompleted:
                on_task_completed(ev.t, ev.i0, static_cast<int>(ev.i1), ev.d0);
                break;
        }
    }

    // finalize: in-flight classification + ledger completeness check
    std::size_t terminal = 0;
    for (const auto& rtask : tasks_) {
        if (rtask.terminal) ++terminal;
    }
    std::size_t counted = 0;
    for (const auto& record : ledger_.tasks) {
        if (record.status != TaskStatus::InFlight) ++counted;
    }
    if (terminal != counted)
        throw InvariantError("task ledger inconsistent: terminal state mismatch");

    for (auto& node : nodes_) {
        if (!node.powered) continue;
        node.account.final_soc_Wh = node.pstate.soc_Wh;
        ledger_.energy_accounts[node.spec.node_id] = node.account;
        if (node.pstate.soc_Wh < -1e-9)
            throw InvariantError("negative state of charge after clamping");
    }
    return ledger_;
}

// ---------------------------------------------------------------------------

void Engine::on_physics(double t) {
    const double dt = t - last_physics_;
    if (dt <= 0.0) return;

    for (auto& node : nodes_) {
        if (!node.powered) continue;
        const int nid = node.spec.node_id;

        // transmit power: overlap of reserved transmissions with this step
        double tx_energy = 0.0;
        for (const auto& iv : node.tx_intervals) {
            const double lo = std::max(iv.start_s, last_physics_);
            const double hi = std::min(iv.end_s, t);
            if (hi > lo) tx_energy += iv.power_W * (hi - lo);
        }
        std::erase_if(node.tx_intervals, [&](const TxInterval& iv) { return iv.end_s <= t; });
        const double tx_power = tx_energy / dt;

        // red-zone execution audit (pausing should make this unreachable)
        if (node.pstate.zone == EnergyZone::Red) {
            for (const auto& exec : node.running) {
                if (tasks_[exec.task_id].task.task_class != TaskClass::Housekeeping)
                    ++ledger_.red_zone_violations;
            }
        }

        const auto exec = node.health.failed
                              ? ExecuteStepResult{{}, 0.0, node.spec.power.p_idle_W}
                              : execute_step(node.spec, node.health, node.running, last_physics_,
                                             dt, sc_.orchestrator.checkpoint_interval_s);
        const double load = exec.compute_load_W + tx_power;

        const bool ecl = eclipsed_at(nid, last_physics_);
        const auto step = step_energy_thermal(node.pstate, node.spec.power, node.spec.thermal,
                                              load, ecl, dt, pc_);
        node.account.integral_J += (step.state.harvest_W - load) * dt;
        node.account.clamp_surplus_J += step.clamp_surplus_J;
        node.account.clamp_deficit_J += step.clamp_deficit_J;
        ledger_.total_load_energy_Wh += load * dt / 3600.0;

        const EnergyZone old_zone = node.pstate.zone;
        node.pstate = step.state;
        node.pstate.zone = old_zone;

        // radiation
        if (!node.health.failed && node.dose_rate_krad_per_year > 0.0) {
            node.health = accumulate_dose(node.health, node.dose_rate_krad_per_year, dt);
            if (node.health.failed) on_node_failure(t, nid);
        }
        if (!node.health.failed && node.health.seu_rate_per_s > 0.0) {
            const int faults = sample_seu_faults(node.health, dt, rng_.seu);
            if (faults > 0) {
                ledger_.seu_faults += faults;
                for (int f = 0; f < faults && !node.running.empty(); ++f) {
                    auto& victim = node.running[static_cast<std::size_t>(
                        rng_.seu.uniform_int(node.running.size()))];
                    victim.progress = victim.checkpoint_progress;
                    log(t, "engine", "seu_rollback", victim.task_id, std::to_string(nid));
                }
            }
        }

        // completions (exact sub-step times recorded)
        for (const auto& done : exec.completed)
            push(t, EvType::TaskCompleted, done.task_id, nid, done.completion_time_s);

        // zone update against the forecast
        const ZoneForecast fc{eclipse_remaining(nid, t), next_contact_gap(nid, t),
                              node.pstate.load_W};
        const EnergyZone zone =
            compute_zone(node.pstate, node.spec.power.battery_capacity_Wh, sc_.zone_policy, fc);
        if (zone != old_zone) {
            node.pstate.zone = zone;
            log(t, "engine", "zone_change", -1, std::to_string(nid),
                std::string(zone_name(old_zone)) + "->" + zone_name(zone));
            reconcile_zone(t, nid);
        }

        const double sample = sc_.sim.energy_sample_s;
        if (std::floor(t / sample) > std::floor(last_physics_ / sample) || t >= sc_.horizon_s) {
            ledger_.energy.push_back({t, nid, node.pstate.soc_Wh,
                                      node.pstate.radiator_temperature_K, node.pstate.zone,
                                      node.pstate.harvest_W, node.pstate.load_W});
        }
    }

    last_physics_ = t;
    if (t < sc_.horizon_s)
        push(std::min(t + sc_.sim.physics_step_s, sc_.horizon_s), EvType::PhysicsStep);
}

void Engine::reconcile_zone(double t, int node_id) {
    auto& node = nodes_[node_id];
    const double capacity =
        node.health.failed ? 0.0 : derated_capacity_units_s(node.spec, node.health);

    // pause running tasks the zone no longer permits
    for (auto it = node.running.begin(); it != node.running.end();) {
        const auto& task = tasks_[it->task_id].task;
        if (!zone_permits(node.pstate.zone, task.task_class, task.compute_demand_units, capacity,
                          sc_.zone_policy)) {
            log(t, "leo", "pause_for_zone", it->task_id, std::to_string(node_id),
                zone_name(node.pstate.zone));
            node.paused.push_back(*it);
            it = node.running.erase(it);
        } else {
            ++it;
        }
    }
    // resume paused tasks that are permitted again
    for (auto it = node.paused.begin(); it != node.paused.end();) {
        const auto& task = tasks_[it->task_id].task;
        if (static_cast<int>(node.running.size()) < sc_.orchestrator.max_concurrent_tasks &&
            zone_permits(node.pstate.zone, task.task_class, task.compute_demand_units, capacity,
                         sc_.zone_policy)) {
            log(t, "leo", "resume_after_zone", it->task_id, std::to_string(node_id),
                zone_name(node.pstate.zone));
            node.running.push_back(*it);
            it = node.paused.erase(it);
        } else {
            ++it;
        }
    }
}

void Engine::on_node_failure(double t, int node_id) {
    auto& node = nodes_[node_id];
    ++ledger_.node_failures;
    log(t, "engine", "node_failed", -1, std::to_string(node_id),
        "tid=" + std::to_string(node.health.tid_accumulated_krad));

    std::vector<std::pair<TaskId, const char*>> victims;
    for (const auto& exec : node.running) victims.emplace_back(exec.task_id, "running");
    for (const auto& exec : node.paused) victims.emplace_back(exec.task_id, "paused");
    for (TaskId id : node.queued) victims.emplace_back(id, "queued");
    for (TaskId id : node.pending_outputs) victims.emplace_back(id, "output");
    node.running.clear();
    node.paused.clear();
    node.queued.clear();
    node.pending_outputs.clear();
    for (const auto& [id, what] : victims) {
        auto& rtask = tasks_[id];
        if (rtask.terminal) continue;
        rtask.replica_nodes.erase(node_id);
        if (!rtask.replica_nodes.empty()) continue;  // survives elsewhere
        miss_task(t, id, std::string(what) + "_node_failed");
    }
}

void Engine::on_serving_epoch(double t) {
    // refill per-satellite uplink admission tokens once per epoch, no banking
    const double allowance = sc_.orchestrator.uplink_admission_per_s * sc_.sim.serving_epoch_s;
    for (int sat : leo_ids_) uplink_tokens_[sat] = std::max(1.0, allowance);

    for (const auto& co : sc_.cohorts) {
        std::vector<ServingCandidate> candidates;
        const auto& site = *nodes_[cohort_node_.at(co.cohort_id)].site;
        for (int sat : leo_ids_) {
            if (nodes_[sat].health.failed) continue;
            const auto vis =
                visibility(propagate(*nodes_[sat].orbit, t, pc_), site, t, sc_.earth_rotation, pc_);
            candidates.push_back({sat, vis.elevation_deg, vis.visible});
        }
        const auto current = pick_serving_satellite(candidates);
        const auto previous = serving_.count(co.cohort_id) ? serving_[co.cohort_id] : std::nullopt;
        if (const auto ho = detect_handover(previous, current, co.cohort_id, t)) {
            ++ledger_.handovers;
            log(t, "leo", "handover", -1,
                std::to_string(ho->from_sat) + "->" + std::to_string(ho->to_sat),
                "cohort=" + std::to_string(co.cohort_id));
            if (sc_.workloads.handover_signaling_demand_units > 0.0) {
                for (int sat : {ho->from_sat, ho->to_sat}) {
                    Task sig;
                    sig.task_class = TaskClass::Housekeeping;
                    sig.arrival_time_s = t;
                    sig.origin_node = sat;
                    sig.compute_demand_units = sc_.workloads.handover_signaling_demand_units;
                    const TaskId id = new_runtime_task(sig);
                    decide_at_node(t, id, sat);
                }
            }
        }
        serving_[co.cohort_id] = current;

        // refill uplink admission tokens
        if (current)
            uplink_tokens_[*current] = std::min(
                uplink_tokens_[*current] +
                    sc_.orchestrator.uplink_admission_per_s * sc_.sim.serving_epoch_s,
                std::max(1.0, sc_.orchestrator.uplink_admission_per_s * sc_.sim.serving_epoch_s));
        attempt_uplinks(t, co.cohort_id);
    }
    if (t < sc_.horizon_s)
        push(std::min(t + sc_.sim.serving_epoch_s, sc_.horizon_s), EvType::ServingEpoch);
}

void Engine::attempt_uplinks(double t, int cohort_id) {
    auto& queue = cohort_queue_[cohort_id];
    const auto serving = serving_.count(cohort_id) ? serving_[cohort_id] : std::nullopt;
    if (!serving) return;
    const int sat = *serving;
    const int cnode = cohort_node_.at(cohort_id);

    while (!queue.empty() && uplink_tokens_[sat] >= 1.0) {
        const TaskId id = queue.front();
        auto& rtask = tasks_[id];
        // find an access contact cohort -> sat usable now
        const Contact* usable = nullptr;
        std::optional<Interval> fit;
        const auto it = contacts_of_node_.find(cnode);
        if (it != contacts_of_node_.end()) {
            for (const Contact* c : it->second) {
                if (c->kind != ContactKind::Access || c->src_node != cnode || c->dst_node != sat)
                    continue;
                if (c->end_s <= t) continue;
                if (c->start_s > t) break;  // sorted by start; serving sat implies current contact
                fit = reservations_.earliest_fit(c->id, c->start_s, c->end_s, t,
                                                 rtask.task.input_bits / c->rate_bps);
                if (fit) {
                    usable = c;
                    break;
                }
            }
        }
        if (!usable) return;  // retry next epoch

        uplink_tokens_[sat] -= 1.0;
        queue.erase(queue.begin());
        Route route;
        route.dst_node = sat;
        route.delivery_s = fit->end_s + usable->owlt_s;
        route.hops.push_back({usable->id, cnode, sat, fit->start_s, fit->end_s,
                              route.delivery_s});
        start_transfer(id, TransferPurpose::Uplink, route, rtask.task.input_bits);
    }
}

void Engine::on_task_release(double t, TaskId id) {
    auto& rtask = tasks_[id];
    if (rtask.task.origin_cohort >= 0) {
        cohort_queue_[rtask.task.origin_cohort].push_back(id);
        attempt_uplinks(t, rtask.task.origin_cohort);
    } else {
        decide_at_node(t, id, rtask.task.origin_node);
    }
}

bool Engine::admit_execution(double t, TaskId id, int node_id, double resume_progress) {
    auto& node = nodes_[node_id];
    auto& rtask = tasks_[id];
    const auto flags = class_flags(rtask.task.task_class);
    const double capacity =
        node.health.failed ? 0.0 : derated_capacity_units_s(node.spec, node.health);
    if (capacity <= 0.0) return false;
    if (static_cast<int>(node.running.size()) >= sc_.orchestrator.max_concurrent_tasks)
        return false;
    if (!zone_permits(node.pstate.zone, rtask.task.task_class, rtask.task.compute_demand_units,
                      capacity, sc_.zone_policy))
        return false;
    if (node.spec.layer == Layer::Lunar && !flags.delay_tolerant_ok) return false;

    TaskExecution exec;
    exec.task_id = id;
    exec.progress = resume_progress;
    exec.checkpoint_progress = resume_progress;
    exec.started_at_s = t;
    exec.node_id = node_id;
    exec.demand_units = rtask.task.compute_demand_units;
    exec.checkpointable = flags.checkpointable;
    exec.last_checkpoint_progress_time_s = t;
    node.running.push_back(exec);
    rtask.replica_nodes.insert(node_id);

    auto& record = rec(id);
    if (record.exec_node < 0) {
        record.exec_node = node_id;
        record.exec_start_s = t;
    }
    if (record.materialized_s < 0.0) record.materialized_s = t;
    log(t, node.spec.layer == Layer::Leo ? "leo" : "engine", "execute", id,
        std::to_string(node_id));
    return true;
}

void Engine::decide_at_node(double t, TaskId id, int node_id) {
    auto& rtask = tasks_[id];
    if (rtask.terminal) return;
    rtask.location = node_id;
    auto& node = nodes_[node_id];
    auto& record = rec(id);
    if (record.materialized_s < 0.0 && !node.is_cohort) record.materialized_s = t;
    const auto cls = rtask.task.task_class;

    if (node.health.failed) {
        miss_task(t, id, "delivered_to_failed_node");
        return;
    }

    // ground: relay execution or retrieval endpoint
    if (node.is_ground) {
        if (cls == TaskClass::StorageRetrieval || rtask.task.compute_demand_units <= 0.0) {
            finish_task(t, id, t, "delivered_to_ground");
            return;
        }
        if (cls == TaskClass::BulkTraining && sc_.mode == SimMode::InOrbitCompute) {
            node.queued.push_back(id);  // picked up by the next global plan
            log(t, "geo", "pending_global", id, std::to_string(node_id));
            return;
        }
        // relay-mode compute happens on the ground processor
        const double exec_time =
            rtask.task.compute_demand_units / sc_.links.ground_capacity_units_s;
        auto& r2 = rec(id);
        r2.exec_node = node_id;
        r2.exec_start_s = t;
        push(t + exec_time, EvType::TaskCompleted, id, node_id, t + exec_time);
        return;
    }

    if (sc_.mode == SimMode::RelayOnly && cls != TaskClass::Housekeeping) {
        // constellation is a bent pipe: move the payload toward ground
        const auto graph = routing_graph();
        const auto route = earliest_delivery_route(graph, node_id, ground_set(), t,
                                                   std::max(rtask.task.input_bits, 1.0),
                                                   &reservations_);
        if (route) {
            start_transfer(id, TransferPurpose::TaskInput, *route, rtask.task.input_bits);
        } else {
            node.queued.push_back(id);
            log(t, "leo", "queue_no_route", id, std::to_string(node_id));
        }
        return;
    }

    // StorageRetrieval payloads head for ground immediately when possible
    if (cls == TaskClass::StorageRetrieval) {
        const auto graph = routing_graph();
        const auto route = earliest_delivery_route(graph, node_id, ground_set(), t,
                                                   std::max(rtask.task.input_bits, 1.0),
                                                   &reservations_);
        if (route) {
            start_transfer(id, TransferPurpose::TaskOutput, *route, rtask.task.input_bits);
        } else {
            node.queued.push_back(id);
            log(t, "leo", "queue_no_route", id, std::to_string(node_id));
        }
        return;
    }

    ++ledger_.audit.leo_local_decisions;
    const auto decision = leo_local_decide(node_view(node_id), rtask.task,
                                           node.table ? &*node.table : nullptr, t,
                                           sc_.zone_policy);
    if (decision.stale_table) {
        ++ledger_.stale_table_flags;
        log(t, "leo", "stale_table", id, std::to_string(node_id));
    }
    switch (decision.action) {
        case LocalAction::Execute:
            if (admit_execution(t, id, node_id, rtask.resume_progress)) return;
            node.queued.push_back(id);
            log(t, "leo", "queue", id, std::to_string(node_id), "admit_failed");
            return;
        case LocalAction::Forward: {
            const auto graph = routing_graph();
            const auto route = earliest_delivery_route(graph, node_id, {decision.next_hop}, t,
                                                       std::max(rtask.task.input_bits, 1.0),
                                                       &reservations_);
            if (route) {
                log(t, "leo", "forward", id,
                    std::to_string(node_id) + "->" + std::to_string(decision.next_hop));
                start_transfer(id, TransferPurpose::TaskInput, *route, rtask.task.input_bits);
            } else {
                node.queued.push_back(id);
                log(t, "leo", "queue_no_route", id, std::to_string(node_id));
            }
            return;
        }
        case LocalAction::Queue:
            node.queued.push_back(id);
            log(t, "leo", "queue", id, std::to_string(node_id), zone_name(node.pstate.zone));
            return;
    }
}

int Engine::start_transfer(TaskId task, TransferPurpose purpose, const Route& route,
                           double size_bits, double resume_progress,
                           const PrecomputedTable* table) {
    TransferRt tr;
    tr.id = static_cast<int>(transfers_.size());
    tr.task = task;
    tr.purpose = purpose;
    tr.size_bits = size_bits;
    tr.route = route;
    tr.dst = route.dst_node;
    tr.resume_progress = resume_progress;
    if (table) tr.table = *table;
    transfers_.push_back(tr);

    for (std::size_t h = 0; h < route.hops.size(); ++h) {
        const auto& hop = route.hops[h];
        reservations_.reserve(hop.contact_id, {hop.tx_start_s, hop.tx_end_s});
        auto& from = nodes_[hop.from_node];
        if (from.powered) {
            const Contact& c = plan_[static_cast<std::size_t>(hop.contact_id)];
            from.tx_intervals.push_back(
                {hop.tx_start_s, hop.tx_end_s, from.spec.power.p_tx_W_per_bps * c.rate_bps});
        }
        push(hop.arrival_s, EvType::TransferHop, tr.id, static_cast<std::int64_t>(h));
    }
    push(route.delivery_s, EvType::TransferDelivered, tr.id);
    return tr.id;
}

void Engine::on_transfer_hop(double t, int transfer_id, int hop_idx) {
    auto& tr = transfers_[static_cast<std::size_t>(transfer_id)];
    if (tr.cancelled) return;
    const auto& hop = tr.route.hops[static_cast<std::size_t>(hop_idx)];
    const Contact& c = plan_[static_cast<std::size_t>(hop.contact_id)];
    if (c.id != hop.contact_id) throw InvariantError("contact plan indexing out of sync");
    ledger_.links[static_cast<std::size_t>(hop.contact_id)].bits_carried += tr.size_bits;
    if (c.kind == ContactKind::Feeder) {
        if (nodes_[c.dst_node].is_ground)
            ledger_.feeder_bits_down += tr.size_bits;
        else
            ledger_.feeder_bits_up += tr.size_bits;
    }
    if (tr.task >= 0) tasks_[tr.task].location = hop.to_node;
    (void)t;
}

void Engine::on_transfer_delivered(double t, int transfer_id) {
    auto& tr = transfers_[static_cast<std::size_t>(transfer_id)];
    if (tr.cancelled) return;

    if (tr.purpose == TransferPurpose::ControlTable) {
        auto& node = nodes_[tr.dst];
        if (!node.table || tr.table.t_start >= node.table->t_start) {
            node.table = tr.table;
            log(t, "geo", "table_applied", -1, std::to_string(tr.dst));
        }
        return;
    }

    auto& rtask = tasks_[tr.task];
    if (rtask.terminal) return;

    switch (tr.purpose) {
        case TransferPurpose::Uplink:
        case TransferPurpose::TaskInput:
            decide_at_node(t, tr.task, tr.dst);
            break;
        case TransferPurpose::MigrationCheckpoint: {
            ++ledger_.migrations;
            ++rec(tr.task).migrations;
            log(t, "geo", "migration_arrived", tr.task, std::to_string(tr.dst));
            rtask.resume_progress = tr.resume_progress;
            if (!admit_execution(t, tr.task, tr.dst, tr.resume_progress)) {
                nodes_[tr.dst].queued.push_back(tr.task);
                log(t, "leo", "queue", tr.task, std::to_string(tr.dst), "migration_wait");
            }
            break;
        }
        case TransferPurpose::TaskOutput:
            finish_task(t, tr.task, t, "result_delivered");
            break;
        case TransferPurpose::ControlTable: break;
    }
}

void Engine::on_task_completed(double t, TaskId id, int node_id, double exact_t) {
    auto& rtask = tasks_[id];
    if (rtask.terminal) return;
    auto& record = rec(id);
    record.exec_end_s = exact_t;
    if (record.exec_node < 0) record.exec_node = node_id;

    cancel_replicas(id, node_id);

    // chained successor (EO compression -> retrieval); the successor keeps its
    // original arrival time so latency spans imaging to delivery
    for (auto& other : tasks_) {
        if (other.task.predecessor == id && !other.terminal)
            decide_at_node(t, other.task.task_id, node_id);
    }

    bool wants_return = false;
    if (rtask.task.output_bits > 0.0 && !nodes_[node_id].is_ground) {
        if (rtask.task.task_class == TaskClass::RealTimeInference)
            wants_return = sc_.workloads.dhts.results_to_ground;
        else if (rtask.task.task_class == TaskClass::BulkTraining)
            wants_return = true;
    }
    if (wants_return && !rtask.output_started) {
        const auto graph = routing_graph();
        const auto route = earliest_delivery_route(graph, node_id, ground_set(), t,
                                                   rtask.task.output_bits, &reservations_);
        if (route) {
            rtask.output_started = true;
            start_transfer(id, TransferPurpose::TaskOutput, *route, rtask.task.output_bits);
            return;
        }
        nodes_[node_id].pending_outputs.push_back(id);
        log(t, "leo", "output_no_route", id, std::to_string(node_id));
        return;
    }
    finish_task(t, id, exact_t, "executed");
}

void Engine::finish_task(double t, TaskId id, double completion_s, const std::string& detail) {
    auto& rtask = tasks_[id];
    if (rtask.terminal) return;
    rtask.terminal = true;
    cancel_replicas(id, -1);
    auto& record = rec(id);
    record.completion_s = completion_s;
    record.latency_s = completion_s - record.arrival_s;
    record.detail = detail;
    if (record.deadline_s >= 0.0 && completion_s > record.deadline_s) {
        record.status = TaskStatus::Missed;
        record.detail += ",deadline_missed";
    } else {
        record.status = TaskStatus::Completed;
    }
    (void)t;
}

void Engine::miss_task(double t, TaskId id, const std::string& detail) {
    auto& rtask = tasks_[id];
    if (rtask.terminal) return;
    rtask.terminal = true;
    cancel_replicas(id, -1);
    auto& record = rec(id);
    record.status = TaskStatus::Missed;
    record.detail = detail;
    log(t, "engine", "task_missed", id, std::to_string(rtask.location), detail);
}

void Engine::cancel_replicas(TaskId id, int except_node) {
    auto& rtask = tasks_[id];
    for (auto& node : nodes_) {
        if (node.spec.node_id == except_node) continue;
        std::erase_if(node.running, [&](const TaskExecution& e) { return e.task_id == id; });
        std::erase_if(node.paused, [&](const TaskExecution& e) { return e.task_id == id; });
        std::erase_if(node.queued, [&](TaskId q) { return q == id; });
        std::erase_if(node.pending_outputs, [&](TaskId q) { return q == id; });
    }
    for (auto& tr : transfers_) {
        if (tr.task == id && (tr.purpose == TransferPurpose::TaskInput ||
                              tr.purpose == TransferPurpose::MigrationCheckpoint))
            tr.cancelled = true;
    }
    rtask.replica_nodes.clear();
    if (except_node >= 0) rtask.replica_nodes.insert(except_node);
}

void Engine::on_local_retry(double t) {
    for (auto& node : nodes_) {
        if (node.queued.empty() && node.pending_outputs.empty()) continue;
        const std::vector<TaskId> queue = node.queued;
        node.queued.clear();
        for (TaskId id : queue) {
            if (tasks_[id].terminal) continue;
            const auto cls = tasks_[id].task.task_class;
            // global classes wait for the global planner
            if (sc_.mode == SimMode::InOrbitCompute &&
                (cls == TaskClass::BulkTraining) && !node.is_ground) {
                node.queued.push_back(id);
                continue;
            }
            if (cls == TaskClass::BulkTraining && node.is_ground) {
                node.queued.push_back(id);
                continue;
            }
            decide_at_node(t, id, node.spec.node_id);
        }
        const std::vector<TaskId> outputs = node.pending_outputs;
        node.pending_outputs.clear();
        for (TaskId id : outputs) {
            if (tasks_[id].terminal) continue;
            auto& rtask = tasks_[id];
            const auto graph = routing_graph();
            const auto route = earliest_delivery_route(graph, node.spec.node_id, ground_set(), t,
                                                       rtask.task.output_bits, &reservations_);
            if (route) {
                rtask.output_started = true;
                start_transfer(id, TransferPurpose::TaskOutput, *route, rtask.task.output_bits);
            } else {
                node.pending_outputs.push_back(id);
            }
        }
    }
    if (t < sc_.horizon_s)
        push(std::min(t + sc_.orchestrator.local_retry_s, sc_.horizon_s), EvType::LocalRetry);
}

void Engine::on_meo_epoch(double t) {
    ++ledger_.audit.meo_epochs;
    for (int meo : meo_ids_) {
        if (nodes_[meo].health.failed) continue;
        // footprint: LEO nodes with an active ISL contact to this MEO node
        std::vector<int> footprint;
        for (int leo : leo_ids_) {
            if (nodes_[leo].health.failed) continue;
            const auto it = contacts_of_node_.find(meo);
            if (it == contacts_of_node_.end()) continue;
            for (const Contact* c : it->second) {
                if (c->kind != ContactKind::Isl) continue;
                if (c->start_s <= t && t < c->end_s &&
                    ((c->src_node == meo && c->dst_node == leo) ||
                     (c->src_node == leo && c->dst_node == meo))) {
                    footprint.push_back(leo);
                    break;
                }
            }
        }
        if (footprint.size() < 2) continue;

        std::vector<LeoQueueSnapshot> snaps;
        for (int leo : footprint) {
            const auto& node = nodes_[leo];
            LeoQueueSnapshot snap;
            snap.node_id = leo;
            snap.zone = node.pstate.zone;
            snap.derated_capacity_units_s = derated_capacity_units_s(node.spec, node.health);
            for (TaskId id : node.queued) {
                const auto& task = tasks_[id].task;
                snap.queued.push_back(
                    {id, task.task_class, task.compute_demand_units, task.input_bits});
            }
            snaps.push_back(snap);
        }

        // restricted routing view: footprint + this MEO node only
        std::set<int> members(footprint.begin(), footprint.end());
        members.insert(meo);
        TimeExpandedGraph region = routing_graph();
        std::erase_if(region.contacts, [&](const Contact& c) {
            return !members.count(c.src_node) || !members.count(c.dst_node);
        });

        auto path_exists = [&](int from, int to) {
            return earliest_delivery_route(region, from, {to}, t,
                                           sc_.orchestrator.table_probe_bits, &reservations_)
                .has_value();
        };
        const auto result = meo_regional_rebalance(
            snaps, sc_.orchestrator.load_balance_threshold, sc_.zone_policy, path_exists);
        if (result.sla_risk)
            log(t, "meo", "sla_risk", -1, std::to_string(meo), "no_feasible_moves");

        for (const auto& move : result.moves) {
            auto& from = nodes_[move.from_node];
            const auto qit = std::find(from.queued.begin(), from.queued.end(), move.task);
            if (qit == from.queued.end()) continue;
            const auto route = earliest_delivery_route(
                region, move.from_node, {move.to_node}, t,
                std::max(tasks_[move.task].task.input_bits, 1.0), &reservations_);
            if (!route) continue;
            from.queued.erase(qit);
            ++ledger_.audit.meo_moves;
            ++ledger_.migrations;
            ++rec(move.task).migrations;
            log(t, "meo", "rebalance_move", move.task,
                std::to_string(move.from_node) + "->" + std::to_string(move.to_node));
            start_transfer(move.task, TransferPurpose::TaskInput, *route,
                           tasks_[move.task].task.input_bits);
        }
    }
    if (t < sc_.horizon_s)
        push(std::min(t + sc_.orchestrator.meo_epoch_s, sc_.horizon_s), EvType::MeoEpoch);
}

void Engine::on_geo_epoch(double t, bool bootstrap) {
    if (!bootstrap) ++ledger_.audit.geo_epochs;
    ++ledger_.audit.global_graph_builds;

    // SLA monitoring over the trailing window
    if (!bootstrap && !sc_.sla.targets.empty()) {
        std::vector<SlaObservation> window;
        for (const auto& record : ledger_.tasks) {
            if (record.status != TaskStatus::Completed) continue;
            if (record.completion_s > t - sc_.orchestrator.sla_window_s &&
                record.completion_s <= t)
                window.push_back({record.cls, record.latency_s});
        }
        SlaPolicyInput policy;
        policy.weight_multiplier_on_breach = sc_.orchestrator.sla_weight_multiplier;
        for (const auto& [cls, target] : sc_.sla.targets)
            policy.targets[cls] = {target.quantile, target.latency_bound_s};
        const auto report = sla_monitor(window, policy);
        for (const auto& line : report.classes) {
            ledger_.sla_reports.push_back({t, line.cls, line.quantile, line.bound_s,
                                           line.observed_s, line.samples, line.breach});
            if (line.breach) {
                ++ledger_.sla_breaches;
                log(t, "geo", "sla_breach", -1, task_class_name(line.cls),
                    "observed=" + std::to_string(line.observed_s));
            }
        }
        effective_latency_multiplier_ = report.weight_multiplier;
    }

    const auto graph = forecast_graph(t);
    auto ctx = placement_context();
    CostWeights weights = sc_.cost_weights;
    weights.w_latency *= effective_latency_multiplier_;

    GlobalPlanInputs inputs;
    inputs.now_s = t;
    inputs.planning_horizon_s = sc_.orchestrator.planning_horizon_s;
    inputs.table_validity_s = sc_.orchestrator.table_validity_s;
    inputs.table_probe_bits = sc_.orchestrator.table_probe_bits;
    inputs.graph = &graph;
    inputs.ctx = ctx;
    inputs.weights = weights;
    inputs.leo_nodes = leo_ids_;
    inputs.meo_nodes = meo_ids_;
    inputs.geo_nodes = geo_ids_;
    inputs.ground_nodes = ground_ids_;
    inputs.lunar_node = lunar_id_;
    inputs.reservations = &reservations_;

    // pending global tasks: queued BulkTraining / StorageRetrieval anywhere
    for (const auto& node : nodes_) {
        for (TaskId id : node.queued) {
            const auto& task = tasks_[id].task;
            if (task.task_class == TaskClass::BulkTraining ||
                task.task_class == TaskClass::StorageRetrieval)
                inputs.pending.push_back({task, node.spec.node_id});
        }
    }

    const auto result = geo_global_plan(inputs);

    for (const auto& table : result.tables) {
        if (bootstrap) {
            nodes_[table.node_id].table = table;
            continue;
        }
        if (geo_controller_ < 0) continue;
        if (table.node_id == geo_controller_) {
            nodes_[table.node_id].table = table;
            continue;
        }
        const auto route = earliest_delivery_route(graph, geo_controller_, {table.node_id}, t,
                                                   sc_.orchestrator.control_bundle_bits,
                                                   &reservations_);
        if (route) {
            start_transfer(-1, TransferPurpose::ControlTable, *route,
                           sc_.orchestrator.control_bundle_bits, 0.0, &table);
        } else {
            log(t, "geo", "table_undeliverable", -1, std::to_string(table.node_id));
        }
    }

    for (const auto& [task_id, decision] : result.placements) {
        auto& rtask = tasks_[task_id];
        if (rtask.terminal) continue;
        // remove from its queue
        auto& holder = nodes_[rtask.location];
        const auto qit = std::find(holder.queued.begin(), holder.queued.end(), task_id);
        if (qit == holder.queued.end()) continue;
        holder.queued.erase(qit);

        if (rtask.task.task_class == TaskClass::StorageRetrieval) {
            // payload transfer only
            if (decision.return_path.hops.empty()) {
                finish_task(t, task_id, t, "already_at_ground");
            } else {
                log(t, "geo", "retrieval_routed", task_id,
                    std::to_string(rtask.location) + "->" +
                        std::to_string(decision.return_path.dst_node));
                start_transfer(task_id, TransferPurpose::TaskOutput, decision.return_path,
                               rtask.task.input_bits);
            }
            continue;
        }

        enact_placement(t, task_id, decision, false);
        if (decision.risk > sc_.orchestrator.replication_risk_threshold &&
            rtask.task.replication_k > 1) {
            PlacementQuery query;
            query.task = rtask.task;
            query.origin_node = rtask.location;
            query.earliest_start_s = t;
            query.candidate_nodes = inputs.geo_nodes;
            query.candidate_nodes.insert(query.candidate_nodes.end(), meo_ids_.begin(),
                                         meo_ids_.end());
            if (lunar_id_ >= 0 && class_flags(rtask.task.task_class).delay_tolerant_ok)
                query.candidate_nodes.push_back(lunar_id_);
            if (rtask.task.output_bits > 0.0) query.result_destinations = ground_set();
            const auto replicas =
                replicate_decision(query, decision, graph, weights, ctx,
                                   sc_.orchestrator.replication_risk_threshold, &reservations_);
            for (std::size_t i = 1; i < replicas.size(); ++i) {
                ++ledger_.replicas_spawned;
                ++rec(task_id).replicas;
                enact_placement(t, task_id, replicas[i], true);
            }
            if (!replicas.empty() && replicas.front().degraded_replication)
                log(t, "geo", "degraded_replication", task_id, "");
        }
    }
    for (TaskId id : result.unplaceable)
        log(t, "geo", "unplaceable", id, std::to_string(tasks_[id].location));

    // degradation watchdog
    if (sc_.orchestrator.watchdog_enabled && !bootstrap) {
        std::vector<WatchdogNodeInput> wnodes;
        for (const auto& node : nodes_) {
            if (!node.powered || node.health.failed) continue;
            WatchdogNodeInput wn;
            wn.node_id = node.spec.node_id;
            wn.health = node.health;
            for (const auto& list : {node.running, node.paused}) {
                for (const auto& exec : list) {
                    if (!exec.checkpointable) continue;
                    const auto& task = tasks_[exec.task_id].task;
                    wn.running.push_back({exec.task_id, task.task_class, task.compute_demand_units,
                                          exec.progress, exec.progress, task.input_bits,
                                          task.output_bits, task.origin_node});
                }
            }
            wnodes.push_back(wn);
        }
        WatchdogConfig wcfg;
        wcfg.dose_fraction_threshold = sc_.orchestrator.watchdog_dose_fraction;
        wcfg.risk_threshold = sc_.orchestrator.watchdog_risk_threshold;
        wcfg.epoch_s = sc_.orchestrator.geo_epoch_s;
        wcfg.checkpoint_size_fraction = sc_.orchestrator.checkpoint_size_fraction;
        std::vector<int> candidates = leo_ids_;
        candidates.insert(candidates.end(), meo_ids_.begin(), meo_ids_.end());
        candidates.insert(candidates.end(), geo_ids_.begin(), geo_ids_.end());

        const auto wres =
            degradation_watchdog(wnodes, wcfg, graph, weights, ctx, candidates, &reservations_);
        for (const auto& mig : wres.migrations) {
            auto& from = nodes_[mig.from_node];
            auto& rtask = tasks_[mig.task];
            if (rtask.terminal) continue;
            // checkpoint now and freeze the source copy
            bool found = false;
            for (auto* list : {&from.running, &from.paused}) {
                const auto it = std::find_if(list->begin(), list->end(), [&](const auto& e) {
                    return e.task_id == mig.task;
                });
                if (it != list->end()) {
                    found = true;
                    if (!mig.fresh_replica) list->erase(it);
                    break;
                }
            }
            if (!found) continue;
            rtask.replica_nodes.erase(mig.fresh_replica ? -1 : mig.from_node);
            log(t, "geo", mig.fresh_replica ? "watchdog_replica" : "watchdog_migration", mig.task,
                std::to_string(mig.from_node) + "->" + std::to_string(mig.to_node),
                migration_trigger_name(mig.trigger));
            const double checkpoint_bits =
                std::max(1.0, rtask.task.input_bits * wcfg.checkpoint_size_fraction);
            Route route = mig.placement.forward;
            if (route.hops.empty()) {
                // co-located target (should not happen: source excluded)
                if (!admit_execution(t, mig.task, mig.to_node, mig.checkpoint_progress))
                    nodes_[mig.to_node].queued.push_back(mig.task);
                continue;
            }
            if (mig.fresh_replica) {
                ++ledger_.replicas_spawned;
                ++rec(mig.task).replicas;
                start_transfer(mig.task, TransferPurpose::TaskInput, route, rtask.task.input_bits);
            } else {
                start_transfer(mig.task, TransferPurpose::MigrationCheckpoint, route,
                               checkpoint_bits, mig.checkpoint_progress);
            }
        }
        for (TaskId id : wres.unprotected) {
            ++ledger_.unprotected_tasks;
            log(t, "geo", "unprotected_task", id, "");
        }
    }

    if (!bootstrap && t < sc_.horizon_s && geo_controller_ >= 0)
        push(std::min(t + sc_.orchestrator.geo_epoch_s, sc_.horizon_s), EvType::GeoEpoch);
}

void Engine::enact_placement(double t, TaskId id, const PlacementDecision& d, bool is_replica) {
    auto& rtask = tasks_[id];
    log(t, "geo", is_replica ? "replica_placed" : "placed", id,
        std::to_string(rtask.location) + "->" + std::to_string(d.execution_node),
        "cost=" + std::to_string(d.total_cost));
    if (d.forward.hops.empty()) {
        if (!admit_execution(t, id, d.execution_node, 0.0)) {
            nodes_[d.execution_node].queued.push_back(id);
            log(t, "leo", "queue", id, std::to_string(d.execution_node), "placement_wait");
        }
        return;
    }
    start_transfer(id, TransferPurpose::TaskInput, d.forward, rtask.task.input_bits);
}

// ---------------------------------------------------------------------------

}  // namespace

MetricsLedger run(const Scenario& scenario) {
    Engine engine(scenario);
    return engine.run_all();
}

std::vector<SweepEntry> sweep(const std::string& scenario_text, const std::string& key,
                              const std::vector<std::string>& values, int n_seeds, int workers) {
    if (values.empty()) throw ConfigError("sweep: empty value grid");
    if (n_seeds < 1) throw ConfigError("sweep: need at least one seed");

    struct Job {
        std::string key, value;
        std::uint64_t seed;
        std::string text;
    };
    const Scenario base = parse_scenario(scenario_text);
    std::vector<Job> jobs;
    for (const auto& value : values) {
        const std::string with_value =
            key.empty() ? scenario_text : override_scenario_key(scenario_text, key, value);
        for (int s = 0; s < n_seeds; ++s) {
            const std::uint64_t seed = base.seed + static_cast<std::uint64_t>(s);
            jobs.push_back(
                {key, value, seed,
                 override_scenario_key(with_value, "seed", std::to_string(seed))});
        }
    }

    std::vector<SweepEntry> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            SweepEntry entry;
            entry.key = jobs[i].key;
            entry.value = jobs[i].value;
            entry.seed = jobs[i].seed;
            try {
                const Scenario sc = parse_scenario(jobs[i].text);
                entry.ledger = run(sc);
                entry.ok = true;
            } catch (const std::exception& e) {
                entry.ok = false;
                entry.error = e.what();
            }
            results[i] = std::move(entry);
        }
    };
    const int n_workers = std::max(1, workers);
    std::vector<std::thread> pool;
    for (int i = 1; i < n_workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return results;
}

std::string sweep_aggregate_csv(const std::vector<SweepEntry>& entries) {
    std::ostringstream out;
    out << "param,value,seed,ok,tasks_generated,completed,missed,in_flight,mean_latency_s,"
           "p95_latency_s,feeder_bits_down,migrations,handovers,energy_Wh,error\n";
    for (const auto& e : entries) {
        if (!e.ok) {
            out << e.key << ',' << e.value << ',' << e.seed << ",0,,,,,,,,,," << '"' << e.error
                << '"' << '\n';
            continue;
        }
        std::size_t completed = 0, missed = 0, in_flight = 0;
        std::vector<double> latencies;
        for (const auto& t : e.ledger.tasks) {
            if (t.status == TaskStatus::Completed) {
                ++completed;
                latencies.push_back(t.latency_s);
            } else if (t.status == TaskStatus::Missed) {
                ++missed;
            } else {
                ++in_flight;
            }
        }
        double mean = 0.0;
        for (double v : latencies) mean += v;
        if (!latencies.empty()) mean /= static_cast<double>(latencies.size());
        const double p95 = empirical_quantile(latencies, 0.95);
        char buf[256];
        std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%.10g,%.10g,%.10g,%lld,%lld,%.10g,",
                      e.ledger.tasks.size(), completed, missed, in_flight, mean, p95,
                      e.ledger.feeder_bits_down,
                      static_cast<long long>(e.ledger.migrations),
                      static_cast<long long>(e.ledger.handovers),
                      e.ledger.total_load_energy_Wh);
        out << e.key << ',' << e.value << ',' << e.seed << ",1," << buf << '\n';
    }
    return out.str();
}

}  // namespace sbdc
