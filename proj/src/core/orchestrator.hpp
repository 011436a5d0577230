#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "contact_graph.hpp"
#include "routing.hpp"
#include "tasks.hpp"

namespace sbdc {

enum class ControllerTier { LeoLocal, MeoRegional, GeoGlobal };

struct TableEntry {
    int next_hop = -1;  // -1: no route known, queue
    int fallback = -1;
};

struct PrecomputedTable {
    int node_id = -1;
    double t_start = 0.0;
    double t_end = 0.0;
    std::map<TaskClass, TableEntry> entries;

    bool valid_at(double t) const { return t >= t_start && t <= t_end; }
};

enum class LocalAction { Execute, Forward, Queue };

struct LocalDecision {
    LocalAction action = LocalAction::Queue;
    int next_hop = -1;
    bool stale_table = false;
};

struct LocalNodeView {
    int node_id = -1;
    EnergyZone zone = EnergyZone::Green;
    double derated_capacity_units_s = 0.0;
    int running_tasks = 0;
    int max_concurrent = 16;
};

// LEO-local decision from the precomputed table; consults nothing global.
LocalDecision leo_local_decide(const LocalNodeView& node, const Task& task,
                               const PrecomputedTable* table, double now_s,
                               const ZonePolicy& policy);

struct QueuedTaskBrief {
    TaskId id = -1;
    TaskClass cls = TaskClass::Housekeeping;
    double demand_units = 0.0;
    double input_bits = 0.0;
};

struct LeoQueueSnapshot {
    int node_id = -1;
    EnergyZone zone = EnergyZone::Green;
    double derated_capacity_units_s = 0.0;
    std::vector<QueuedTaskBrief> queued;  // oldest first
};

struct RebalanceMove {
    TaskId task = -1;
    int from_node = -1;
    int to_node = -1;
};

struct RebalanceResult {
    std::vector<RebalanceMove> moves;
    bool sla_risk = false;  // overloaded but nothing movable
};

// Move newest queued interruptible tasks from the most to the least loaded
// feasible node until max <= threshold * max(1, min).
RebalanceResult meo_regional_rebalance(std::vector<LeoQueueSnapshot> footprint, double threshold,
                                       const ZonePolicy& policy,
                                       const std::function<bool(int, int)>& path_exists);

struct PendingGlobalTask {
    Task task;
    int location_node = -1;  // where the input currently sits
};

struct GlobalPlanInputs {
    double now_s = 0.0;
    double planning_horizon_s = 600.0;
    double table_validity_s = 900.0;
    double table_probe_bits = 1e6;
    const TimeExpandedGraph* graph = nullptr;
    PlacementContext ctx;
    CostWeights weights;  // already SLA-biased by the caller
    std::vector<int> leo_nodes, meo_nodes, geo_nodes, ground_nodes;
    int lunar_node = -1;
    std::vector<PendingGlobalTask> pending;
    const ReservationLedger* reservations = nullptr;
};

struct GlobalPlanResult {
    std::vector<PrecomputedTable> tables;  // for every LEO and MEO node
    std::vector<std::pair<TaskId, PlacementDecision>> placements;
    std::vector<TaskId> unplaceable;
};

GlobalPlanResult geo_global_plan(const GlobalPlanInputs& inputs);

enum class MigrationTrigger { DegradationForecast, RedZone, NodeFailure, SlaRisk };

const char* migration_trigger_name(MigrationTrigger t);

struct RunningTaskBrief {
    TaskId id = -1;
    TaskClass cls = TaskClass::Housekeeping;
    double demand_units = 0.0;
    double progress = 0.0;
    double checkpoint_progress = 0.0;
    double input_bits = 0.0;
    double output_bits = 0.0;
    int origin_node = -1;  // where a fresh replica could restart from
};

struct WatchdogNodeInput {
    int node_id = -1;
    NodeHealth health;
    std::vector<RunningTaskBrief> running;  // checkpointable tasks only
};

struct MigrationPlanOut {
    TaskId task = -1;
    int from_node = -1;
    int to_node = -1;
    double checkpoint_progress = 0.0;
    bool fresh_replica = false;  // re-placed from origin instead of checkpoint
    PlacementDecision placement;
    MigrationTrigger trigger = MigrationTrigger::DegradationForecast;
};

struct WatchdogConfig {
    double dose_fraction_threshold = 0.9;
    double risk_threshold = 0.05;
    double epoch_s = 300.0;
    double checkpoint_size_fraction = 0.1;
};

struct WatchdogResult {
    std::vector<MigrationPlanOut> migrations;
    std::vector<TaskId> unprotected;
};

WatchdogResult degradation_watchdog(const std::vector<WatchdogNodeInput>& nodes,
                                    const WatchdogConfig& config, const TimeExpandedGraph& graph,
                                    const CostWeights& weights, const PlacementContext& ctx,
                                    const std::vector<int>& candidate_nodes,
                                    const ReservationLedger* reservations = nullptr);

struct SlaObservation {
    TaskClass cls;
    double latency_s;
};

struct SlaClassReport {
    TaskClass cls;
    double quantile = 0.95;
    double bound_s = 0.0;
    double observed_s = 0.0;
    std::size_t samples = 0;
    bool breach = false;
};

struct SlaReport {
    std::vector<SlaClassReport> classes;
    bool any_breach = false;
    double weight_multiplier = 1.0;  // applied to w_latency next epoch
};

struct SlaPolicyInput {
    std::map<TaskClass, std::pair<double, double>> targets;  // class -> (quantile, bound)
    double weight_multiplier_on_breach = 2.0;
};

SlaReport sla_monitor(const std::vector<SlaObservation>& window, const SlaPolicyInput& policy);

// nearest-rank empirical quantile
double empirical_quantile(std::vector<double> values, double q);

}  // namespace sbdc
