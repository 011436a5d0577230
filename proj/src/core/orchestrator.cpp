#include "orchestrator.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace sbdc {

const char* migration_trigger_name(MigrationTrigger t) {
    switch (t) {
        case MigrationTrigger::DegradationForecast: return "DegradationForecast";
        case MigrationTrigger::RedZone: return "RedZone";
        case MigrationTrigger::NodeFailure: return "NodeFailure";
        case MigrationTrigger::SlaRisk: return "SlaRisk";
    }
    return "?";
}

LocalDecision leo_local_decide(const LocalNodeView& node, const Task& task,
                               const PrecomputedTable* table, double now_s,
                               const ZonePolicy& policy) {
    const bool permitted = zone_permits(node.zone, task.task_class, task.compute_demand_units,
                                        node.derated_capacity_units_s, policy);
    const bool capacity_free =
        node.running_tasks < node.max_concurrent && node.derated_capacity_units_s > 0.0;

    if (permitted && capacity_free && task.compute_demand_units > 0.0)
        return {LocalAction::Execute, node.node_id, false};

    // Red zone queues everything non-housekeeping for handoff
    if (node.zone == EnergyZone::Red && task.task_class != TaskClass::Housekeeping)
        return {LocalAction::Queue, -1, false};

    if (table == nullptr || !table->valid_at(now_s))
        return {LocalAction::Queue, -1, table != nullptr};

    const auto it = table->entries.find(task.task_class);
    if (it == table->entries.end()) return {LocalAction::Queue, -1, false};
    const int hop = it->second.next_hop;
    if (hop >= 0 && hop != node.node_id) return {LocalAction::Forward, hop, false};
    const int fb = it->second.fallback;
    if (fb >= 0 && fb != node.node_id) return {LocalAction::Forward, fb, false};
    return {LocalAction::Queue, -1, false};
}

RebalanceResult meo_regional_rebalance(std::vector<LeoQueueSnapshot> footprint, double threshold,
                                       const ZonePolicy& policy,
                                       const std::function<bool(int, int)>& path_exists) {
    RebalanceResult result;
    if (footprint.size() < 2) return result;

    std::sort(footprint.begin(), footprint.end(),
              [](const auto& a, const auto& b) { return a.node_id < b.node_id; });

    for (;;) {
        // deterministic ordering by (queue length, node_id)
        const auto most = std::max_element(
            footprint.begin(), footprint.end(), [](const auto& a, const auto& b) {
                if (a.queued.size() != b.queued.size()) return a.queued.size() < b.queued.size();
                return a.node_id > b.node_id;  // ties toward the lowest id
            });
        std::size_t min_len = SIZE_MAX;
        for (const auto& s : footprint)
            if (&s != &*most) min_len = std::min(min_len, s.queued.size());
        if (min_len == SIZE_MAX) break;

        const double max_len = static_cast<double>(most->queued.size());
        if (max_len <= threshold * std::max<double>(1.0, static_cast<double>(min_len))) break;

        // newest queued interruptible task that fits on the least loaded feasible node
        std::vector<const LeoQueueSnapshot*> targets;
        for (const auto& s : footprint)
            if (s.node_id != most->node_id) targets.push_back(&s);
        std::sort(targets.begin(), targets.end(), [](const auto* a, const auto* b) {
            if (a->queued.size() != b->queued.size()) return a->queued.size() < b->queued.size();
            return a->node_id < b->node_id;
        });

        bool moved = false;
        for (auto it = most->queued.rbegin(); it != most->queued.rend() && !moved; ++it) {
            if (!class_flags(it->cls).interruptible) continue;
            for (const auto* target : targets) {
                if (!zone_permits(target->zone, it->cls, it->demand_units,
                                  target->derated_capacity_units_s, policy))
                    continue;
                if (target->derated_capacity_units_s <= 0.0) continue;
                if (!path_exists(most->node_id, target->node_id)) continue;
                result.moves.push_back({it->id, most->node_id, target->node_id});
                auto* mut = const_cast<LeoQueueSnapshot*>(target);
                mut->queued.push_back(*it);
                most->queued.erase(std::next(it).base());
                moved = true;
                break;
            }
        }
        if (!moved) {
            result.sla_risk = true;
            break;
        }
    }
    return result;
}

namespace {

// first hop of the best route, or the node itself when already at a target
std::optional<int> route_first_hop(const TimeExpandedGraph& graph, int src,
                                   const std::set<int>& targets, double now_s, double probe_bits,
                                   const ReservationLedger* reservations,
                                   std::optional<int> exclude_neighbor = std::nullopt) {
    if (targets.empty()) return std::nullopt;
    if (targets.count(src)) return src;
    if (!exclude_neighbor)
        if (const auto route = earliest_delivery_route(graph, src, targets, now_s, probe_bits,
                                                       reservations);
            route && !route->hops.empty())
            return route->hops.front().to_node;
    if (exclude_neighbor) {
        TimeExpandedGraph filtered = graph;
        std::erase_if(filtered.contacts, [&](const Contact& c) {
            return c.src_node == src && c.dst_node == *exclude_neighbor;
        });
        if (const auto route = earliest_delivery_route(filtered, src, targets, now_s, probe_bits,
                                                       reservations);
            route && !route->hops.empty())
            return route->hops.front().to_node;
    }
    return std::nullopt;
}

}  // namespace

GlobalPlanResult geo_global_plan(const GlobalPlanInputs& inputs) {
    GlobalPlanResult result;
    const auto& graph = *inputs.graph;

    // class destination roles
    std::set<int> ground_set(inputs.ground_nodes.begin(), inputs.ground_nodes.end());
    std::set<int> geo_set(inputs.geo_nodes.begin(), inputs.geo_nodes.end());

    auto compute_peers = [&](int self) {
        // alive compute nodes whose first-slot forecast is not Red
        std::set<int> peers;
        for (const auto& list : {inputs.leo_nodes, inputs.meo_nodes, inputs.geo_nodes}) {
            for (int n : list) {
                if (n == self) continue;
                const auto info = inputs.ctx.nodes.find(n);
                if (info == inputs.ctx.nodes.end() || !info->second.alive) continue;
                const auto& ann = graph.annotation(n, 0);
                if (ann.predicted_zone == EnergyZone::Red) continue;
                if (ann.available_capacity_units_s <= 0.0) continue;
                peers.insert(n);
            }
        }
        return peers;
    };

    std::vector<int> table_nodes = inputs.leo_nodes;
    table_nodes.insert(table_nodes.end(), inputs.meo_nodes.begin(), inputs.meo_nodes.end());
    std::sort(table_nodes.begin(), table_nodes.end());

    for (int node : table_nodes) {
        PrecomputedTable table;
        table.node_id = node;
        table.t_start = inputs.now_s;
        table.t_end = inputs.now_s + inputs.table_validity_s;
        for (TaskClass cls :
             {TaskClass::RealTimeInference, TaskClass::InterruptibleCompression,
              TaskClass::BulkTraining, TaskClass::StorageRetrieval, TaskClass::Housekeeping}) {
            TableEntry entry;
            std::set<int> targets;
            switch (cls) {
                case TaskClass::Housekeeping:
                    entry.next_hop = node;  // always local
                    table.entries[cls] = entry;
                    continue;
                case TaskClass::BulkTraining: targets = geo_set; break;
                case TaskClass::StorageRetrieval: targets = ground_set; break;
                default: targets = compute_peers(node); break;
            }
            const auto hop = route_first_hop(graph, node, targets, inputs.now_s,
                                             inputs.table_probe_bits, inputs.reservations);
            if (hop) {
                entry.next_hop = *hop;
                const auto fb = route_first_hop(graph, node, targets, inputs.now_s,
                                                inputs.table_probe_bits, inputs.reservations,
                                                *hop);
                if (fb && *fb != *hop) entry.fallback = *fb;
            }
            table.entries[cls] = entry;
        }
        result.tables.push_back(std::move(table));
    }

    // pending global tasks in deadline order (absent deadlines last), then id
    std::vector<PendingGlobalTask> pending = inputs.pending;
    std::sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) {
        const double da = a.task.deadline_s.value_or(std::numeric_limits<double>::infinity());
        const double db = b.task.deadline_s.value_or(std::numeric_limits<double>::infinity());
        if (da != db) return da < db;
        return a.task.task_id < b.task.task_id;
    });

    for (const auto& p : pending) {
        PlacementQuery query;
        query.task = p.task;
        query.origin_node = p.location_node;
        query.earliest_start_s = inputs.now_s;

        if (p.task.task_class == TaskClass::StorageRetrieval) {
            // pure transfer: "execute" where it sits and route the payload home
            query.candidate_nodes = {p.location_node};
            query.result_destinations = ground_set;
        } else {
            std::vector<int> candidates = inputs.geo_nodes;
            candidates.insert(candidates.end(), inputs.meo_nodes.begin(), inputs.meo_nodes.end());
            if (inputs.lunar_node >= 0 && class_flags(p.task.task_class).delay_tolerant_ok)
                candidates.push_back(inputs.lunar_node);
            query.candidate_nodes = candidates;
            if (p.task.output_bits > 0.0) query.result_destinations = ground_set;
        }
        if (query.candidate_nodes.empty()) {
            result.unplaceable.push_back(p.task.task_id);
            continue;
        }
        const auto decision =
            place_task(query, graph, inputs.weights, inputs.ctx, inputs.reservations);
        if (decision)
            result.placements.emplace_back(p.task.task_id, *decision);
        else
            result.unplaceable.push_back(p.task.task_id);
    }
    return result;
}

WatchdogResult degradation_watchdog(const std::vector<WatchdogNodeInput>& nodes,
                                    const WatchdogConfig& config, const TimeExpandedGraph& graph,
                                    const CostWeights& weights, const PlacementContext& ctx,
                                    const std::vector<int>& candidate_nodes,
                                    const ReservationLedger* reservations) {
    WatchdogResult result;
    std::vector<WatchdogNodeInput> ordered = nodes;
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.node_id < b.node_id; });

    for (const auto& node : ordered) {
        const double dose_fraction =
            node.health.tid_tolerance_krad > 0.0
                ? node.health.tid_accumulated_krad / node.health.tid_tolerance_krad
                : 1.0;
        const double epoch_risk = failure_risk(node.health, config.epoch_s, ctx.risk_params);
        const bool degrading =
            dose_fraction > config.dose_fraction_threshold || epoch_risk > config.risk_threshold;
        if (!degrading) continue;

        for (const auto& task : node.running) {
            std::set<int> excluded{node.node_id};
            PlacementQuery query;
            query.task.task_id = task.id;
            query.task.task_class = task.cls;
            query.task.compute_demand_units =
                task.demand_units * (1.0 - task.checkpoint_progress);
            query.task.input_bits =
                std::max(1.0, task.input_bits * config.checkpoint_size_fraction);
            query.task.output_bits = task.output_bits;
            query.origin_node = node.node_id;
            query.earliest_start_s = graph.t0_s;
            query.candidate_nodes = candidate_nodes;

            auto placement = place_task(query, graph, weights, ctx, reservations, &excluded);
            if (placement) {
                result.migrations.push_back({task.id, node.node_id, placement->execution_node,
                                             task.checkpoint_progress, false, *placement,
                                             MigrationTrigger::DegradationForecast});
                continue;
            }
            // no checkpoint target: try a fresh replica from the task's origin
            if (task.origin_node >= 0 && task.origin_node != node.node_id) {
                PlacementQuery fresh = query;
                fresh.task.compute_demand_units = task.demand_units;
                fresh.task.input_bits = std::max(1.0, task.input_bits);
                fresh.origin_node = task.origin_node;
                placement = place_task(fresh, graph, weights, ctx, reservations, &excluded);
                if (placement) {
                    result.migrations.push_back({task.id, node.node_id,
                                                 placement->execution_node, 0.0, true, *placement,
                                                 MigrationTrigger::DegradationForecast});
                    continue;
                }
            }
            result.unprotected.push_back(task.id);
        }
    }
    return result;
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double rank = std::ceil(q * static_cast<double>(values.size()));
    const std::size_t idx = static_cast<std::size_t>(
        std::clamp(rank - 1.0, 0.0, static_cast<double>(values.size() - 1)));
    return values[idx];
}

SlaReport sla_monitor(const std::vector<SlaObservation>& window, const SlaPolicyInput& policy) {
    SlaReport report;
    for (const auto& [cls, target] : policy.targets) {
        const auto [quantile, bound] = target;
        std::vector<double> latencies;
        for (const auto& obs : window)
            if (obs.cls == cls) latencies.push_back(obs.latency_s);
        SlaClassReport line;
        line.cls = cls;
        line.quantile = quantile;
        line.bound_s = bound;
        line.samples = latencies.size();
        if (!latencies.empty()) {
            line.observed_s = empirical_quantile(latencies, quantile);
            line.breach = line.observed_s > bound;
        }
        report.any_breach = report.any_breach || line.breach;
        report.classes.push_back(line);
    }
    report.weight_multiplier = report.any_breach ? policy.weight_multiplier_on_breach : 1.0;
    return report;
}

}  // namespace sbdc
