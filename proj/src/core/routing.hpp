#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "contact_graph.hpp"
#include "tasks.hpp"

namespace sbdc {

struct CostWeights {
    double w_latency = 1.0;   // cost per second
    double w_energy = 0.1;    // cost per Wh
    double w_risk = 100.0;    // cost per unit probability
};

struct Interval {
    double start_s = 0.0;
    double end_s = 0.0;
};

// Per-contact capacity bookkeeping. Bundles are atomic: each hop needs a
// contiguous free transmission interval inside the contact window.
class ReservationLedger {
public:
    std::optional<Interval> earliest_fit(int contact_id, double window_start, double window_end,
                                         double ready_s, double duration_s) const;
    void reserve(int contact_id, const Interval& iv);
    double reserved_bits(const Contact& c) const;
    const std::vector<Interval>* intervals(int contact_id) const;

private:
    std::map<int, std::vector<Interval>> busy_;
};

struct RouteHop {
    int contact_id = -1;
    int from_node = -1;
    int to_node = -1;
    double tx_start_s = 0.0;
    double tx_end_s = 0.0;
    double arrival_s = 0.0;  // tx_end + owlt
};

struct Route {
    std::vector<RouteHop> hops;
    double delivery_s = 0.0;  // equals start time for an empty route
    int dst_node = -1;
};

// Shared tie-break: (delivery_time, hop_count, lexicographic node sequence).
int compare_routes(const Route& a, const Route& b);

// Earliest-delivery label-setting search over the contact set of the graph.
// Exact under the composite order; waiting at a node is implicit.
std::optional<Route> earliest_delivery_route(const TimeExpandedGraph& graph, int src_node,
                                             const std::set<int>& dst_nodes, double t0_s,
                                             double size_bits,
                                             const ReservationLedger* reservations = nullptr);

struct NodeRoutingInfo {
    int node_id = -1;
    Layer layer = Layer::Leo;
    bool alive = true;
    double p_tx_W_per_bps = 0.0;
    double energy_per_unit_J = 0.0;  // compute energy per demand unit
    NodeHealth health;
};

struct PlacementContext {
    std::map<int, NodeRoutingInfo> nodes;
    OutageModel outage;
    RiskParams risk_params;
    ZonePolicy zone_policy;
    int max_hops = 4;  // per-leg bound for the placement path space
};

struct PlacementQuery {
    Task task;
    int origin_node = -1;
    double earliest_start_s = 0.0;
    std::vector<int> candidate_nodes;
    std::set<int> result_destinations;  // empty: no return leg
};

struct PlacementDecision {
    int execution_node = -1;
    Route forward;
    Route return_path;
    double exec_start_s = 0.0;
    double exec_end_s = 0.0;
    double estimated_completion_s = 0.0;
    double latency_s = 0.0;
    double energy_Wh = 0.0;
    double risk = 0.0;
    double total_cost = 0.0;
    int replication_k = 1;
    bool degraded_replication = false;
};

struct CostBreakdown {
    double latency_s = 0.0;
    double energy_Wh = 0.0;
    double risk = 0.0;
};

double placement_cost(const CostBreakdown& parts, const CostWeights& weights);

// Earliest feasible execution span at a node: every spanned slot must permit
// the class (zone + lightweight gate), satisfy the thermal gate, and offer
// capacity. Returns nullopt when no span fits inside the horizon.
std::optional<std::pair<double, double>> schedule_execution(const TimeExpandedGraph& graph,
                                                            int node_id, double ready_s,
                                                            double demand_units, TaskClass cls,
                                                            const PlacementContext& ctx);

// Joint communication-and-computation placement: exact minimum over
// {candidate x forward path x return path} under the shared tie-break
// (cost, completion, hops, node_id, lexicographic nodes).
std::optional<PlacementDecision> place_task(const PlacementQuery& query,
                                            const TimeExpandedGraph& graph,
                                            const CostWeights& weights,
                                            const PlacementContext& ctx,
                                            const ReservationLedger* reservations = nullptr,
                                            const std::set<int>* excluded_nodes = nullptr);

// Greedy next-best replication on disjoint execution nodes when the primary
// risk exceeds the threshold.
std::vector<PlacementDecision> replicate_decision(const PlacementQuery& query,
                                                  const PlacementDecision& primary,
                                                  const TimeExpandedGraph& graph,
                                                  const CostWeights& weights,
                                                  const PlacementContext& ctx,
                                                  double risk_threshold,
                                                  const ReservationLedger* reservations = nullptr);

// Structured one-line-per-segment trace for oracle comparison.
std::string decision_trace(const PlacementDecision& d);

}  // namespace sbdc
