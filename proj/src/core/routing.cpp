#include "routing.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "errors.hpp"

namespace sbdc {

namespace {

int lex_compare(const std::vector<int>& a, const std::vector<int>& b) {
    if (std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end())) return -1;
    if (std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end())) return 1;
    return 0;
}

std::vector<int> route_nodes(const Route& r, int src) {
    std::vector<int> nodes{src};
    for (const auto& h : r.hops) nodes.push_back(h.to_node);
    return nodes;
}

double storage_limit(const TimeExpandedGraph& g, int node) {
    const auto it = g.storage_bits.find(node);
    return it == g.storage_bits.end() ? std::numeric_limits<double>::infinity() : it->second;
}

}  // namespace

std::optional<Interval> ReservationLedger::earliest_fit(int contact_id, double window_start,
                                                        double window_end, double ready_s,
                                                        double duration_s) const {
    double start = std::max(ready_s, window_start);
    const auto it = busy_.find(contact_id);
    if (it != busy_.end()) {
        for (const auto& iv : it->second) {
            if (start + duration_s <= iv.start_s) break;
            start = std::max(start, iv.end_s);
        }
    }
    if (start + duration_s <= window_end) return Interval{start, start + duration_s};
    return std::nullopt;
}

void ReservationLedger::reserve(int contact_id, const Interval& iv) {
    auto& list = busy_[contact_id];
    const auto pos = std::lower_bound(
        list.begin(), list.end(), iv,
        [](const Interval& a, const Interval& b) { return a.start_s < b.start_s; });
    list.insert(pos, iv);
}

double ReservationLedger::reserved_bits(const Contact& c) const {
    const auto it = busy_.find(c.id);
    if (it == busy_.end()) return 0.0;
    double seconds = 0.0;
    for (const auto& iv : it->second) seconds += iv.end_s - iv.start_s;
    return seconds * c.rate_bps;
}

const std::vector<Interval>* ReservationLedger::intervals(int contact_id) const {
    const auto it = busy_.find(contact_id);
    return it == busy_.end() ? nullptr : &it->second;
}

int compare_routes(const Route& a, const Route& b) {
    if (a.delivery_s != b.delivery_s) return a.delivery_s < b.delivery_s ? -1 : 1;
    if (a.hops.size() != b.hops.size()) return a.hops.size() < b.hops.size() ? -1 : 1;
    std::vector<int> an, bn;
    for (const auto& h : a.hops) an.push_back(h.to_node);
    for (const auto& h : b.hops) bn.push_back(h.to_node);
    return lex_compare(an, bn);
}

namespace {

struct Label {
    double arrival;
    int node;
    std::vector<int> nodes;  // visited sequence including src
    std::vector<RouteHop> hops;
    std::uint64_t seq;
};

// composite order: (arrival, hop count, lexicographic node sequence)
int compare_labels(const Label& a, const Label& b) {
    if (a.arrival != b.arrival) return a.arrival < b.arrival ? -1 : 1;
    if (a.hops.size() != b.hops.size()) return a.hops.size() < b.hops.size() ? -1 : 1;
    return lex_compare(a.nodes, b.nodes);
}

// A dominates B when it is no worse in arrival and hops, and not lex-worse on ties.
bool dominates(const Label& a, const Label& b) {
    if (a.arrival > b.arrival || a.nodes.size() > b.nodes.size()) return false;
    if (a.arrival < b.arrival || a.nodes.size() < b.nodes.size()) return true;
    return lex_compare(a.nodes, b.nodes) <= 0;
}

}  // namespace

std::optional<Route> earliest_delivery_route(const TimeExpandedGraph& graph, int src_node,
                                             const std::set<int>& dst_nodes, double t0_s,
                                             double size_bits,
                                             const ReservationLedger* reservations) {
    if (dst_nodes.empty()) throw ConfigError("earliest_delivery_route: empty destination set");
    if (!(size_bits > 0.0)) throw ConfigError("earliest_delivery_route: size must be > 0");

    static const ReservationLedger kEmpty;
    const ReservationLedger& res = reservations ? *reservations : kEmpty;

    // adjacency by transmitting node, contact-id order
    std::map<int, std::vector<const Contact*>> adjacency;
    for (const auto& c : graph.contacts) adjacency[c.src_node].push_back(&c);

    auto cmp = [](const Label& a, const Label& b) {
        const int c = compare_labels(a, b);
        if (c != 0) return c > 0;
        return a.seq > b.seq;  // FIFO among fully tied labels
    };
    std::priority_queue<Label, std::vector<Label>, decltype(cmp)> open(cmp);
    std::map<int, std::vector<Label>> fronts;  // non-dominated labels per node
    std::uint64_t seq = 0;

    if (dst_nodes.count(src_node)) return Route{{}, t0_s, src_node};

    Label start{t0_s, src_node, {src_node}, {}, seq++};
    fronts[src_node].push_back(start);
    open.push(std::move(start));

    while (!open.empty()) {
        Label cur = open.top();
        open.pop();
        // lazy pruning: skip labels dominated after they were pushed
        bool stale = false;
        for (const auto& f : fronts[cur.node]) {
            if (f.seq != cur.seq && dominates(f, cur)) {
                stale = true;
                break;
            }
        }
        if (stale) continue;
        if (dst_nodes.count(cur.node)) return Route{cur.hops, cur.arrival, cur.node};

        const auto adj = adjacency.find(cur.node);
        if (adj == adjacency.end()) continue;
        for (const Contact* c : adj->second) {
            if (std::find(cur.nodes.begin(), cur.nodes.end(), c->dst_node) != cur.nodes.end())
                continue;  // simple paths only
            if (size_bits > storage_limit(graph, c->dst_node)) continue;
            const auto fit = res.earliest_fit(c->id, c->start_s, c->end_s, cur.arrival,
                                              size_bits / c->rate_bps);
            if (!fit) continue;

            Label next;
            next.arrival = fit->end_s + c->owlt_s;
            next.node = c->dst_node;
            next.nodes = cur.nodes;
            next.nodes.push_back(c->dst_node);
            next.hops = cur.hops;
            next.hops.push_back({c->id, c->src_node, c->dst_node, fit->start_s, fit->end_s,
                                 next.arrival});
            next.seq = seq++;

            auto& front = fronts[next.node];
            bool dominated = false;
            for (const auto& f : front) {
                if (dominates(f, next)) {
                    dominated = true;
                    break;
                }
            }
            if (dominated) continue;
            std::erase_if(front, [&](const Label& f) { return dominates(next, f); });
            front.push_back(next);
            open.push(std::move(next));
        }
    }
    return std::nullopt;
}

double placement_cost(const CostBreakdown& parts, const CostWeights& weights) {
    return weights.w_latency * parts.latency_s + weights.w_energy * parts.energy_Wh +
           weights.w_risk * parts.risk;
}

std::optional<std::pair<double, double>> schedule_execution(const TimeExpandedGraph& graph,
                                                            int node_id, double ready_s,
                                                            double demand_units, TaskClass cls,
                                                            const PlacementContext& ctx) {
    if (demand_units <= 0.0) return std::make_pair(ready_s, ready_s);
    if (ready_s >= graph.t0_s + graph.horizon_s) return std::nullopt;

    const int first_slot = graph.slot_of(std::max(ready_s, graph.t0_s));
    for (int s = first_slot; s < graph.n_slots; ++s) {
        const double start = std::max(ready_s, graph.slot_start(s));
        if (start >= graph.slot_end(s)) continue;

        double t = start;
        double remaining = demand_units;
        int i = s;
        bool blocked = false;
        while (remaining > 0.0) {
            if (i >= graph.n_slots) {
                blocked = true;
                i = graph.n_slots;  // nothing later can help
                break;
            }
            const auto& a = graph.annotation(node_id, i);
            const bool feasible =
                a.available_capacity_units_s > 0.0 &&
                a.thermal_headroom >= ctx.zone_policy.thermal_gate &&
                zone_permits(a.predicted_zone, cls, demand_units, a.available_capacity_units_s,
                             ctx.zone_policy);
            if (!feasible) {
                blocked = true;
                break;
            }
            const double span = graph.slot_end(i) - t;
            const double need = remaining / a.available_capacity_units_s;
            if (need <= span) {
                t += need;
                remaining = 0.0;
            } else {
                remaining -= a.available_capacity_units_s * span;
                t = graph.slot_end(i);
                ++i;
            }
        }
        if (!blocked && remaining <= 0.0) return std::make_pair(start, t);
        // starting anywhere before the blocking slot cannot succeed either
        s = std::max(s, i);
    }
    return std::nullopt;
}

namespace {

struct LegResult {
    Route route;
    double energy_J = 0.0;
    double survival = 1.0;  // product of (1 - segment risk)
};

struct CandidateOutcome {
    PlacementDecision decision;
    std::vector<int> fwd_nodes, ret_nodes;
};

// (cost, completion, total hops, node id, lexicographic node sequences)
int compare_outcomes(const CandidateOutcome& a, const CandidateOutcome& b) {
    if (a.decision.total_cost != b.decision.total_cost)
        return a.decision.total_cost < b.decision.total_cost ? -1 : 1;
    if (a.decision.estimated_completion_s != b.decision.estimated_completion_s)
        return a.decision.estimated_completion_s < b.decision.estimated_completion_s ? -1 : 1;
    const std::size_t ah = a.decision.forward.hops.size() + a.decision.return_path.hops.size();
    const std::size_t bh = b.decision.forward.hops.size() + b.decision.return_path.hops.size();
    if (ah != bh) return ah < bh ? -1 : 1;
    if (a.decision.execution_node != b.decision.execution_node)
        return a.decision.execution_node < b.decision.execution_node ? -1 : 1;
    const int fc = lex_compare(a.fwd_nodes, b.fwd_nodes);
    if (fc != 0) return fc;
    return lex_compare(a.ret_nodes, b.ret_nodes);
}

double edge_risk(const Contact& c, double tx_duration_s, const PlacementContext& ctx) {
    if (c.kind != ContactKind::Isl) return 0.0;
    if (ctx.outage.outage_rate_per_s <= 0.0) return 0.0;
    return 1.0 - std::exp(-ctx.outage.outage_rate_per_s * tx_duration_s);
}

}  // namespace

std::optional<PlacementDecision> place_task(const PlacementQuery& query,
                                            const TimeExpandedGraph& graph,
                                            const CostWeights& weights,
                                            const PlacementContext& ctx,
                                            const ReservationLedger* reservations,
                                            const std::set<int>* excluded_nodes) {
    if (query.candidate_nodes.empty()) throw ConfigError("place_task: empty candidate set");

    static const ReservationLedger kEmpty;
    const ReservationLedger& res = reservations ? *reservations : kEmpty;

    std::map<int, std::vector<const Contact*>> adjacency;
    for (const auto& c : graph.contacts) adjacency[c.src_node].push_back(&c);

    const Task& task = query.task;
    const auto flags = class_flags(task.task_class);
    const double t0 = query.earliest_start_s;

    std::optional<CandidateOutcome> best;

    // enumerate simple contact paths src -> targets with <= max_hops hops;
    // targets are terminal. yield() returns false to stop the whole walk.
    auto enumerate_paths = [&](int src, const std::set<int>& targets, double start_t,
                               double size_bits,
                               const std::function<bool(const LegResult&)>& yield) {
        LegResult empty;
        empty.route = Route{{}, start_t, src};
        struct Frame {
            LegResult leg;
            int node;
            std::vector<int> visited;
        };
        std::vector<Frame> stack;
        if (targets.count(src)) {
            if (!yield(empty)) return;
        } else {
            stack.push_back({empty, src, {src}});
        }
        // explicit DFS, contacts in id order
        while (!stack.empty()) {
            Frame frame = std::move(stack.back());
            stack.pop_back();
            if (static_cast<int>(frame.leg.route.hops.size()) >= ctx.max_hops) continue;
            const auto adj = adjacency.find(frame.node);
            if (adj == adjacency.end()) continue;
            // push in reverse id order so lower ids are explored first
            for (auto it = adj->second.rbegin(); it != adj->second.rend(); ++it) {
                const Contact* c = *it;
                if (std::find(frame.visited.begin(), frame.visited.end(), c->dst_node) !=
                    frame.visited.end())
                    continue;
                if (size_bits > storage_limit(graph, c->dst_node)) continue;
                const auto fit = res.earliest_fit(c->id, c->start_s, c->end_s,
                                                  frame.leg.route.delivery_s,
                                                  size_bits / c->rate_bps);
                if (!fit) continue;
                LegResult next = frame.leg;
                const double arrival = fit->end_s + c->owlt_s;
                next.route.hops.push_back(
                    {c->id, c->src_node, c->dst_node, fit->start_s, fit->end_s, arrival});
                next.route.delivery_s = arrival;
                next.route.dst_node = c->dst_node;
                next.energy_J += size_bits * ctx.nodes.at(c->src_node).p_tx_W_per_bps;
                next.survival *= 1.0 - edge_risk(*c, fit->end_s - fit->start_s, ctx);

                // admissible lower bound: remaining legs only add cost
                if (best) {
                    const CostBreakdown lb{arrival - t0, next.energy_J / 3600.0,
                                           1.0 - next.survival};
                    if (placement_cost(lb, weights) > best->decision.total_cost) continue;
                }
                if (targets.count(c->dst_node)) {
                    if (!yield(next)) return;
                    continue;  // targets are terminal
                }
                Frame nf;
                nf.leg = std::move(next);
                nf.node = c->dst_node;
                nf.visited = frame.visited;
                nf.visited.push_back(c->dst_node);
                stack.push_back(std::move(nf));
            }
        }
    };

    std::vector<int> candidates = query.candidate_nodes;
    std::sort(candidates.begin(), candidates.end());
    for (int cand : candidates) {
        if (excluded_nodes && excluded_nodes->count(cand)) continue;
        const auto info_it = ctx.nodes.find(cand);
        if (info_it == ctx.nodes.end()) continue;
        const auto& info = info_it->second;
        if (!info.alive) continue;
        if (info.layer == Layer::Lunar && !flags.delay_tolerant_ok) continue;

        auto consider = [&](const LegResult& fwd) {
            const double input_arrival = fwd.route.delivery_s;
            const auto exec = schedule_execution(graph, cand, input_arrival,
                                                 task.compute_demand_units, task.task_class, ctx);
            if (!exec) return true;  // keep exploring other forward paths
            const auto [exec_start, exec_end] = *exec;

            const double exec_energy_J = task.compute_demand_units * info.energy_per_unit_J;
            const double exec_survival =
                1.0 - failure_risk(info.health, exec_end - exec_start, ctx.risk_params);

            auto finish = [&](const LegResult& ret, double completion) -> bool {
                if (flags.delay_sensitive && task.deadline_s && completion > *task.deadline_s)
                    return true;
                CandidateOutcome outcome;
                auto& d = outcome.decision;
                d.execution_node = cand;
                d.forward = fwd.route;
                d.return_path = ret.route;
                d.exec_start_s = exec_start;
                d.exec_end_s = exec_end;
                d.estimated_completion_s = completion;
                d.latency_s = completion - t0;
                d.energy_Wh = (fwd.energy_J + exec_energy_J + ret.energy_J) / 3600.0;
                d.risk = 1.0 - fwd.survival * exec_survival * ret.survival;
                d.total_cost = placement_cost({d.latency_s, d.energy_Wh, d.risk}, weights);
                d.replication_k = task.replication_k;
                outcome.fwd_nodes = route_nodes(d.forward, query.origin_node);
                outcome.ret_nodes = route_nodes(d.return_path, cand);
                if (!best || compare_outcomes(outcome, *best) < 0) best = std::move(outcome);
                return true;
            };

            if (query.result_destinations.empty() || task.output_bits <= 0.0) {
                LegResult none;
                none.route = Route{{}, exec_end, cand};
                return finish(none, exec_end);
            }
            enumerate_paths(cand, query.result_destinations, exec_end, task.output_bits, finish);
            return true;
        };

        enumerate_paths(query.origin_node, {cand}, t0, task.input_bits, consider);
    }

    if (!best) return std::nullopt;
    return best->decision;
}

std::vector<PlacementDecision> replicate_decision(const PlacementQuery& query,
                                                  const PlacementDecision& primary,
                                                  const TimeExpandedGraph& graph,
                                                  const CostWeights& weights,
                                                  const PlacementContext& ctx,
                                                  double risk_threshold,
                                                  const ReservationLedger* reservations) {
    std::vector<PlacementDecision> out{primary};
    if (primary.risk <= risk_threshold) return out;

    const int k = std::max(1, query.task.replication_k);
    std::set<int> used{primary.execution_node};
    while (static_cast<int>(out.size()) < k) {
        auto next = place_task(query, graph, weights, ctx, reservations, &used);
        if (!next) break;
        used.insert(next->execution_node);
        out.push_back(*next);
    }
    if (static_cast<int>(out.size()) < k)
        for (auto& d : out) d.degraded_replication = true;
    return out;
}

std::string decision_trace(const PlacementDecision& d) {
    std::ostringstream out;
    char line[256];
    for (const auto& h : d.forward.hops) {
        std::snprintf(line, sizeof line, "fwd %d %d %d %.9f %.9f %.9f\n", h.contact_id,
                      h.from_node, h.to_node, h.tx_start_s, h.tx_end_s, h.arrival_s);
        out << line;
    }
    std::snprintf(line, sizeof line, "exec %d %.9f %.9f\n", d.execution_node, d.exec_start_s,
                  d.exec_end_s);
    out << line;
    for (const auto& h : d.return_path.hops) {
        std::snprintf(line, sizeof line, "ret %d %d %d %.9f %.9f %.9f\n", h.contact_id,
                      h.from_node, h.to_node, h.tx_start_s, h.tx_end_s, h.arrival_s);
        out << line;
    }
    std::snprintf(line, sizeof line, "cost %.9f latency %.9f energy_Wh %.9f risk %.9f\n",
                  d.total_cost, d.latency_s, d.energy_Wh, d.risk);
    out << line;
    return out.str();
}

}  // namespace sbdc
