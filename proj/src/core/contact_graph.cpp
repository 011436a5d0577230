#include "contact_graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>

#include "errors.hpp"

namespace sbdc {

namespace {

// Boolean-signal interval extraction over a sampled horizon with bisection
// refinement of the transitions.
std::vector<ContactWindow> extract_intervals(const std::function<bool(double)>& up,
                                             double horizon_s, double step_s, bool refine_edges) {
    auto refine = [&](double lo, double hi, bool lo_state) {
        while (hi - lo > 0.1) {
            const double mid = 0.5 * (lo + hi);
            if (up(mid) == lo_state)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    std::vector<ContactWindow> out;
    bool prev = up(0.0);
    double start = prev ? 0.0 : -1.0;
    double prev_t = 0.0;
    for (double t = step_s; t <= horizon_s + 0.5 * step_s; t += step_s) {
        const double tc = std::min(t, horizon_s);
        const bool cur = up(tc);
        if (cur != prev) {
            const double edge = refine_edges ? refine(prev_t, tc, prev) : (prev ? prev_t : tc);
            if (cur)
                start = edge;
            else
                out.push_back({start, edge});
        }
        prev = cur;
        prev_t = tc;
        if (tc >= horizon_s) break;
    }
    if (prev) out.push_back({start, horizon_s});
    return out;
}

double midpoint_range_km(const CircularOrbit& a, const CircularOrbit& b, double t_mid,
                         const PhysicalConstants& pc) {
    return norm(propagate(a, t_mid, pc).position_km - propagate(b, t_mid, pc).position_km);
}

struct PendingContact {
    int src, dst;
    double start, end, rate, owlt;
    ContactKind kind;
};

}  // namespace

const char* contact_kind_name(ContactKind k) {
    switch (k) {
        case ContactKind::Isl: return "ISL";
        case ContactKind::Feeder: return "Feeder";
        case ContactKind::Access: return "Access";
    }
    return "?";
}

std::optional<ContactKind> contact_kind_from_name(const std::string& name) {
    if (name == "ISL") return ContactKind::Isl;
    if (name == "Feeder") return ContactKind::Feeder;
    if (name == "Access") return ContactKind::Access;
    return std::nullopt;
}

double expected_isl_availability(const OutageModel& m) {
    if (m.outage_rate_per_s <= 0.0) return 1.0;
    return 1.0 / (1.0 + m.outage_rate_per_s * m.reacquisition_mean_s);
}

std::vector<Contact> build_contact_plan(const std::vector<SatelliteEntry>& satellites,
                                        const std::vector<GroundEndpoint>& ground,
                                        const std::optional<LunarEntry>& lunar,
                                        const ContactPlanConfig& config, double horizon_s,
                                        const PhysicalConstants& pc) {
    if (!(horizon_s > 0.0)) throw ConfigError("build_contact_plan: horizon must be > 0");

    std::vector<PendingContact> pending;
    auto add_bidirectional = [&](int a, int b, double start, double end, double rate, double owlt,
                                 ContactKind kind) {
        if (end - start <= 0.0) return;
        pending.push_back({a, b, start, end, rate, owlt, kind});
        pending.push_back({b, a, start, end, rate, owlt, kind});
    };

    // --- ISL pairs ---
    std::vector<std::pair<int, int>> isl_pairs;  // indexes into satellites
    if (config.topology == IslTopology::FullMesh) {
        for (std::size_t i = 0; i < satellites.size(); ++i)
            for (std::size_t j = i + 1; j < satellites.size(); ++j)
                isl_pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    } else {
        // intra-plane ring
        std::map<std::pair<int, int>, std::vector<int>> by_plane;  // (shell, plane) -> sat indexes
        for (std::size_t i = 0; i < satellites.size(); ++i)
            by_plane[{satellites[i].shell, satellites[i].plane}].push_back(static_cast<int>(i));
        for (auto& [key, members] : by_plane) {
            std::sort(members.begin(), members.end(), [&](int a, int b) {
                return satellites[a].index_in_plane < satellites[b].index_in_plane;
            });
            const std::size_t n = members.size();
            if (n < 2) continue;
            for (std::size_t i = 0; i < n; ++i) {
                const int a = members[i];
                const int b = members[(i + 1) % n];
                if (n == 2 && i == 1) break;  // avoid duplicating the single pair
                isl_pairs.emplace_back(std::min(a, b), std::max(a, b));
            }
        }
    }
    std::sort(isl_pairs.begin(), isl_pairs.end());
    isl_pairs.erase(std::unique(isl_pairs.begin(), isl_pairs.end()), isl_pairs.end());

    for (const auto& [ia, ib] : isl_pairs) {
        const auto& sa = satellites[ia];
        const auto& sb = satellites[ib];
        auto up = [&](double t) {
            return isl_visibility(propagate(sa.orbit, t, pc), propagate(sb.orbit, t, pc), pc)
                .visible;
        };
        for (const auto& w : extract_intervals(up, horizon_s, config.sample_step_s, true)) {
            const double mid = 0.5 * (w.start_s + w.end_s);
            const double owlt =
                midpoint_range_km(sa.orbit, sb.orbit, mid, pc) / pc.light_speed_km_s;
            add_bidirectional(sa.node_id, sb.node_id, w.start_s, w.end_s, config.isl_rate_bps,
                              owlt, ContactKind::Isl);
        }
    }

    // --- cross-layer nearest links (ring_cross only; full mesh already covers them) ---
    if (config.topology == IslTopology::RingCross) {
        auto layer_rank = [](Layer l) {
            switch (l) {
                case Layer::Leo: return 0;
                case Layer::Meo: return 1;
                case Layer::Geo: return 2;
                default: return 3;
            }
        };
        int max_rank = -1;
        for (const auto& s : satellites) max_rank = std::max(max_rank, layer_rank(s.orbit.layer));
        for (std::size_t i = 0; i < satellites.size(); ++i) {
            const auto& lo = satellites[i];
            const int lo_rank = layer_rank(lo.orbit.layer);
            // link to the next populated layer upward
            int target_rank = -1;
            for (int r = lo_rank + 1; r <= max_rank; ++r) {
                for (const auto& s : satellites)
                    if (layer_rank(s.orbit.layer) == r) { target_rank = r; break; }
                if (target_rank >= 0) break;
            }
            if (target_rank < 0) continue;

            // nearest visible upper-layer satellite, sampled per step
            auto nearest_at = [&](double t) -> int {
                const auto state = propagate(lo.orbit, t, pc);
                int best = -1;
                double best_range = 0.0;
                for (std::size_t j = 0; j < satellites.size(); ++j) {
                    if (layer_rank(satellites[j].orbit.layer) != target_rank) continue;
                    const auto vis =
                        isl_visibility(state, propagate(satellites[j].orbit, t, pc), pc);
                    if (!vis.visible) continue;
                    if (best < 0 || vis.range_km < best_range ||
                        (vis.range_km == best_range &&
                         satellites[j].node_id < satellites[best].node_id)) {
                        best = static_cast<int>(j);
                        best_range = vis.range_km;
                    }
                }
                return best;
            };
            for (std::size_t j = 0; j < satellites.size(); ++j) {
                if (layer_rank(satellites[j].orbit.layer) != target_rank) continue;
                auto up = [&](double t) { return nearest_at(t) == static_cast<int>(j); };
                // nearest-neighbor switches are kept at sample granularity
                for (const auto& w :
                     extract_intervals(up, horizon_s, config.sample_step_s, false)) {
                    const double mid = 0.5 * (w.start_s + w.end_s);
                    const double owlt =
                        midpoint_range_km(lo.orbit, satellites[j].orbit, mid, pc) /
                        pc.light_speed_km_s;
                    add_bidirectional(lo.node_id, satellites[j].node_id, w.start_s, w.end_s,
                                      config.isl_rate_bps, owlt, ContactKind::Isl);
                }
            }
        }
    }

    // --- feeder / access links ---
    for (const auto& g : ground) {
        const ContactKind kind = g.is_cohort ? ContactKind::Access : ContactKind::Feeder;
        const double rate = g.is_cohort ? config.access_rate_bps : config.feeder_rate_bps;
        for (const auto& s : satellites) {
            if (g.is_cohort && s.orbit.layer != Layer::Leo) continue;  // DHTS is LEO access
            const auto windows = contact_windows(s.orbit, g.station, horizon_s,
                                                 config.sample_step_s, config.earth_rotation, pc);
            for (const auto& w : windows) {
                const double mid = 0.5 * (w.start_s + w.end_s);
                const auto vis = visibility(propagate(s.orbit, mid, pc), g.station, mid,
                                            config.earth_rotation, pc);
                const double owlt = vis.slant_range_km / pc.light_speed_km_s;
                // cohort sites only transmit (uplink); stations take both directions
                auto add = [&](double start, double end) {
                    if (end - start <= 0.0) return;
                    if (g.is_cohort)
                        pending.push_back({g.node_id, s.node_id, start, end, rate, owlt, kind});
                    else
                        add_bidirectional(s.node_id, g.node_id, start, end, rate, owlt, kind);
                };
                double start = w.start_s, end = w.end_s;
                if (kind == ContactKind::Feeder && config.feeder_blackout) {
                    const auto [b0, b1] = *config.feeder_blackout;
                    // clip against the blackout window, possibly splitting
                    if (start < b1 && end > b0) {
                        if (start < b0) add(start, b0);
                        if (end > b1) add(b1, end);
                        continue;
                    }
                }
                add(start, end);
            }
        }
    }

    // --- lunar virtual node: permanent fixed-delay link to every GEO satellite ---
    if (lunar) {
        for (const auto& s : satellites) {
            if (s.orbit.layer != Layer::Geo) continue;
            add_bidirectional(s.node_id, lunar->node_id, 0.0, horizon_s, config.lunar_rate_bps,
                              lunar->owlt_s, ContactKind::Isl);
        }
    }

    std::sort(pending.begin(), pending.end(), [](const PendingContact& a, const PendingContact& b) {
        return std::tie(a.start, a.src, a.dst, a.end, a.kind) <
               std::tie(b.start, b.src, b.dst, b.end, b.kind);
    });
    std::vector<Contact> plan;
    plan.reserve(pending.size());
    int id = 0;
    for (const auto& p : pending)
        plan.push_back({id++, p.src, p.dst, p.start, p.end, p.rate, p.owlt, p.kind});
    return plan;
}

std::vector<Contact> apply_outages(const std::vector<Contact>& plan, const OutageModel& model,
                                   RngStream& stream) {
    if (model.outage_rate_per_s <= 0.0) return plan;

    std::vector<Contact> trimmed;
    for (const auto& c : plan) {
        if (c.kind != ContactKind::Isl) {
            trimmed.push_back(c);
            continue;
        }
        // alternating renewal: up ~ Exp(mean 1/rate), down ~ Exp(mean reacq)
        double t = c.start_s;
        while (t < c.end_s) {
            const double up = stream.exponential(1.0 / model.outage_rate_per_s);
            const double sub_end = std::min(c.end_s, t + up);
            if (sub_end > t) {
                Contact sub = c;
                sub.start_s = t;
                sub.end_s = sub_end;
                trimmed.push_back(sub);
            }
            t = sub_end;
            if (t >= c.end_s) break;
            t += stream.exponential(model.reacquisition_mean_s);
        }
    }
    std::sort(trimmed.begin(), trimmed.end(), [](const Contact& a, const Contact& b) {
        return std::tie(a.start_s, a.src_node, a.dst_node, a.end_s) <
               std::tie(b.start_s, b.src_node, b.dst_node, b.end_s);
    });
    for (std::size_t i = 0; i < trimmed.size(); ++i) trimmed[i].id = static_cast<int>(i);
    return trimmed;
}

std::string contacts_to_text(const std::vector<Contact>& plan) {
    std::ostringstream out;
    for (const auto& c : plan) {
        char line[256];
        std::snprintf(line, sizeof line, "contact %d %d %.6f %.6f %.6f %.9f %s\n", c.src_node,
                      c.dst_node, c.start_s, c.end_s, c.rate_bps, c.owlt_s,
                      contact_kind_name(c.kind));
        out << line;
    }
    return out.str();
}

std::vector<Contact> contacts_from_text(std::istream& in) {
    std::vector<Contact> plan;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag, kind_name;
        Contact c;
        if (!(ls >> tag >> c.src_node >> c.dst_node >> c.start_s >> c.end_s >> c.rate_bps >>
              c.owlt_s >> kind_name) ||
            tag != "contact")
            throw ConfigError("contact plan line " + std::to_string(lineno) + ": malformed");
        const auto kind = contact_kind_from_name(kind_name);
        if (!kind)
            throw ConfigError("contact plan line " + std::to_string(lineno) + ": unknown kind '" +
                              kind_name + "'");
        c.kind = *kind;
        if (!(c.end_s > c.start_s) || !(c.rate_bps > 0.0) || c.owlt_s < 0.0)
            throw ConfigError("contact plan line " + std::to_string(lineno) +
                              ": invariant violation (end > start, rate > 0, owlt >= 0)");
        c.id = static_cast<int>(plan.size());
        plan.push_back(c);
    }
    return plan;
}

int TimeExpandedGraph::node_index(int node_id) const {
    const auto it = std::lower_bound(node_ids.begin(), node_ids.end(), node_id);
    if (it == node_ids.end() || *it != node_id)
        throw InvariantError("time-expanded graph: unknown node id " + std::to_string(node_id));
    return static_cast<int>(it - node_ids.begin());
}

const VertexAnnotation& TimeExpandedGraph::annotation(int node_id, int slot) const {
    return annotations[node_index(node_id)][slot];
}

int TimeExpandedGraph::slot_of(double t_s) const {
    const int s = static_cast<int>(std::floor((t_s - t0_s) / slot_s));
    return std::clamp(s, 0, n_slots - 1);
}

TimeExpandedGraph build_time_expanded_graph(const std::vector<Contact>& plan,
                                            const ForecastTable& forecasts, double slot_s,
                                            double horizon_s,
                                            const std::map<int, double>& storage_bits,
                                            const std::map<int, Layer>& node_layers) {
    if (!(slot_s > 0.0)) throw ConfigError("build_time_expanded_graph: slot duration must be > 0");
    TimeExpandedGraph g;
    g.t0_s = forecasts.t0_s;
    g.slot_s = slot_s;
    g.horizon_s = horizon_s;
    g.n_slots = static_cast<int>(std::ceil(horizon_s / slot_s));
    if (forecasts.slot_s != slot_s || forecasts.n_slots < g.n_slots)
        throw ConfigError("build_time_expanded_graph: forecast table does not cover the horizon");
    g.node_ids = forecasts.node_ids;
    g.annotations = forecasts.per_node;
    g.storage_bits = storage_bits;
    g.node_layers = node_layers;
    for (const auto& c : plan) {
        if (c.start_s >= g.t0_s + horizon_s || c.end_s <= g.t0_s) continue;
        Contact clipped = c;
        clipped.start_s = std::max(c.start_s, g.t0_s);
        clipped.end_s = std::min(c.end_s, g.t0_s + horizon_s);
        g.contacts.push_back(clipped);
    }
    return g;
}

std::vector<CommEdgeView> communication_edges(const TimeExpandedGraph& graph) {
    std::vector<CommEdgeView> edges;
    for (const auto& c : graph.contacts) {
        const int first = graph.slot_of(c.start_s);
        const int last = graph.slot_of(std::nextafter(c.end_s, c.start_s));
        for (int s = first; s <= last; ++s) {
            const double overlap = std::min(c.end_s, graph.slot_end(s)) -
                                   std::max(c.start_s, graph.slot_start(s));
            if (overlap <= 0.0) continue;
            edges.push_back({c.id, c.src_node, c.dst_node, s, c.rate_bps * overlap, c.owlt_s});
        }
    }
    return edges;
}

ForecastTable build_forecasts(const ForecastInputs& inputs, double t0_s, double horizon_s,
                              double slot_s, const PhysicalConstants& pc) {
    ForecastTable table;
    table.t0_s = t0_s;
    table.slot_s = slot_s;
    table.n_slots = static_cast<int>(std::ceil(horizon_s / slot_s));

    std::vector<ForecastInputs::NodeState> nodes = inputs.nodes;
    std::sort(nodes.begin(), nodes.end(),
              [](const auto& a, const auto& b) { return a.node_id < b.node_id; });

    for (const auto& node : nodes) {
        table.node_ids.push_back(node.node_id);
        std::vector<VertexAnnotation> ann(table.n_slots);

        if (node.static_green) {
            for (int s = 0; s < table.n_slots; ++s) {
                ann[s] = VertexAnnotation{node.node_id, s, EnergyZone::Green,
                                          node.spec.compute_capacity_units_s, 1.0, 0.0};
            }
            table.per_node.push_back(std::move(ann));
            continue;
        }

        // integrate at half-slot resolution (or finer, for Euler stability)
        int substeps = 2;
        const double dt_limit = thermal_stability_dt_limit_s(node.spec.thermal, pc);
        while (slot_s / substeps > std::min(10.0, dt_limit) && substeps < 1 << 12) substeps *= 2;
        const double dt = slot_s / substeps;

        PowerThermalState state = node.state;
        NodeHealth health = node.health;
        for (int s = 0; s < table.n_slots; ++s) {
            const double slot_start = t0_s + s * slot_s;
            VertexAnnotation a;
            a.node_id = node.node_id;
            a.slot = s;
            for (int k = 0; k < substeps; ++k) {
                const double t = slot_start + k * dt;
                if (k == substeps / 2) {
                    // slot midpoint: evaluate the annotation
                    const ZoneForecast fc{inputs.eclipse_remaining_s(node.node_id, t),
                                          inputs.time_to_next_contact_s(node.node_id, t),
                                          node.baseline_load_W};
                    const NodeHealth h_mid = node.dose_rate_krad_per_year > 0.0
                                                 ? accumulate_dose(node.health,
                                                                   node.dose_rate_krad_per_year,
                                                                   std::max(t - t0_s, 1e-9))
                                                 : health;
                    a.predicted_zone =
                        compute_zone(state, node.spec.power.battery_capacity_Wh,
                                     inputs.zone_policy, fc);
                    a.available_capacity_units_s = derated_capacity_units_s(node.spec, h_mid);
                    a.thermal_headroom = state.thermal_headroom;
                    a.risk_rate_per_s =
                        h_mid.seu_rate_per_s * inputs.risk_params.k_seu +
                        inputs.risk_params.k_tid_per_s *
                            (h_mid.tid_tolerance_krad > 0.0
                                 ? h_mid.tid_accumulated_krad / h_mid.tid_tolerance_krad
                                 : 1.0);
                    if (h_mid.failed) a.available_capacity_units_s = 0.0;
                }
                const auto step = step_energy_thermal(state, node.spec.power, node.spec.thermal,
                                                      node.baseline_load_W,
                                                      inputs.eclipsed(node.node_id, t), dt, pc);
                state = step.state;
            }
            ann[s] = a;
        }
        table.per_node.push_back(std::move(ann));
    }
    return table;
}

}  // namespace sbdc
