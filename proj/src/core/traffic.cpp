#include "traffic.hpp"

#include <algorithm>

#include "errors.hpp"

namespace sbdc {

double mmpp_stationary_rate(const MmppParams& p) {
    const double a = p.switch_low_to_high_per_s;
    const double b = p.switch_high_to_low_per_s;
    const double pi_low = b / (a + b);
    return pi_low * p.rate_low_per_s + (1.0 - pi_low) * p.rate_high_per_s;
}

std::vector<double> generate_arrival_times(const HandsetCohort& cohort, double t0, double t1,
                                           RngStream& stream) {
    if (!(t1 > t0)) throw ConfigError("generate_arrival_times: window must satisfy t1 > t0");
    const auto& p = cohort.mmpp;
    if (p.rate_high_per_s < p.rate_low_per_s || p.rate_low_per_s < 0.0)
        throw ConfigError("mmpp rates must satisfy rate_high >= rate_low >= 0");
    if (!(p.switch_low_to_high_per_s > 0.0) || !(p.switch_high_to_low_per_s > 0.0))
        throw ConfigError("mmpp switch rates must be > 0");

    std::vector<double> arrivals;
    const double pop = static_cast<double>(cohort.population);

    // Start in the stationary state, then walk modulating-state segments and
    // draw exponential inter-arrival gaps within each constant-rate segment.
    const double pi_low =
        p.switch_high_to_low_per_s / (p.switch_low_to_high_per_s + p.switch_high_to_low_per_s);
    bool low = stream.uniform01() < pi_low;
    double t = t0;
    while (t < t1) {
        const double dwell_rate = low ? p.switch_low_to_high_per_s : p.switch_high_to_low_per_s;
        const double seg_end = std::min(t1, t + stream.exponential(1.0 / dwell_rate));
        const double rate = (low ? p.rate_low_per_s : p.rate_high_per_s) * pop;
        if (rate > 0.0) {
            double at = t + stream.exponential(1.0 / rate);
            while (at < seg_end) {
                arrivals.push_back(at);
                at += stream.exponential(1.0 / rate);
            }
        }
        t = seg_end;
        low = !low;
    }
    return arrivals;
}

std::optional<int> pick_serving_satellite(const std::vector<ServingCandidate>& candidates) {
    std::optional<int> best;
    double best_elev = 0.0;
    for (const auto& c : candidates) {
        if (!c.visible) continue;
        if (!best || c.elevation_deg > best_elev ||
            (c.elevation_deg == best_elev && c.node_id < *best)) {
            best = c.node_id;
            best_elev = c.elevation_deg;
        }
    }
    return best;
}

std::optional<HandoverEvent> detect_handover(std::optional<int> previous,
                                             std::optional<int> current, int cohort_id,
                                             double t_s) {
    if (!previous || !current) return std::nullopt;
    if (*previous == *current) return std::nullopt;
    return HandoverEvent{cohort_id, *previous, *current, t_s};
}

std::vector<EoTaskPair> generate_eo_workload(int sat_id, const std::vector<ImagingEvent>& schedule,
                                             double compression_ratio,
                                             double compute_units_per_bit, TaskId first_task_id) {
    if (compression_ratio < 1.0)
        throw ConfigError("generate_eo_workload: compression_ratio must be >= 1");

    std::vector<EoTaskPair> out;
    TaskId next_id = first_task_id;
    for (const auto& ev : schedule) {
        EoTaskPair pair;
        pair.compression.task_id = next_id++;
        pair.compression.task_class = TaskClass::InterruptibleCompression;
        pair.compression.arrival_time_s = ev.time_s;
        pair.compression.origin_node = sat_id;
        pair.compression.input_bits = ev.input_bits;
        pair.compression.output_bits = ev.input_bits / compression_ratio;
        pair.compression.compute_demand_units = ev.input_bits * compute_units_per_bit;

        pair.retrieval.task_id = next_id++;
        pair.retrieval.task_class = TaskClass::StorageRetrieval;
        pair.retrieval.arrival_time_s = ev.time_s;
        pair.retrieval.origin_node = sat_id;
        pair.retrieval.input_bits = pair.compression.output_bits;
        pair.retrieval.output_bits = pair.compression.output_bits;
        pair.retrieval.compute_demand_units = 0.0;  // pure transfer
        pair.retrieval.predecessor = pair.compression.task_id;
        out.push_back(pair);
    }
    return out;
}

}  // namespace sbdc
