#pragma once

#include <optional>
#include <vector>

#include "orbits.hpp"
#include "rng.hpp"
#include "tasks.hpp"

namespace sbdc {

struct MmppParams {
    double rate_low_per_s = 0.0;
    double rate_high_per_s = 0.0;
    double switch_low_to_high_per_s = 1e-3;
    double switch_high_to_low_per_s = 1e-3;
};

struct HandsetCohort {
    int cohort_id = -1;
    double latitude_deg = 0.0;
    double longitude_deg = 0.0;
    long population = 0;
    MmppParams mmpp;
};

struct HandoverEvent {
    int cohort_id = -1;
    int from_sat = -1;
    int to_sat = -1;
    double time_s = 0.0;
};

// Long-run arrival rate per handset of the two-state MMPP.
double mmpp_stationary_rate(const MmppParams& p);

// Aggregate cohort arrival times over [t0, t1), sorted ascending.
std::vector<double> generate_arrival_times(const HandsetCohort& cohort, double t0, double t1,
                                           RngStream& stream);

struct ServingCandidate {
    int node_id = -1;
    double elevation_deg = 0.0;
    bool visible = false;
};

// Highest elevation wins; ties break toward the lowest node id.
std::optional<int> pick_serving_satellite(const std::vector<ServingCandidate>& candidates);

std::optional<HandoverEvent> detect_handover(std::optional<int> previous,
                                             std::optional<int> current, int cohort_id,
                                             double t_s);

struct ImagingEvent {
    double time_s = 0.0;
    double input_bits = 0.0;
};

// One InterruptibleCompression task per imaging event, chained to a
// StorageRetrieval transfer of the compressed output toward ground.
// compression_ratio == 1 degenerates to relay-only sizing.
struct EoTaskPair {
    Task compression;
    Task retrieval;
};

std::vector<EoTaskPair> generate_eo_workload(int sat_id, const std::vector<ImagingEvent>& schedule,
                                             double compression_ratio,
                                             double compute_units_per_bit, TaskId first_task_id);

}  // namespace sbdc
