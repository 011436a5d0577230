#pragma once

#include <vector>

#include "power_thermal.hpp"
#include "rng.hpp"
#include "tasks.hpp"

namespace sbdc {

struct NodeSpec {
    int node_id = -1;
    Layer layer = Layer::Leo;
    double compute_capacity_units_s = 100.0;  // normalized compute-units per second
    double storage_bits = 1e12;
    int isl_terminals = 4;
    PowerSpec power;
    ThermalSpec thermal;
};

struct NodeHealth {
    double tid_accumulated_krad = 0.0;
    double tid_tolerance_krad = 100.0;  // drawn per node in [10, 100]
    double seu_rate_per_s = 0.0;
    bool failed = false;  // latched on tolerance crossing
};

struct RiskParams {
    double k_seu = 1.0;
    double k_tid_per_s = 1e-6;
};

// Linear aging to 50% capacity at end of life; 0 after latched failure.
double derating_fraction(const NodeHealth& health);
double derated_capacity_units_s(const NodeSpec& spec, const NodeHealth& health);

NodeHealth accumulate_dose(NodeHealth health, double dose_rate_krad_per_year, double dt_s);

int sample_seu_faults(const NodeHealth& health, double dt_s, RngStream& stream);

// Exponential hazard combining the SEU rate and TID proximity.
double failure_risk(const NodeHealth& health, double duration_s, const RiskParams& params = {});

struct TaskExecution {
    TaskId task_id = -1;
    double progress = 0.0;
    double checkpoint_progress = 0.0;
    double started_at_s = 0.0;
    int node_id = -1;
    double demand_units = 0.0;
    bool checkpointable = false;
    double last_checkpoint_progress_time_s = 0.0;
};

struct CompletionRecord {
    TaskId task_id;
    double completion_time_s;  // sub-step interpolated
};

struct ExecuteStepResult {
    std::vector<CompletionRecord> completed;
    double utilization = 0.0;  // fraction of capacity-seconds actually consumed
    double compute_load_W = 0.0;
};

// Equal-share processor sharing; shares fixed at step start, completions
// interpolated inside the step without redistributing freed capacity.
ExecuteStepResult execute_step(const NodeSpec& spec, const NodeHealth& health,
                               std::vector<TaskExecution>& running, double now_s, double dt_s,
                               double checkpoint_interval_s);

}  // namespace sbdc
