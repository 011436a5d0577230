#include "node_model.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace sbdc {

double derating_fraction(const NodeHealth& health) {
    if (health.failed || health.tid_accumulated_krad >= health.tid_tolerance_krad) return 0.0;
    return 1.0 - 0.5 * (health.tid_accumulated_krad / health.tid_tolerance_krad);
}

double derated_capacity_units_s(const NodeSpec& spec, const NodeHealth& health) {
    return spec.compute_capacity_units_s * derating_fraction(health);
}

NodeHealth accumulate_dose(NodeHealth health, double dose_rate_krad_per_year, double dt_s) {
    if (!(dt_s > 0.0)) throw ConfigError("accumulate_dose: dt must be > 0");
    health.tid_accumulated_krad += dose_rate_krad_per_year * dt_s / (365.25 * 86400.0);
    if (health.tid_accumulated_krad >= health.tid_tolerance_krad) health.failed = true;
    return health;
}

int sample_seu_faults(const NodeHealth& health, double dt_s, RngStream& stream) {
    if (!(dt_s > 0.0)) throw ConfigError("sample_seu_faults: dt must be > 0");
    return static_cast<int>(stream.poisson(health.seu_rate_per_s * dt_s));
}

double failure_risk(const NodeHealth& health, double duration_s, const RiskParams& params) {
    if (duration_s < 0.0) throw ConfigError("failure_risk: duration must be >= 0");
    const double tid_fraction =
        health.tid_tolerance_krad > 0.0 ? health.tid_accumulated_krad / health.tid_tolerance_krad
                                        : 1.0;
    const double hazard =
        health.seu_rate_per_s * params.k_seu + params.k_tid_per_s * tid_fraction;
    return 1.0 - std::exp(-hazard * duration_s);
}

ExecuteStepResult execute_step(const NodeSpec& spec, const NodeHealth& health,
                               std::vector<TaskExecution>& running, double now_s, double dt_s,
                               double checkpoint_interval_s) {
    ExecuteStepResult out;
    const double capacity = derated_capacity_units_s(spec, health);
    const std::size_t n = running.size();
    if (n == 0 || capacity <= 0.0) {
        out.utilization = 0.0;
        out.compute_load_W = spec.power.p_idle_W;
        return out;
    }

    const double share = capacity / static_cast<double>(n);
    double consumed_units = 0.0;
    for (auto& exec : running) {
        const double remaining = (1.0 - exec.progress) * exec.demand_units;
        const double offered = share * dt_s;
        if (offered >= remaining) {
            consumed_units += remaining;
            out.completed.push_back({exec.task_id, now_s + remaining / share});
            exec.progress = 1.0;
        } else {
            consumed_units += offered;
            exec.progress += offered / exec.demand_units;
        }
        if (exec.checkpointable &&
            now_s + dt_s - exec.last_checkpoint_progress_time_s >= checkpoint_interval_s) {
            exec.checkpoint_progress = exec.progress;
            exec.last_checkpoint_progress_time_s = now_s + dt_s;
        }
    }
    std::erase_if(running, [](const TaskExecution& e) { return e.progress >= 1.0; });

    out.utilization = std::min(1.0, consumed_units / (capacity * dt_s));
    out.compute_load_W = spec.power.p_idle_W + spec.power.p_compute_max_W * out.utilization;
    return out;
}

}  // namespace sbdc
