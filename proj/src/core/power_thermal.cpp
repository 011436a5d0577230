#include "power_thermal.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace sbdc {

const char* zone_name(EnergyZone z) {
    switch (z) {
        case EnergyZone::Red: return "Red";
        case EnergyZone::Yellow: return "Yellow";
        case EnergyZone::Green: return "Green";
    }
    return "?";
}

double harvest_power_w(const PowerSpec& spec, bool eclipsed, const PhysicalConstants& pc) {
    if (eclipsed) return 0.0;
    // sun-tracking panels assumed: no incidence loss
    return spec.panel_efficiency * spec.panel_area_m2 * pc.solar_constant_w_m2;
}

double radiated_power_w(const ThermalSpec& spec, double temperature_K,
                        const PhysicalConstants& pc) {
    if (temperature_K < spec.sink_temperature_K)
        throw ConfigError("radiated_power: temperature below sink temperature is outside the model");
    const double t4 = std::pow(temperature_K, 4.0);
    const double env4 = std::pow(spec.sink_temperature_K, 4.0);
    return spec.emissivity * pc.stefan_boltzmann_w_m2_k4 * spec.radiator_area_m2 * (t4 - env4);
}

double thermal_headroom_fraction(const ThermalSpec& spec, double load_dissipated_W,
                                 const PhysicalConstants& pc) {
    const double p_max = radiated_power_w(spec, spec.max_radiator_temperature_K, pc);
    if (p_max <= 0.0) return 0.0;
    return std::clamp((p_max - load_dissipated_W) / p_max, 0.0, 1.0);
}

EnergyStepResult step_energy_thermal(const PowerThermalState& state, const PowerSpec& power,
                                     const ThermalSpec& thermal, double load_W, bool eclipsed,
                                     double dt_s, const PhysicalConstants& pc) {
    if (!(dt_s > 0.0)) throw ConfigError("step_energy_thermal: dt must be > 0");

    EnergyStepResult out;
    out.state = state;
    out.state.harvest_W = harvest_power_w(power, eclipsed, pc);
    out.state.load_W = load_W;

    const double soc_unclamped = state.soc_Wh + (out.state.harvest_W - load_W) * dt_s / 3600.0;
    const double soc_clamped = std::clamp(soc_unclamped, 0.0, power.battery_capacity_Wh);
    const double adjust_J = (soc_clamped - soc_unclamped) * 3600.0;
    if (adjust_J > 0.0) {
        out.clamp_deficit_J = adjust_J;
        out.deficit = true;
    } else if (adjust_J < 0.0) {
        out.clamp_surplus_J = -adjust_J;
    }
    out.state.soc_Wh = soc_clamped;

    const double radiated = radiated_power_w(thermal, state.radiator_temperature_K, pc);
    double t_next = state.radiator_temperature_K +
                    dt_s * (load_W - radiated) / thermal.heat_capacity_J_per_K;
    t_next = std::max(t_next, thermal.sink_temperature_K);
    out.state.radiator_temperature_K = t_next;
    out.state.thermal_headroom = thermal_headroom_fraction(thermal, load_W, pc);

    if (!std::isfinite(out.state.soc_Wh) || !std::isfinite(out.state.radiator_temperature_K))
        throw InvariantError("step_energy_thermal produced a non-finite state");
    return out;
}

double thermal_stability_dt_limit_s(const ThermalSpec& spec, const PhysicalConstants& pc) {
    const double tmax3 = std::pow(spec.max_radiator_temperature_K, 3.0);
    return spec.heat_capacity_J_per_K /
           (4.0 * spec.emissivity * pc.stefan_boltzmann_w_m2_k4 * spec.radiator_area_m2 * tmax3);
}

EnergyZone compute_zone(const PowerThermalState& state, double battery_capacity_Wh,
                        const ZonePolicy& policy, const ZoneForecast& forecast) {
    // Project SoC through the remaining eclipse plus margin, assuming no harvest.
    const double window_s = forecast.eclipse_remaining_s + policy.forecast_margin_s;
    const double soc_proj = state.soc_Wh - forecast.projected_load_W * window_s / 3600.0;

    if (soc_proj < policy.r_red * battery_capacity_Wh || state.soc_Wh == 0.0)
        return EnergyZone::Red;
    if (soc_proj >= policy.r_green * battery_capacity_Wh &&
        state.thermal_headroom >= policy.thermal_gate)
        return EnergyZone::Green;
    return EnergyZone::Yellow;
}

std::set<TaskClass> allowed_task_classes(EnergyZone zone) {
    switch (zone) {
        case EnergyZone::Green:
            return {TaskClass::RealTimeInference, TaskClass::InterruptibleCompression,
                    TaskClass::BulkTraining, TaskClass::StorageRetrieval, TaskClass::Housekeeping};
        case EnergyZone::Yellow:
            return {TaskClass::RealTimeInference, TaskClass::InterruptibleCompression,
                    TaskClass::Housekeeping};
        case EnergyZone::Red:
            return {TaskClass::Housekeeping};
    }
    return {};
}

bool zone_permits(EnergyZone zone, TaskClass task_class, double compute_demand_units,
                  double derated_capacity_units_s, const ZonePolicy& policy) {
    const auto allowed = allowed_task_classes(zone);
    if (!allowed.count(task_class)) return false;
    if (zone == EnergyZone::Yellow && task_class == TaskClass::RealTimeInference) {
        return compute_demand_units <=
               policy.lightweight_demand_fraction * derated_capacity_units_s;
    }
    return true;
}

const char* task_class_name(TaskClass c) {
    switch (c) {
        case TaskClass::RealTimeInference: return "RealTimeInference";
        case TaskClass::InterruptibleCompression: return "InterruptibleCompression";
        case TaskClass::BulkTraining: return "BulkTraining";
        case TaskClass::StorageRetrieval: return "StorageRetrieval";
        case TaskClass::Housekeeping: return "Housekeeping";
    }
    return "?";
}

std::optional<TaskClass> task_class_from_name(const std::string& name) {
    if (name == "RealTimeInference") return TaskClass::RealTimeInference;
    if (name == "InterruptibleCompression") return TaskClass::InterruptibleCompression;
    if (name == "BulkTraining") return TaskClass::BulkTraining;
    if (name == "StorageRetrieval") return TaskClass::StorageRetrieval;
    if (name == "Housekeeping") return TaskClass::Housekeeping;
    return std::nullopt;
}

}  // namespace sbdc
