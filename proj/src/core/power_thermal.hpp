#pragma once

#include <set>

#include "orbits.hpp"
#include "tasks.hpp"

namespace sbdc {

// Total order Red < Yellow < Green.
enum class EnergyZone { Red = 0, Yellow = 1, Green = 2 };

const char* zone_name(EnergyZone z);

struct PowerSpec {
    double panel_area_m2 = 4.0;
    double panel_efficiency = 0.3;
    double battery_capacity_Wh = 1000.0;
    double p_idle_W = 100.0;
    double p_compute_max_W = 400.0;
    double p_tx_W_per_bps = 1e-8;  // transmit power per bps of link rate
};

struct ThermalSpec {
    double radiator_area_m2 = 1.0;
    double emissivity = 0.85;
    double sink_temperature_K = 255.0;  // effective Earth IR sink
    double max_radiator_temperature_K = 330.0;
    double heat_capacity_J_per_K = 20000.0;
};

struct PowerThermalState {
    double soc_Wh = 0.0;
    double radiator_temperature_K = 290.0;
    double harvest_W = 0.0;
    double load_W = 0.0;
    EnergyZone zone = EnergyZone::Green;
    double thermal_headroom = 1.0;  // fraction of rejectable power still unused
};

struct ZonePolicy {
    double r_green = 0.40;
    double r_red = 0.15;
    double forecast_margin_s = 600.0;
    double thermal_gate = 0.10;
    // Yellow admits RealTimeInference only below this fraction of derated capacity.
    double lightweight_demand_fraction = 0.10;
};

struct ZoneForecast {
    double eclipse_remaining_s = 0.0;
    double time_to_next_contact_s = 0.0;
    double projected_load_W = 0.0;
};

struct EnergyStepResult {
    PowerThermalState state;
    double clamp_surplus_J = 0.0;  // harvested energy discarded at full battery
    double clamp_deficit_J = 0.0;  // unmet draw at empty battery
    bool deficit = false;
};

double harvest_power_w(const PowerSpec& spec, bool eclipsed, const PhysicalConstants& pc = {});

// P = eps * sigma * A * (T^4 - T_env^4); rejects T below the sink temperature.
double radiated_power_w(const ThermalSpec& spec, double temperature_K,
                        const PhysicalConstants& pc = {});

double thermal_headroom_fraction(const ThermalSpec& spec, double load_dissipated_W,
                                 const PhysicalConstants& pc = {});

// Explicit Euler over dt; all consumed power is dissipated as heat.
EnergyStepResult step_energy_thermal(const PowerThermalState& state, const PowerSpec& power,
                                     const ThermalSpec& thermal, double load_W, bool eclipsed,
                                     double dt_s, const PhysicalConstants& pc = {});

// Explicit-Euler stability bound for the thermal node: dt < C_th / (4 eps sigma A T_max^3).
double thermal_stability_dt_limit_s(const ThermalSpec& spec, const PhysicalConstants& pc = {});

EnergyZone compute_zone(const PowerThermalState& state, double battery_capacity_Wh,
                        const ZonePolicy& policy, const ZoneForecast& forecast);

std::set<TaskClass> allowed_task_classes(EnergyZone zone);

// Zone admission for a concrete task: class membership plus the Yellow-tier
// lightweight gate for RealTimeInference.
bool zone_permits(EnergyZone zone, TaskClass task_class, double compute_demand_units,
                  double derated_capacity_units_s, const ZonePolicy& policy);

}  // namespace sbdc
