#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "contact_graph.hpp"
#include "node_model.hpp"
#include "orbits.hpp"
#include "power_thermal.hpp"
#include "routing.hpp"
#include "traffic.hpp"

namespace sbdc {

enum class SimMode { RelayOnly, InOrbitCompute };

const char* mode_name(SimMode m);

struct SunConfig {
    bool fixed = true;           // fixed unit vector, or circular ecliptic motion
    Vec3 direction{1.0, 0.0, 0.0};
    double year_length_s = 365.25 * 86400.0;
    double obliquity_deg = 23.44;

    Vec3 direction_at(double t_s) const;
};

struct ShellConfig {
    Layer layer = Layer::Leo;
    double altitude_km = 550.0;
    double inclination_deg = 53.0;
    int planes = 1;
    int sats_per_plane = 1;
    double raan_offset_deg = 0.0;   // RAAN of plane 0
    double phase_offset_deg = 0.0;  // phase stagger between planes
};

struct LunarConfig {
    bool enabled = false;
    double owlt_s = 1.28;
};

struct GroundStationConfig {
    std::string name;
    double latitude_deg = 0.0;
    double longitude_deg = 0.0;
    double min_elevation_deg = 10.0;
};

struct CohortConfig {
    int cohort_id = -1;
    double latitude_deg = 0.0;
    double longitude_deg = 0.0;
    long population = 0;
    double min_elevation_deg = 25.0;
    MmppParams mmpp;
};

struct DhtsWorkload {
    bool enabled = false;
    double input_bits = 2e8;
    double output_bits = 1e7;  // alert-style result
    double compute_demand_units = 20.0;
    std::optional<double> deadline_offset_s;  // relative to arrival
    int replication_k = 1;
    bool results_to_ground = true;
};

struct EoWorkload {
    bool enabled = false;
    double start_s = 0.0;
    double imaging_period_s = 600.0;
    double input_bits = 8e9;
    double compression_ratio = 20.0;
    double compute_units_per_bit = 1e-8;
};

struct BulkTrainingWorkload {
    bool enabled = false;
    double period_s = 3600.0;
    double start_s = 0.0;
    double input_bits = 1e9;
    double output_bits = 0.0;
    double compute_demand_units = 5e4;
    int replication_k = 1;
    int origin_station = 0;  // index into ground_stations
};

struct HousekeepingWorkload {
    double period_s = 600.0;
    double compute_demand_units = 1.0;
};

struct WorkloadsConfig {
    DhtsWorkload dhts;
    EoWorkload eo;
    BulkTrainingWorkload bulk_training;
    HousekeepingWorkload housekeeping;
    double handover_signaling_demand_units = 0.5;
};

struct LayerNodeSpec {
    double compute_capacity_units_s = 100.0;
    double storage_bits = 1e12;
    int isl_terminals = 4;
    PowerSpec power;
    ThermalSpec thermal;
};

struct RadiationNodeOverride {
    int node_id = -1;
    std::optional<double> initial_tid_krad;
    std::optional<double> dose_rate_krad_per_year;
    std::optional<double> seu_rate_per_s;
    std::optional<double> tid_tolerance_krad;
};

struct RadiationConfig {
    double dose_rate_krad_per_year = 0.0;
    double seu_rate_per_s = 0.0;
    double tid_tolerance_min_krad = 10.0;
    double tid_tolerance_max_krad = 100.0;
    double initial_tid_krad = 0.0;
    RiskParams risk;
    std::vector<RadiationNodeOverride> overrides;
};

struct OrchestratorConfig {
    double geo_epoch_s = 300.0;
    double meo_epoch_s = 60.0;
    double table_validity_s = 900.0;
    double planning_horizon_s = 600.0;  // defaults to 2 * geo_epoch_s
    double load_balance_threshold = 2.0;
    double sla_weight_multiplier = 2.0;
    double sla_window_s = 3600.0;
    double watchdog_dose_fraction = 0.9;
    double watchdog_risk_threshold = 0.05;
    bool watchdog_enabled = true;
    double replication_risk_threshold = 0.05;
    double checkpoint_interval_s = 60.0;
    double checkpoint_size_fraction = 0.1;
    double control_bundle_bits = 1e6;
    double table_probe_bits = 1e6;
    double local_retry_s = 60.0;
    double uplink_admission_per_s = 10.0;  // per satellite
    int max_route_hops = 4;
    int max_concurrent_tasks = 16;
};

struct SlaClassTarget {
    double quantile = 0.95;
    double latency_bound_s = 0.0;
};

struct SlaConfig {
    std::map<TaskClass, SlaClassTarget> targets;
    double max_miss_fraction = 0.05;
};

struct LinksConfig {
    double isl_rate_bps = 1e9;
    double feeder_rate_bps = 1e8;
    double access_rate_bps = 2e7;
    double lunar_rate_bps = 1e7;
    IslTopology topology = IslTopology::RingCross;
    double ground_capacity_units_s = 1e7;  // relay-mode processing rate on ground
    std::optional<std::pair<double, double>> feeder_blackout;
};

struct SimConfig {
    double physics_step_s = 10.0;
    double slot_s = 30.0;
    double serving_epoch_s = 10.0;
    double energy_sample_s = 60.0;
    double contact_sample_step_s = 10.0;
};

struct Scenario {
    std::string name = "scenario";
    double horizon_s = 3600.0;
    std::uint64_t seed = 0;
    SimMode mode = SimMode::InOrbitCompute;

    PhysicalConstants constants;
    SunConfig sun;
    bool earth_rotation = true;

    std::vector<ShellConfig> shells;
    LunarConfig lunar;
    std::vector<GroundStationConfig> ground_stations;
    std::vector<CohortConfig> cohorts;
    WorkloadsConfig workloads;
    std::map<Layer, LayerNodeSpec> node_specs;
    ZonePolicy zone_policy;
    CostWeights cost_weights;
    OutageModel outage_model;
    OrchestratorConfig orchestrator;
    SlaConfig sla;
    RadiationConfig radiation;
    LinksConfig links;
    SimConfig sim;

    std::optional<std::string> injected_contacts_text;  // bypasses geometry when set

    std::string raw_text;
    std::uint64_t scenario_hash = 0;
    std::string resolved_json;  // every default materialized
};

// Strict parse: unknown keys are rejected, every violation is reported with
// section context in a single ConfigError.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario_file(const std::string& path);

// Dotted-path override on the raw JSON text (sweeps, --seed). The result is
// re-validated by parse_scenario.
std::string override_scenario_key(const std::string& json_text, const std::string& dotted_key,
                                  const std::string& value);

std::uint64_t hash_bytes(const std::string& bytes);

}  // namespace sbdc
