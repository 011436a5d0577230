#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "node_model.hpp"
#include "orbits.hpp"
#include "power_thermal.hpp"
#include "rng.hpp"

namespace sbdc {

enum class ContactKind { Isl, Feeder, Access };

const char* contact_kind_name(ContactKind k);
std::optional<ContactKind> contact_kind_from_name(const std::string& name);

struct Contact {
    int id = -1;
    int src_node = -1;
    int dst_node = -1;
    double start_s = 0.0;
    double end_s = 0.0;
    double rate_bps = 0.0;
    double owlt_s = 0.0;  // one-way light time at contact midpoint
    ContactKind kind = ContactKind::Isl;
};

struct OutageModel {
    double outage_rate_per_s = 0.0;      // APT loss events while the link is up
    double reacquisition_mean_s = 0.0;   // exponential reacquisition delay
};

// Long-run fraction of time an ISL is usable under the alternating renewal model.
double expected_isl_availability(const OutageModel& m);

struct SatelliteEntry {
    int node_id = -1;
    CircularOrbit orbit;
    int shell = 0;
    int plane = 0;
    int index_in_plane = 0;
};

struct GroundEndpoint {
    int node_id = -1;
    GroundStation station;
    bool is_cohort = false;  // cohort sites take Access contacts, stations take Feeder
};

struct LunarEntry {
    int node_id = -1;
    double owlt_s = 1.28;
};

enum class IslTopology { RingCross, FullMesh };

struct ContactPlanConfig {
    double isl_rate_bps = 1e9;
    double feeder_rate_bps = 1e8;
    double access_rate_bps = 2e7;
    double lunar_rate_bps = 1e7;
    IslTopology topology = IslTopology::RingCross;
    double sample_step_s = 10.0;
    bool earth_rotation = true;
    // feeder contacts intersecting [start, end) are dropped (ground-outage experiments)
    std::optional<std::pair<double, double>> feeder_blackout;
};

// Deterministic function of geometry; independent of every RNG stream.
std::vector<Contact> build_contact_plan(const std::vector<SatelliteEntry>& satellites,
                                        const std::vector<GroundEndpoint>& ground,
                                        const std::optional<LunarEntry>& lunar,
                                        const ContactPlanConfig& config, double horizon_s,
                                        const PhysicalConstants& pc = {});

// Trims ISL contacts by an alternating renewal outage process; feeder and
// access links are unaffected. Contact ids are reassigned in sorted order.
std::vector<Contact> apply_outages(const std::vector<Contact>& plan, const OutageModel& model,
                                   RngStream& stream);

// Line-oriented text format:
//   contact <src> <dst> <start_s> <end_s> <rate_bps> <owlt_s> <kind>
std::string contacts_to_text(const std::vector<Contact>& plan);
std::vector<Contact> contacts_from_text(std::istream& in);

struct VertexAnnotation {
    int node_id = -1;
    int slot = 0;
    EnergyZone predicted_zone = EnergyZone::Green;
    double available_capacity_units_s = 0.0;
    double thermal_headroom = 1.0;
    double risk_rate_per_s = 0.0;
};

struct ForecastTable {
    double t0_s = 0.0;
    double slot_s = 30.0;
    int n_slots = 0;
    std::vector<int> node_ids;                            // sorted
    std::vector<std::vector<VertexAnnotation>> per_node;  // [node index][slot]
};

struct TimeExpandedGraph {
    double t0_s = 0.0;
    double slot_s = 30.0;
    int n_slots = 0;
    double horizon_s = 0.0;
    std::vector<int> node_ids;  // sorted
    std::vector<std::vector<VertexAnnotation>> annotations;
    std::vector<Contact> contacts;        // sorted by id
    std::map<int, double> storage_bits;   // per node
    std::map<int, Layer> node_layers;

    int node_index(int node_id) const;
    const VertexAnnotation& annotation(int node_id, int slot) const;
    int slot_of(double t_s) const;          // clamped to [0, n_slots-1]
    bool within_horizon(double t_s) const { return t_s <= t0_s + horizon_s; }
    double slot_start(int slot) const { return t0_s + slot * slot_s; }
    double slot_end(int slot) const { return t0_s + (slot + 1) * slot_s; }
};

struct CommEdgeView {
    int contact_id;
    int src_node, dst_node;
    int slot;
    double capacity_bits;
    double delay_s;
};

TimeExpandedGraph build_time_expanded_graph(const std::vector<Contact>& plan,
                                            const ForecastTable& forecasts, double slot_s,
                                            double horizon_s,
                                            const std::map<int, double>& storage_bits,
                                            const std::map<int, Layer>& node_layers);

std::vector<CommEdgeView> communication_edges(const TimeExpandedGraph& graph);

// Inputs for the open-loop forecast integration; callbacks keep the geometry
// and contact-plan lookups owned by the caller.
struct ForecastInputs {
    struct NodeState {
        int node_id = -1;
        NodeSpec spec;
        NodeHealth health;
        PowerThermalState state;
        double baseline_load_W = 0.0;
        double dose_rate_krad_per_year = 0.0;
        bool static_green = false;  // unpowered endpoints: fixed Green annotation
    };
    std::vector<NodeState> nodes;
    std::function<bool(int node_id, double t)> eclipsed;
    std::function<double(int node_id, double t)> eclipse_remaining_s;
    std::function<double(int node_id, double t)> time_to_next_contact_s;
    ZonePolicy zone_policy;
    RiskParams risk_params;
};

// Open-loop simulation of power_thermal with the projected baseline load;
// annotations are evaluated at slot midpoints.
ForecastTable build_forecasts(const ForecastInputs& inputs, double t0_s, double horizon_s,
                              double slot_s, const PhysicalConstants& pc = {});

}  // namespace sbdc
