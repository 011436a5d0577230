#include "scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace sbdc {

using nlohmann::json;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Strict section reader: collects errors with path context and rejects
// unknown keys once the section is finished.
class Reader {
public:
    Reader(const json& j, std::string path, std::vector<std::string>& errors)
        : j_(j), path_(std::move(path)), errors_(errors) {
        if (!j_.is_object()) errors_.push_back(path_ + ": expected an object");
    }

    bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

    double number(const char* key, double def) {
        mark(key);
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_number()) {
            error(key, "expected a number");
            return def;
        }
        return v.get<double>();
    }

    std::int64_t integer(const char* key, std::int64_t def) {
        mark(key);
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) {
            error(key, "expected an integer");
            return def;
        }
        return v.get<std::int64_t>();
    }

    bool boolean(const char* key, bool def) {
        mark(key);
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) {
            error(key, "expected a boolean");
            return def;
        }
        return v.get<bool>();
    }

    std::string text(const char* key, const std::string& def) {
        mark(key);
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_string()) {
            error(key, "expected a string");
            return def;
        }
        return v.get<std::string>();
    }

    const json* object(const char* key) {
        mark(key);
        if (!has(key)) return nullptr;
        const auto& v = j_.at(key);
        if (!v.is_object()) {
            error(key, "expected an object");
            return nullptr;
        }
        return &v;
    }

    const json* array(const char* key) {
        mark(key);
        if (!has(key)) return nullptr;
        const auto& v = j_.at(key);
        if (!v.is_array()) {
            error(key, "expected an array");
            return nullptr;
        }
        return &v;
    }

    void error(const char* key, const std::string& msg) {
        errors_.push_back(path_ + "." + key + ": " + msg);
    }

    void require(bool cond, const std::string& msg) {
        if (!cond) errors_.push_back(path_ + ": " + msg);
    }

    void finish() {
        if (!j_.is_object()) return;
        for (const auto& [key, value] : j_.items()) {
            (void)value;
            if (!seen_.count(key)) errors_.push_back(path_ + ": unknown key '" + key + "'");
        }
    }

    const std::string& path() const { return path_; }

private:
    void mark(const char* key) { seen_.insert(key); }

    const json& j_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
};

PowerSpec read_power(const json& j, const std::string& path, std::vector<std::string>& errors,
                     const PowerSpec& def) {
    Reader r(j, path, errors);
    PowerSpec p;
    p.panel_area_m2 = r.number("panel_area_m2", def.panel_area_m2);
    p.panel_efficiency = r.number("panel_efficiency", def.panel_efficiency);
    p.battery_capacity_Wh = r.number("battery_capacity_Wh", def.battery_capacity_Wh);
    p.p_idle_W = r.number("p_idle_W", def.p_idle_W);
    p.p_compute_max_W = r.number("p_compute_max_W", def.p_compute_max_W);
    p.p_tx_W_per_bps = r.number("p_tx_W_per_bps", def.p_tx_W_per_bps);
    r.require(p.panel_area_m2 > 0 && p.battery_capacity_Wh > 0 && p.p_idle_W > 0 &&
                  p.p_compute_max_W > 0 && p.p_tx_W_per_bps >= 0,
              "power spec fields must be positive");
    r.require(p.panel_efficiency > 0 && p.panel_efficiency <= 1,
              "panel_efficiency must lie in (0, 1]");
    r.finish();
    return p;
}

ThermalSpec read_thermal(const json& j, const std::string& path, std::vector<std::string>& errors,
                         const ThermalSpec& def) {
    Reader r(j, path, errors);
    ThermalSpec t;
    t.radiator_area_m2 = r.number("radiator_area_m2", def.radiator_area_m2);
    t.emissivity = r.number("emissivity", def.emissivity);
    t.sink_temperature_K = r.number("sink_temperature_K", def.sink_temperature_K);
    t.max_radiator_temperature_K =
        r.number("max_radiator_temperature_K", def.max_radiator_temperature_K);
    t.heat_capacity_J_per_K = r.number("heat_capacity_J_per_K", def.heat_capacity_J_per_K);
    r.require(t.emissivity > 0 && t.emissivity <= 1, "emissivity must lie in (0, 1]");
    r.require(t.sink_temperature_K >= 0 && t.sink_temperature_K < t.max_radiator_temperature_K,
              "require 0 <= sink_temperature_K < max_radiator_temperature_K");
    r.require(t.radiator_area_m2 > 0 && t.heat_capacity_J_per_K > 0,
              "thermal areas and heat capacity must be positive");
    r.finish();
    return t;
}

json power_to_json(const PowerSpec& p) {
    return json{{"panel_area_m2", p.panel_area_m2},
                {"panel_efficiency", p.panel_efficiency},
                {"battery_capacity_Wh", p.battery_capacity_Wh},
                {"p_idle_W", p.p_idle_W},
                {"p_compute_max_W", p.p_compute_max_W},
                {"p_tx_W_per_bps", p.p_tx_W_per_bps}};
}

json thermal_to_json(const ThermalSpec& t) {
    return json{{"radiator_area_m2", t.radiator_area_m2},
                {"emissivity", t.emissivity},
                {"sink_temperature_K", t.sink_temperature_K},
                {"max_radiator_temperature_K", t.max_radiator_temperature_K},
                {"heat_capacity_J_per_K", t.heat_capacity_J_per_K}};
}

LayerNodeSpec default_layer_spec(Layer layer) {
    LayerNodeSpec s;
    switch (layer) {
        case Layer::Leo:
            s.compute_capacity_units_s = 100.0;
            s.power.battery_capacity_Wh = 1000.0;
            s.power.panel_area_m2 = 4.0;
            break;
        case Layer::Meo:
            s.compute_capacity_units_s = 200.0;
            s.power.battery_capacity_Wh = 3000.0;
            s.power.panel_area_m2 = 8.0;
            s.thermal.radiator_area_m2 = 2.0;
            s.thermal.heat_capacity_J_per_K = 40000.0;
            break;
        case Layer::Geo:
            s.compute_capacity_units_s = 500.0;
            s.power.battery_capacity_Wh = 8000.0;
            s.power.panel_area_m2 = 20.0;
            s.power.p_compute_max_W = 1200.0;
            s.thermal.radiator_area_m2 = 6.0;
            s.thermal.heat_capacity_J_per_K = 120000.0;
            break;
        case Layer::Lunar:
            s.compute_capacity_units_s = 300.0;
            s.power.battery_capacity_Wh = 5000.0;
            s.power.panel_area_m2 = 10.0;
            s.thermal.radiator_area_m2 = 3.0;
            s.thermal.sink_temperature_K = 3.0;  // deep-space-facing radiator
            s.thermal.heat_capacity_J_per_K = 60000.0;
            break;
        case Layer::Ground:
            s.compute_capacity_units_s = 1e7;
            s.storage_bits = 1e16;
            break;
    }
    return s;
}

}  // namespace

const char* mode_name(SimMode m) {
    return m == SimMode::RelayOnly ? "relay_only" : "in_orbit_compute";
}

Vec3 SunConfig::direction_at(double t_s) const {
    if (fixed) return normalized(direction);
    const double phase = 2.0 * kPi * t_s / year_length_s;
    const double eps = obliquity_deg * kPi / 180.0;
    const Vec3 ecliptic{std::cos(phase), std::sin(phase), 0.0};
    // tilt the ecliptic circle about the x axis
    return Vec3{ecliptic.x, std::cos(eps) * ecliptic.y, std::sin(eps) * ecliptic.y};
}

std::uint64_t hash_bytes(const std::string& bytes) { return fnv1a64(bytes); }

Scenario parse_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario: JSON parse error: ") + e.what());
    }

    std::vector<std::string> errors;
    Scenario sc;
    sc.raw_text = json_text;
    sc.scenario_hash = hash_bytes(json_text);

    Reader r(root, "scenario", errors);
    sc.name = r.text("name", "scenario");
    sc.horizon_s = r.number("horizon_s", 3600.0);
    r.require(sc.horizon_s > 0, "horizon_s must be > 0");
    sc.seed = static_cast<std::uint64_t>(r.integer("seed", 0));

    {
        const std::string m = r.text("mode", "in_orbit_compute");
        if (m == "relay_only")
            sc.mode = SimMode::RelayOnly;
        else if (m == "in_orbit_compute")
            sc.mode = SimMode::InOrbitCompute;
        else
            r.error("mode", "must be 'relay_only' or 'in_orbit_compute'");
    }

    if (const json* jc = r.object("constants")) {
        Reader c(*jc, "constants", errors);
        sc.constants.mu_earth_km3_s2 = c.number("mu_earth_km3_s2", sc.constants.mu_earth_km3_s2);
        sc.constants.earth_radius_km = c.number("earth_radius_km", sc.constants.earth_radius_km);
        sc.constants.light_speed_km_s = c.number("light_speed_km_s", sc.constants.light_speed_km_s);
        sc.constants.solar_constant_w_m2 =
            c.number("solar_constant_w_m2", sc.constants.solar_constant_w_m2);
        sc.constants.stefan_boltzmann_w_m2_k4 =
            c.number("stefan_boltzmann_w_m2_k4", sc.constants.stefan_boltzmann_w_m2_k4);
        sc.earth_rotation = c.boolean("earth_rotation", true);
        if (const json* js = c.object("sun")) {
            Reader s(*js, "constants.sun", errors);
            const std::string sun_mode = s.text("mode", "fixed");
            if (sun_mode == "fixed")
                sc.sun.fixed = true;
            else if (sun_mode == "ecliptic")
                sc.sun.fixed = false;
            else
                s.error("mode", "must be 'fixed' or 'ecliptic'");
            if (const json* jd = s.array("direction")) {
                if (jd->size() != 3 || !(*jd)[0].is_number())
                    s.error("direction", "expected [x, y, z]");
                else
                    sc.sun.direction = Vec3{(*jd)[0].get<double>(), (*jd)[1].get<double>(),
                                            (*jd)[2].get<double>()};
            }
            sc.sun.obliquity_deg = s.number("obliquity_deg", sc.sun.obliquity_deg);
            sc.sun.year_length_s = s.number("year_length_s", sc.sun.year_length_s);
            if (norm(sc.sun.direction) == 0.0) s.error("direction", "must be a nonzero vector");
            s.finish();
        }
        c.finish();
    }

    if (const json* jc = r.object("constellation")) {
        Reader c(*jc, "constellation", errors);
        if (const json* js = c.array("shells")) {
            int idx = 0;
            for (const auto& js : *js) {
                const std::string path = "constellation.shells[" + std::to_string(idx++) + "]";
                Reader s(js, path, errors);
                ShellConfig shell;
                const std::string lname = s.text("layer", "LEO");
                const auto layer = layer_from_name(lname);
                if (!layer || *layer == Layer::Ground || *layer == Layer::Lunar)
                    s.error("layer", "must be LEO, MEO, or GEO");
                else
                    shell.layer = *layer;
                shell.altitude_km = s.number("altitude_km", 550.0);
                shell.inclination_deg = s.number("inclination_deg", 53.0);
                shell.planes = static_cast<int>(s.integer("planes", 1));
                shell.sats_per_plane = static_cast<int>(s.integer("sats_per_plane", 1));
                shell.raan_offset_deg = s.number("raan_offset_deg", 0.0);
                shell.phase_offset_deg = s.number("phase_offset_deg", 0.0);
                s.require(shell.planes >= 1 && shell.sats_per_plane >= 1,
                          "planes and sats_per_plane must be >= 1");
                try {
                    make_circular_orbit(shell.altitude_km, shell.inclination_deg, 0.0, 0.0,
                                        shell.layer);
                } catch (const ConfigError& e) {
                    errors.push_back(path + ": " + e.what());
                }
                s.finish();
                sc.shells.push_back(shell);
            }
        }
        if (const json* jl = c.object("lunar")) {
            Reader l(*jl, "constellation.lunar", errors);
            sc.lunar.enabled = l.boolean("enabled", true);
            sc.lunar.owlt_s = l.number("owlt_s", 1.28);
            l.require(sc.lunar.owlt_s > 0, "owlt_s must be > 0");
            l.finish();
        }
        c.finish();
    }

    if (const json* jg = r.array("ground_stations")) {
        int idx = 0;
        for (const auto& js : *jg) {
            const std::string path = "ground_stations[" + std::to_string(idx++) + "]";
            Reader g(js, path, errors);
            GroundStationConfig gs;
            gs.name = g.text("name", "gs" + std::to_string(idx - 1));
            gs.latitude_deg = g.number("latitude_deg", 0.0);
            gs.longitude_deg = g.number("longitude_deg", 0.0);
            gs.min_elevation_deg = g.number("min_elevation_deg", 10.0);
            g.require(std::abs(gs.latitude_deg) <= 90.0, "|latitude_deg| must be <= 90");
            g.require(gs.min_elevation_deg >= 0.0 && gs.min_elevation_deg < 90.0,
                      "min_elevation_deg must lie in [0, 90)");
            g.finish();
            sc.ground_stations.push_back(gs);
        }
    }

    if (const json* jc = r.array("cohorts")) {
        int idx = 0;
        for (const auto& js : *jc) {
            const std::string path = "cohorts[" + std::to_string(idx) + "]";
            Reader c(js, path, errors);
            CohortConfig co;
            co.cohort_id = static_cast<int>(c.integer("cohort_id", idx));
            co.latitude_deg = c.number("latitude_deg", 0.0);
            co.longitude_deg = c.number("longitude_deg", 0.0);
            co.population = c.integer("population", 0);
            co.min_elevation_deg = c.number("min_elevation_deg", 25.0);
            c.require(std::abs(co.latitude_deg) <= 90.0, "|latitude_deg| must be <= 90");
            c.require(co.population >= 0, "population must be >= 0");
            if (const json* jm = c.object("mmpp")) {
                Reader m(*jm, path + ".mmpp", errors);
                co.mmpp.rate_low_per_s = m.number("rate_low_per_s", 0.0);
                co.mmpp.rate_high_per_s = m.number("rate_high_per_s", 0.0);
                co.mmpp.switch_low_to_high_per_s = m.number("switch_low_to_high_per_s", 1e-3);
                co.mmpp.switch_high_to_low_per_s = m.number("switch_high_to_low_per_s", 1e-3);
                m.require(co.mmpp.rate_high_per_s >= co.mmpp.rate_low_per_s &&
                              co.mmpp.rate_low_per_s >= 0.0,
                          "rates must satisfy rate_high >= rate_low >= 0");
                m.require(co.mmpp.switch_low_to_high_per_s > 0.0 &&
                              co.mmpp.switch_high_to_low_per_s > 0.0,
                          "switch rates must be > 0");
                m.finish();
            }
            c.finish();
            sc.cohorts.push_back(co);
            ++idx;
        }
    }

    if (const json* jw = r.object("workloads")) {
        Reader w(*jw, "workloads", errors);
        if (const json* jd = w.object("dhts")) {
            Reader d(*jd, "workloads.dhts", errors);
            auto& dh = sc.workloads.dhts;
            dh.enabled = d.boolean("enabled", true);
            dh.input_bits = d.number("input_bits", dh.input_bits);
            dh.output_bits = d.number("output_bits", dh.output_bits);
            dh.compute_demand_units = d.number("compute_demand_units", dh.compute_demand_units);
            if (d.has("deadline_offset_s")) dh.deadline_offset_s = d.number("deadline_offset_s", 0.0);
            dh.replication_k = static_cast<int>(d.integer("replication_k", 1));
            dh.results_to_ground = d.boolean("results_to_ground", true);
            d.require(dh.input_bits > 0 && dh.output_bits >= 0 && dh.compute_demand_units > 0,
                      "dhts sizes must be positive");
            d.finish();
        }
        if (const json* je = w.object("eo")) {
            Reader e(*je, "workloads.eo", errors);
            auto& eo = sc.workloads.eo;
            eo.enabled = e.boolean("enabled", true);
            eo.start_s = e.number("start_s", eo.start_s);
            eo.imaging_period_s = e.number("imaging_period_s", eo.imaging_period_s);
            eo.input_bits = e.number("input_bits", eo.input_bits);
            eo.compression_ratio = e.number("compression_ratio", eo.compression_ratio);
            eo.compute_units_per_bit = e.number("compute_units_per_bit", eo.compute_units_per_bit);
            e.require(eo.compression_ratio >= 1.0, "compression_ratio must be >= 1");
            e.require(eo.imaging_period_s > 0 && eo.input_bits > 0,
                      "imaging period and input_bits must be positive");
            e.finish();
        }
        if (const json* jb = w.object("bulk_training")) {
            Reader b(*jb, "workloads.bulk_training", errors);
            auto& bt = sc.workloads.bulk_training;
            bt.enabled = b.boolean("enabled", true);
            bt.period_s = b.number("period_s", bt.period_s);
            bt.start_s = b.number("start_s", bt.start_s);
            bt.input_bits = b.number("input_bits", bt.input_bits);
            bt.output_bits = b.number("output_bits", bt.output_bits);
            bt.compute_demand_units = b.number("compute_demand_units", bt.compute_demand_units);
            bt.replication_k = static_cast<int>(b.integer("replication_k", 1));
            bt.origin_station = static_cast<int>(b.integer("origin_station", 0));
            b.require(bt.period_s > 0 && bt.input_bits > 0 && bt.compute_demand_units > 0,
                      "bulk_training sizes must be positive");
            b.finish();
        }
        if (const json* jh = w.object("housekeeping")) {
            Reader h(*jh, "workloads.housekeeping", errors);
            auto& hk = sc.workloads.housekeeping;
            hk.period_s = h.number("period_s", hk.period_s);
            hk.compute_demand_units = h.number("compute_demand_units", hk.compute_demand_units);
            h.require(hk.period_s > 0, "period_s must be > 0");
            h.finish();
        }
        sc.workloads.handover_signaling_demand_units =
            w.number("handover_signaling_demand_units", 0.5);
        w.finish();
    }

    if (const json* jn = r.object("node_specs")) {
        Reader n(*jn, "node_specs", errors);
        for (const char* lname : {"LEO", "MEO", "GEO", "Lunar", "Ground"}) {
            const Layer layer = *layer_from_name(lname);
            LayerNodeSpec def = default_layer_spec(layer);
            if (const json* jl = n.object(lname)) {
                const std::string path = std::string("node_specs.") + lname;
                Reader l(*jl, path, errors);
                def.compute_capacity_units_s =
                    l.number("compute_capacity_units_s", def.compute_capacity_units_s);
                def.storage_bits = l.number("storage_bits", def.storage_bits);
                def.isl_terminals = static_cast<int>(l.integer("isl_terminals", def.isl_terminals));
                if (const json* jp = l.object("power"))
                    def.power = read_power(*jp, path + ".power", errors, def.power);
                if (const json* jt = l.object("thermal"))
                    def.thermal = read_thermal(*jt, path + ".thermal", errors, def.thermal);
                l.require(def.compute_capacity_units_s > 0, "compute capacity must be > 0");
                l.require(def.isl_terminals >= 0, "isl_terminals must be >= 0");
                l.finish();
            }
            sc.node_specs[layer] = def;
        }
        n.finish();
    } else {
        for (Layer layer : {Layer::Leo, Layer::Meo, Layer::Geo, Layer::Lunar, Layer::Ground})
            sc.node_specs[layer] = default_layer_spec(layer);
    }

    if (const json* jz = r.object("zone_policy")) {
        Reader z(*jz, "zone_policy", errors);
        sc.zone_policy.r_green = z.number("r_green", 0.40);
        sc.zone_policy.r_red = z.number("r_red", 0.15);
        sc.zone_policy.forecast_margin_s = z.number("forecast_margin_s", 600.0);
        sc.zone_policy.thermal_gate = z.number("thermal_gate", 0.10);
        sc.zone_policy.lightweight_demand_fraction =
            z.number("lightweight_demand_fraction", 0.10);
        z.require(sc.zone_policy.r_red > 0 && sc.zone_policy.r_red < sc.zone_policy.r_green &&
                      sc.zone_policy.r_green < 1,
                  "ZonePolicy invariant requires 0 < r_red < r_green < 1");
        z.finish();
    }

    if (const json* jw = r.object("cost_weights")) {
        Reader w(*jw, "cost_weights", errors);
        sc.cost_weights.w_latency = w.number("w_latency", 1.0);
        sc.cost_weights.w_energy = w.number("w_energy", 0.1);
        sc.cost_weights.w_risk = w.number("w_risk", 100.0);
        w.require(sc.cost_weights.w_latency >= 0 && sc.cost_weights.w_energy >= 0 &&
                      sc.cost_weights.w_risk >= 0,
                  "weights must be >= 0");
        w.require(sc.cost_weights.w_latency + sc.cost_weights.w_energy + sc.cost_weights.w_risk >
                      0,
                  "weights must not all be zero");
        w.finish();
    }

    if (const json* jo = r.object("outage_model")) {
        Reader o(*jo, "outage_model", errors);
        sc.outage_model.outage_rate_per_s = o.number("outage_rate_per_s", 0.0);
        sc.outage_model.reacquisition_mean_s = o.number("reacquisition_mean_s", 0.0);
        o.require(sc.outage_model.outage_rate_per_s >= 0 &&
                      sc.outage_model.reacquisition_mean_s >= 0,
                  "outage rates must be >= 0");
        o.finish();
    }

    if (const json* jo = r.object("orchestrator")) {
        Reader o(*jo, "orchestrator", errors);
        auto& oc = sc.orchestrator;
        oc.geo_epoch_s = o.number("geo_epoch_s", 300.0);
        oc.meo_epoch_s = o.number("meo_epoch_s", 60.0);
        oc.table_validity_s = o.number("table_validity_s", 900.0);
        oc.planning_horizon_s = o.number("planning_horizon_s", 2.0 * oc.geo_epoch_s);
        oc.load_balance_threshold = o.number("load_balance_threshold", 2.0);
        oc.sla_weight_multiplier = o.number("sla_weight_multiplier", 2.0);
        oc.sla_window_s = o.number("sla_window_s", 3600.0);
        oc.watchdog_dose_fraction = o.number("watchdog_dose_fraction", 0.9);
        oc.watchdog_risk_threshold = o.number("watchdog_risk_threshold", 0.05);
        oc.watchdog_enabled = o.boolean("watchdog_enabled", true);
        oc.replication_risk_threshold = o.number("replication_risk_threshold", 0.05);
        oc.checkpoint_interval_s = o.number("checkpoint_interval_s", 60.0);
        oc.checkpoint_size_fraction = o.number("checkpoint_size_fraction", 0.1);
        oc.control_bundle_bits = o.number("control_bundle_bits", 1e6);
        oc.table_probe_bits = o.number("table_probe_bits", 1e6);
        oc.local_retry_s = o.number("local_retry_s", 60.0);
        oc.uplink_admission_per_s = o.number("uplink_admission_per_s", 10.0);
        oc.max_route_hops = static_cast<int>(o.integer("max_route_hops", 4));
        oc.max_concurrent_tasks = static_cast<int>(o.integer("max_concurrent_tasks", 16));
        o.require(oc.geo_epoch_s > 0 && oc.meo_epoch_s > 0 && oc.table_validity_s > 0 &&
                      oc.planning_horizon_s > 0,
                  "epochs and validity must be > 0");
        o.require(oc.load_balance_threshold >= 1.0, "load_balance_threshold must be >= 1");
        o.require(oc.max_route_hops >= 1, "max_route_hops must be >= 1");
        o.finish();
    } else {
        sc.orchestrator.planning_horizon_s = 2.0 * sc.orchestrator.geo_epoch_s;
    }

    if (const json* js = r.object("sla")) {
        Reader s(*js, "sla", errors);
        sc.sla.max_miss_fraction = s.number("max_miss_fraction", 0.05);
        if (const json* jt = s.array("targets")) {
            int idx = 0;
            for (const auto& jc : *jt) {
                const std::string path = "sla.targets[" + std::to_string(idx++) + "]";
                Reader t(jc, path, errors);
                const std::string cname = t.text("class", "");
                const auto cls = task_class_from_name(cname);
                SlaClassTarget target;
                target.quantile = t.number("quantile", 0.95);
                target.latency_bound_s = t.number("latency_bound_s", 0.0);
                t.require(target.quantile > 0 && target.quantile < 1,
                          "quantile must lie in (0, 1)");
                t.require(target.latency_bound_s > 0, "latency_bound_s must be > 0");
                if (!cls)
                    t.error("class", "unknown task class '" + cname + "'");
                else
                    sc.sla.targets[*cls] = target;
                t.finish();
            }
        }
        s.finish();
    }

    if (const json* jr = r.object("radiation")) {
        Reader rr(*jr, "radiation", errors);
        auto& rad = sc.radiation;
        rad.dose_rate_krad_per_year = rr.number("dose_rate_krad_per_year", 0.0);
        rad.seu_rate_per_s = rr.number("seu_rate_per_s", 0.0);
        rad.tid_tolerance_min_krad = rr.number("tid_tolerance_min_krad", 10.0);
        rad.tid_tolerance_max_krad = rr.number("tid_tolerance_max_krad", 100.0);
        rad.initial_tid_krad = rr.number("initial_tid_krad", 0.0);
        rad.risk.k_seu = rr.number("k_seu", 1.0);
        rad.risk.k_tid_per_s = rr.number("k_tid_per_s", 1e-6);
        rr.require(rad.tid_tolerance_min_krad > 0 &&
                       rad.tid_tolerance_min_krad <= rad.tid_tolerance_max_krad,
                   "tid tolerance range must satisfy 0 < min <= max");
        rr.require(rad.dose_rate_krad_per_year >= 0 && rad.seu_rate_per_s >= 0 &&
                       rad.initial_tid_krad >= 0,
                   "radiation rates must be >= 0");
        if (const json* jo = rr.array("overrides")) {
            int idx = 0;
            for (const auto& je : *jo) {
                const std::string path = "radiation.overrides[" + std::to_string(idx++) + "]";
                Reader e(je, path, errors);
                RadiationNodeOverride ov;
                ov.node_id = static_cast<int>(e.integer("node_id", -1));
                if (e.has("initial_tid_krad")) ov.initial_tid_krad = e.number("initial_tid_krad", 0);
                if (e.has("dose_rate_krad_per_year"))
                    ov.dose_rate_krad_per_year = e.number("dose_rate_krad_per_year", 0);
                if (e.has("seu_rate_per_s")) ov.seu_rate_per_s = e.number("seu_rate_per_s", 0);
                if (e.has("tid_tolerance_krad"))
                    ov.tid_tolerance_krad = e.number("tid_tolerance_krad", 0);
                e.require(ov.node_id >= 0, "node_id must be >= 0");
                e.finish();
                rad.overrides.push_back(ov);
            }
        }
        rr.finish();
    }

    if (const json* jl = r.object("links")) {
        Reader l(*jl, "links", errors);
        auto& lk = sc.links;
        lk.isl_rate_bps = l.number("isl_rate_bps", 1e9);
        lk.feeder_rate_bps = l.number("feeder_rate_bps", 1e8);
        lk.access_rate_bps = l.number("access_rate_bps", 2e7);
        lk.lunar_rate_bps = l.number("lunar_rate_bps", 1e7);
        lk.ground_capacity_units_s = l.number("ground_capacity_units_s", 1e7);
        const std::string topo = l.text("isl_topology", "ring_cross");
        if (topo == "ring_cross")
            lk.topology = IslTopology::RingCross;
        else if (topo == "full_mesh")
            lk.topology = IslTopology::FullMesh;
        else
            l.error("isl_topology", "must be 'ring_cross' or 'full_mesh'");
        l.require(lk.isl_rate_bps > 0 && lk.feeder_rate_bps > 0 && lk.access_rate_bps > 0,
                  "link rates must be > 0");
        if (const json* jb = l.object("feeder_blackout")) {
            Reader b(*jb, "links.feeder_blackout", errors);
            const double b0 = b.number("start_s", 0.0);
            const double b1 = b.number("end_s", 0.0);
            b.require(b1 > b0 && b0 >= 0, "blackout requires 0 <= start_s < end_s");
            lk.feeder_blackout = {b0, b1};
            b.finish();
        }
        l.finish();
    }

    if (const json* js = r.object("sim")) {
        Reader s(*js, "sim", errors);
        sc.sim.physics_step_s = s.number("physics_step_s", 10.0);
        sc.sim.slot_s = s.number("slot_s", 30.0);
        sc.sim.serving_epoch_s = s.number("serving_epoch_s", 10.0);
        sc.sim.energy_sample_s = s.number("energy_sample_s", 60.0);
        sc.sim.contact_sample_step_s = s.number("contact_sample_step_s", 10.0);
        s.require(sc.sim.physics_step_s > 0 && sc.sim.physics_step_s <= 10.0,
                  "physics_step_s must lie in (0, 10]");
        s.require(sc.sim.slot_s > 0 && sc.sim.serving_epoch_s > 0 &&
                      sc.sim.contact_sample_step_s > 0,
                  "sim steps must be > 0");
        s.finish();
    }

    r.finish();

    // cross-section checks
    for (const auto& [layer, spec] : sc.node_specs) {
        if (layer == Layer::Ground) continue;
        const double limit = thermal_stability_dt_limit_s(spec.thermal, sc.constants);
        if (sc.sim.physics_step_s >= limit)
            errors.push_back("sim.physics_step_s: explicit Euler unstable for " +
                             std::string(layer_name(layer)) + " thermal spec (dt limit " +
                             std::to_string(limit) + " s)");
    }
    if (sc.workloads.bulk_training.enabled &&
        sc.workloads.bulk_training.origin_station >=
            static_cast<int>(sc.ground_stations.size()))
        errors.push_back("workloads.bulk_training.origin_station: no such ground station");

    if (!errors.empty()) {
        std::ostringstream msg;
        for (std::size_t i = 0; i < errors.size(); ++i) {
            if (i) msg << '\n';
            msg << errors[i];
        }
        throw ConfigError(msg.str());
    }

    // materialize the fully resolved configuration
    json resolved;
    resolved["name"] = sc.name;
    resolved["horizon_s"] = sc.horizon_s;
    resolved["seed"] = sc.seed;
    resolved["mode"] = mode_name(sc.mode);
    resolved["constants"] = {
        {"mu_earth_km3_s2", sc.constants.mu_earth_km3_s2},
        {"earth_radius_km", sc.constants.earth_radius_km},
        {"light_speed_km_s", sc.constants.light_speed_km_s},
        {"solar_constant_w_m2", sc.constants.solar_constant_w_m2},
        {"stefan_boltzmann_w_m2_k4", sc.constants.stefan_boltzmann_w_m2_k4},
        {"earth_rotation", sc.earth_rotation},
        {"sun",
         {{"mode", sc.sun.fixed ? "fixed" : "ecliptic"},
          {"direction", {sc.sun.direction.x, sc.sun.direction.y, sc.sun.direction.z}},
          {"obliquity_deg", sc.sun.obliquity_deg},
          {"year_length_s", sc.sun.year_length_s}}}};
    {
        json shells = json::array();
        for (const auto& s : sc.shells)
            shells.push_back({{"layer", layer_name(s.layer)},
                              {"altitude_km", s.altitude_km},
                              {"inclination_deg", s.inclination_deg},
                              {"planes", s.planes},
                              {"sats_per_plane", s.sats_per_plane},
                              {"raan_offset_deg", s.raan_offset_deg},
                              {"phase_offset_deg", s.phase_offset_deg}});
        resolved["constellation"] = {{"shells", shells},
                                     {"lunar",
                                      {{"enabled", sc.lunar.enabled},
                                       {"owlt_s", sc.lunar.owlt_s}}}};
    }
    {
        json stations = json::array();
        for (const auto& g : sc.ground_stations)
            stations.push_back({{"name", g.name},
                                {"latitude_deg", g.latitude_deg},
                                {"longitude_deg", g.longitude_deg},
                                {"min_elevation_deg", g.min_elevation_deg}});
        resolved["ground_stations"] = stations;
        json cohorts = json::array();
        for (const auto& c : sc.cohorts)
            cohorts.push_back({{"cohort_id", c.cohort_id},
                               {"latitude_deg", c.latitude_deg},
                               {"longitude_deg", c.longitude_deg},
                               {"population", c.population},
                               {"min_elevation_deg", c.min_elevation_deg},
                               {"mmpp",
                                {{"rate_low_per_s", c.mmpp.rate_low_per_s},
                                 {"rate_high_per_s", c.mmpp.rate_high_per_s},
                                 {"switch_low_to_high_per_s", c.mmpp.switch_low_to_high_per_s},
                                 {"switch_high_to_low_per_s", c.mmpp.switch_high_to_low_per_s}}}});
        resolved["cohorts"] = cohorts;
    }
    {
        const auto& w = sc.workloads;
        json jd = {{"enabled", w.dhts.enabled},
                   {"input_bits", w.dhts.input_bits},
                   {"output_bits", w.dhts.output_bits},
                   {"compute_demand_units", w.dhts.compute_demand_units},
                   {"replication_k", w.dhts.replication_k},
                   {"results_to_ground", w.dhts.results_to_ground}};
        if (w.dhts.deadline_offset_s) jd["deadline_offset_s"] = *w.dhts.deadline_offset_s;
        resolved["workloads"] = {
            {"dhts", jd},
            {"eo",
             {{"enabled", w.eo.enabled},
              {"start_s", w.eo.start_s},
              {"imaging_period_s", w.eo.imaging_period_s},
              {"input_bits", w.eo.input_bits},
              {"compression_ratio", w.eo.compression_ratio},
              {"compute_units_per_bit", w.eo.compute_units_per_bit}}},
            {"bulk_training",
             {{"enabled", w.bulk_training.enabled},
              {"period_s", w.bulk_training.period_s},
              {"start_s", w.bulk_training.start_s},
              {"input_bits", w.bulk_training.input_bits},
              {"output_bits", w.bulk_training.output_bits},
              {"compute_demand_units", w.bulk_training.compute_demand_units},
              {"replication_k", w.bulk_training.replication_k},
              {"origin_station", w.bulk_training.origin_station}}},
            {"housekeeping",
             {{"period_s", w.housekeeping.period_s},
              {"compute_demand_units", w.housekeeping.compute_demand_units}}},
            {"handover_signaling_demand_units", w.handover_signaling_demand_units}};
    }
    {
        json specs;
        for (const auto& [layer, spec] : sc.node_specs)
            specs[layer_name(layer)] = {{"compute_capacity_units_s", spec.compute_capacity_units_s},
                                        {"storage_bits", spec.storage_bits},
                                        {"isl_terminals", spec.isl_terminals},
                                        {"power", power_to_json(spec.power)},
                                        {"thermal", thermal_to_json(spec.thermal)}};
        resolved["node_specs"] = specs;
    }
    resolved["zone_policy"] = {
        {"r_green", sc.zone_policy.r_green},
        {"r_red", sc.zone_policy.r_red},
        {"forecast_margin_s", sc.zone_policy.forecast_margin_s},
        {"thermal_gate", sc.zone_policy.thermal_gate},
        {"lightweight_demand_fraction", sc.zone_policy.lightweight_demand_fraction}};
    resolved["cost_weights"] = {{"w_latency", sc.cost_weights.w_latency},
                                {"w_energy", sc.cost_weights.w_energy},
                                {"w_risk", sc.cost_weights.w_risk}};
    resolved["outage_model"] = {{"outage_rate_per_s", sc.outage_model.outage_rate_per_s},
                                {"reacquisition_mean_s", sc.outage_model.reacquisition_mean_s}};
    {
        const auto& oc = sc.orchestrator;
        resolved["orchestrator"] = {{"geo_epoch_s", oc.geo_epoch_s},
                                    {"meo_epoch_s", oc.meo_epoch_s},
                                    {"table_validity_s", oc.table_validity_s},
                                    {"planning_horizon_s", oc.planning_horizon_s},
                                    {"load_balance_threshold", oc.load_balance_threshold},
                                    {"sla_weight_multiplier", oc.sla_weight_multiplier},
                                    {"sla_window_s", oc.sla_window_s},
                                    {"watchdog_dose_fraction", oc.watchdog_dose_fraction},
                                    {"watchdog_risk_threshold", oc.watchdog_risk_threshold},
                                    {"watchdog_enabled", oc.watchdog_enabled},
                                    {"replication_risk_threshold", oc.replication_risk_threshold},
                                    {"checkpoint_interval_s", oc.checkpoint_interval_s},
                                    {"checkpoint_size_fraction", oc.checkpoint_size_fraction},
                                    {"control_bundle_bits", oc.control_bundle_bits},
                                    {"table_probe_bits", oc.table_probe_bits},
                                    {"local_retry_s", oc.local_retry_s},
                                    {"uplink_admission_per_s", oc.uplink_admission_per_s},
                                    {"max_route_hops", oc.max_route_hops},
                                    {"max_concurrent_tasks", oc.max_concurrent_tasks}};
    }
    {
        json targets = json::array();
        for (const auto& [cls, target] : sc.sla.targets)
            targets.push_back({{"class", task_class_name(cls)},
                               {"quantile", target.quantile},
                               {"latency_bound_s", target.latency_bound_s}});
        resolved["sla"] = {{"targets", targets}, {"max_miss_fraction", sc.sla.max_miss_fraction}};
    }
    {
        const auto& rad = sc.radiation;
        json overrides = json::array();
        for (const auto& ov : rad.overrides) {
            json je = {{"node_id", ov.node_id}};
            if (ov.initial_tid_krad) je["initial_tid_krad"] = *ov.initial_tid_krad;
            if (ov.dose_rate_krad_per_year)
                je["dose_rate_krad_per_year"] = *ov.dose_rate_krad_per_year;
            if (ov.seu_rate_per_s) je["seu_rate_per_s"] = *ov.seu_rate_per_s;
            if (ov.tid_tolerance_krad) je["tid_tolerance_krad"] = *ov.tid_tolerance_krad;
            overrides.push_back(je);
        }
        resolved["radiation"] = {{"dose_rate_krad_per_year", rad.dose_rate_krad_per_year},
                                 {"seu_rate_per_s", rad.seu_rate_per_s},
                                 {"tid_tolerance_min_krad", rad.tid_tolerance_min_krad},
                                 {"tid_tolerance_max_krad", rad.tid_tolerance_max_krad},
                                 {"initial_tid_krad", rad.initial_tid_krad},
                                 {"k_seu", rad.risk.k_seu},
                                 {"k_tid_per_s", rad.risk.k_tid_per_s},
                                 {"overrides", overrides}};
    }
    {
        const auto& lk = sc.links;
        json jl = {{"isl_rate_bps", lk.isl_rate_bps},
                   {"feeder_rate_bps", lk.feeder_rate_bps},
                   {"access_rate_bps", lk.access_rate_bps},
                   {"lunar_rate_bps", lk.lunar_rate_bps},
                   {"ground_capacity_units_s", lk.ground_capacity_units_s},
                   {"isl_topology",
                    lk.topology == IslTopology::RingCross ? "ring_cross" : "full_mesh"}};
        if (lk.feeder_blackout)
            jl["feeder_blackout"] = {{"start_s", lk.feeder_blackout->first},
                                     {"end_s", lk.feeder_blackout->second}};
        resolved["links"] = jl;
    }
    resolved["sim"] = {{"physics_step_s", sc.sim.physics_step_s},
                       {"slot_s", sc.sim.slot_s},
                       {"serving_epoch_s", sc.sim.serving_epoch_s},
                       {"energy_sample_s", sc.sim.energy_sample_s},
                       {"contact_sample_step_s", sc.sim.contact_sample_step_s}};

    sc.resolved_json = resolved.dump(2);
    return sc;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string override_scenario_key(const std::string& json_text, const std::string& dotted_key,
                                  const std::string& value) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario: JSON parse error: ") + e.what());
    }

    json* cur = &root;
    std::istringstream keys(dotted_key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(keys, part, '.')) parts.push_back(part);
    if (parts.empty()) throw ConfigError("override: empty key");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) cur = &(*cur)[parts[i]];

    // parse the value as JSON when possible, else keep it as a string
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;
    }
    (*cur)[parts.back()] = parsed;
    return root.dump(2);
}

}  // namespace sbdc
