#pragma once

#include <optional>
#include <vector>

#include "vec3.hpp"

namespace sbdc {

enum class Layer { Leo, Meo, Geo, Lunar, Ground };

const char* layer_name(Layer layer);
std::optional<Layer> layer_from_name(const std::string& name);

struct PhysicalConstants {
    double mu_earth_km3_s2 = 398600.4418;
    double earth_radius_km = 6371.0;
    double light_speed_km_s = 299792.458;
    double solar_constant_w_m2 = 1361.0;
    double stefan_boltzmann_w_m2_k4 = 5.670374419e-8;
    double sidereal_day_s = 86164.0905;
    double isl_grazing_altitude_km = 80.0;  // line-of-sight clearance margin
};

struct CircularOrbit {
    double altitude_km = 0.0;
    double inclination_deg = 0.0;
    double raan_deg = 0.0;
    double phase_deg = 0.0;  // angle along the orbit at epoch
    Layer layer = Layer::Leo;
};

// Validates invariants (altitude band per layer) and normalizes angles to [0, 360).
CircularOrbit make_circular_orbit(double altitude_km, double inclination_deg, double raan_deg,
                                  double phase_deg, Layer layer);

struct SatelliteState {
    Vec3 position_km;
    double time_s = 0.0;
};

struct GroundStation {
    double latitude_deg = 0.0;
    double longitude_deg = 0.0;
    double min_elevation_deg = 0.0;
};

struct VisibilityResult {
    bool visible = false;
    double elevation_deg = 0.0;
    double slant_range_km = 0.0;
};

struct IslVisibilityResult {
    bool visible = false;
    double range_km = 0.0;
};

struct ContactWindow {
    double start_s = 0.0;
    double end_s = 0.0;
};

double orbital_period_s(const CircularOrbit& orbit, const PhysicalConstants& pc = {});

SatelliteState propagate(const CircularOrbit& orbit, double t_s, const PhysicalConstants& pc = {});

// Earth-fixed point in the inertial frame; rotation at the sidereal rate unless disabled.
Vec3 ground_point_eci_km(double latitude_deg, double longitude_deg, double t_s,
                         bool earth_rotation, const PhysicalConstants& pc = {});

VisibilityResult visibility(const SatelliteState& sat, const GroundStation& gs, double t_s,
                            bool earth_rotation = true, const PhysicalConstants& pc = {});

// Non-overlapping, time-ordered windows; boundaries bisected to +/-0.1 s.
std::vector<ContactWindow> contact_windows(const CircularOrbit& orbit, const GroundStation& gs,
                                           double horizon_s, double step_s,
                                           bool earth_rotation = true,
                                           const PhysicalConstants& pc = {});

double propagation_delay_s(double slant_range_km, const PhysicalConstants& pc = {});

// Cylindrical Earth-shadow model, no penumbra.
bool in_eclipse(const SatelliteState& sat, const Vec3& sun_direction_unit,
                const PhysicalConstants& pc = {});

// Line of sight exists iff the segment a-b clears a sphere of radius
// R_E + grazing margin. Symmetric in its arguments.
IslVisibilityResult isl_visibility(const SatelliteState& a, const SatelliteState& b,
                                   const PhysicalConstants& pc = {});

}  // namespace sbdc
