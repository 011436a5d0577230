#include "orbits.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace sbdc {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;

double normalize_deg(double deg) {
    double d = std::fmod(deg, 360.0);
    if (d < 0.0) d += 360.0;
    return d;
}

}  // namespace

const char* layer_name(Layer layer) {
    switch (layer) {
        case Layer::Leo: return "LEO";
        case Layer::Meo: return "MEO";
        case Layer::Geo: return "GEO";
        case Layer::Lunar: return "Lunar";
        case Layer::Ground: return "Ground";
    }
    return "?";
}

std::optional<Layer> layer_from_name(const std::string& name) {
    if (name == "LEO") return Layer::Leo;
    if (name == "MEO") return Layer::Meo;
    if (name == "GEO") return Layer::Geo;
    if (name == "Lunar") return Layer::Lunar;
    if (name == "Ground") return Layer::Ground;
    return std::nullopt;
}

CircularOrbit make_circular_orbit(double altitude_km, double inclination_deg, double raan_deg,
                                  double phase_deg, Layer layer) {
    if (!(altitude_km > 0.0))
        throw ConfigError("orbit altitude_km must be > 0, got " + std::to_string(altitude_km));
    switch (layer) {
        case Layer::Leo:
            if (altitude_km < 300.0 || altitude_km > 2000.0)
                throw ConfigError("LEO altitude must lie in [300, 2000] km, got " +
                                  std::to_string(altitude_km));
            break;
        case Layer::Meo:
            if (altitude_km <= 2000.0 || altitude_km >= 35786.0)
                throw ConfigError("MEO altitude must lie in (2000, 35786) km, got " +
                                  std::to_string(altitude_km));
            break;
        case Layer::Geo:
            if (altitude_km != 35786.0)
                throw ConfigError("GEO altitude must be exactly 35786 km, got " +
                                  std::to_string(altitude_km));
            break;
        case Layer::Lunar:
            throw ConfigError("Lunar tier is a fixed-delay virtual node, not an orbit");
        case Layer::Ground:
            throw ConfigError("Ground nodes do not carry orbits");
    }
    return CircularOrbit{altitude_km, normalize_deg(inclination_deg), normalize_deg(raan_deg),
                         normalize_deg(phase_deg), layer};
}

double orbital_period_s(const CircularOrbit& orbit, const PhysicalConstants& pc) {
    const double r = pc.earth_radius_km + orbit.altitude_km;
    return 2.0 * kPi * std::sqrt(r * r * r / pc.mu_earth_km3_s2);
}

SatelliteState propagate(const CircularOrbit& orbit, double t_s, const PhysicalConstants& pc) {
    const double r = pc.earth_radius_km + orbit.altitude_km;
    const double n = 2.0 * kPi / orbital_period_s(orbit, pc);  // mean motion, rad/s
    const double theta = orbit.phase_deg * kDegToRad + n * t_s;

    // In-plane position, then rotate by inclination about x, then RAAN about z.
    const double ct = std::cos(theta), st = std::sin(theta);
    const double ci = std::cos(orbit.inclination_deg * kDegToRad);
    const double si = std::sin(orbit.inclination_deg * kDegToRad);
    const double co = std::cos(orbit.raan_deg * kDegToRad);
    const double so = std::sin(orbit.raan_deg * kDegToRad);

    const Vec3 in_plane{r * ct, r * st, 0.0};
    const Vec3 tilted{in_plane.x, ci * in_plane.y, si * in_plane.y};
    const Vec3 pos{co * tilted.x - so * tilted.y, so * tilted.x + co * tilted.y, tilted.z};
    return SatelliteState{pos, t_s};
}

Vec3 ground_point_eci_km(double latitude_deg, double longitude_deg, double t_s,
                         bool earth_rotation, const PhysicalConstants& pc) {
    const double lat = latitude_deg * kDegToRad;
    double lon = longitude_deg * kDegToRad;
    if (earth_rotation) lon += 2.0 * kPi * t_s / pc.sidereal_day_s;
    const double cl = std::cos(lat);
    return Vec3{pc.earth_radius_km * cl * std::cos(lon), pc.earth_radius_km * cl * std::sin(lon),
                pc.earth_radius_km * std::sin(lat)};
}

VisibilityResult visibility(const SatelliteState& sat, const GroundStation& gs, double t_s,
                            bool earth_rotation, const PhysicalConstants& pc) {
    const Vec3 gs_pos = ground_point_eci_km(gs.latitude_deg, gs.longitude_deg, t_s, earth_rotation, pc);
    const Vec3 range = sat.position_km - gs_pos;
    const double slant = norm(range);
    const Vec3 zenith = gs_pos / pc.earth_radius_km;
    // elevation = angle of the range vector above the local horizon
    const double sin_el = std::clamp(dot(range, zenith) / slant, -1.0, 1.0);
    const double elevation = std::asin(sin_el) * kRadToDeg;
    return VisibilityResult{elevation >= gs.min_elevation_deg, elevation, slant};
}

std::vector<ContactWindow> contact_windows(const CircularOrbit& orbit, const GroundStation& gs,
                                           double horizon_s, double step_s, bool earth_rotation,
                                           const PhysicalConstants& pc) {
    if (!(step_s > 0.0)) throw ConfigError("contact_windows: step_s must be > 0");
    if (!(horizon_s >= step_s)) throw ConfigError("contact_windows: horizon_s must be >= step_s");

    auto vis_at = [&](double t) {
        return visibility(propagate(orbit, t, pc), gs, t, earth_rotation, pc).visible;
    };
    // bisect a visibility transition inside (lo, hi) down to +/-0.05 s
    auto refine = [&](double lo, double hi, bool lo_vis) {
        while (hi - lo > 0.1) {
            const double mid = 0.5 * (lo + hi);
            if (vis_at(mid) == lo_vis)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    std::vector<ContactWindow> windows;
    bool prev = vis_at(0.0);
    double window_start = prev ? 0.0 : -1.0;
    double prev_t = 0.0;
    for (double t = step_s; t <= horizon_s + 0.5 * step_s; t += step_s) {
        const double tc = std::min(t, horizon_s);
        const bool cur = vis_at(tc);
        if (cur != prev) {
            const double edge = refine(prev_t, tc, prev);
            if (cur)
                window_start = edge;
            else
                windows.push_back({window_start, edge});
        }
        prev = cur;
        prev_t = tc;
        if (tc >= horizon_s) break;
    }
    if (prev) windows.push_back({window_start, horizon_s});
    return windows;
}

double propagation_delay_s(double slant_range_km, const PhysicalConstants& pc) {
    if (!(slant_range_km > 0.0)) throw ConfigError("propagation_delay: range must be > 0");
    return slant_range_km / pc.light_speed_km_s;
}

bool in_eclipse(const SatelliteState& sat, const Vec3& sun_direction_unit,
                const PhysicalConstants& pc) {
    const double along_sun = dot(sat.position_km, sun_direction_unit);
    if (along_sun >= 0.0) return false;  // sun side
    const Vec3 radial = sat.position_km - sun_direction_unit * along_sun;
    return norm(radial) < pc.earth_radius_km;
}

IslVisibilityResult isl_visibility(const SatelliteState& a, const SatelliteState& b,
                                   const PhysicalConstants& pc) {
    const Vec3 ab = b.position_km - a.position_km;
    const double len2 = dot(ab, ab);
    const double range = std::sqrt(len2);

    double min_dist;
    if (len2 == 0.0) {
        min_dist = norm(a.position_km);
    } else {
        // closest approach of the segment a-b to the Earth's center
        const double t = std::clamp(-dot(a.position_km, ab) / len2, 0.0, 1.0);
        min_dist = norm(a.position_km + ab * t);
    }
    const bool clear = min_dist >= pc.earth_radius_km + pc.isl_grazing_altitude_km;
    return IslVisibilityResult{clear, range};
}

}  // namespace sbdc
