#pragma once

#include <iosfwd>
#include <nlohmann/json.hpp>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nmdtsa/bipoly.hpp"
#include "nmdtsa/nmd.hpp"

namespace nmdtsa {

enum class BoundaryMethod { sim_search, first_integral, zubov };

std::string to_string(BoundaryMethod m);
// Accepts "sim", "sim_search", "fi", "first_integral", "zubov".
BoundaryMethod boundary_method_from_string(const std::string& s);

struct BoundaryPoint {
    double angle_deg = 0.0;
    double w1 = 0.0;
    double w2 = 0.0;
    double radius = 0.0;
    bool bounded = true;  // false: no boundary found up to the radius cap
};

struct SearchConfig {
    int M = 180;
    double s0 = 0.1;
    double horizon = 5.0;
    double eps = 0.01;
    double instability_gap = 750.0 * std::numbers::pi / 180.0;
    double step = 5e-4;
    double radius_cap = 1e3;

    void validate() const;
};

struct ZubovConfig {
    int L = 16;
    double c1 = 0.0002;  // phi = c1 w1^2 + c2 w2^2
    double c2 = 0.001;
    double guard_radius = 1e-3;
    double sweep_cap = 10.0;
    int sweep_rays = 720;
    int radial_samples = 2000;
};

struct LevelSetConfig {
    int M = 180;
    double radius_cap = 1e3;
};

struct BoundaryEstimate {
    BoundaryMethod method = BoundaryMethod::sim_search;
    std::optional<BiPoly> level;
    std::optional<double> critical;
    double shrink_ratio = 1.0;
    bool radial_shrink = false;  // sim-search polyline scaled by sqrt(ratio)
    std::vector<BoundaryPoint> polyline;
    nlohmann::json meta = nlohmann::json::object();

    bool level_based() const { return level.has_value(); }
    std::optional<double> effective_critical() const {
        if (!critical) return std::nullopt;
        return shrink_ratio * *critical;
    }
};

BoundaryEstimate search_boundary_sim(const RealOscillator& osc, const SearchConfig& cfg = {});

// Peak-to-peak excursion of w2 over the horizon from (w1, w2); stops early
// once the gap is exceeded. Divergence returns +inf.
double simulate_w2_gap(const RealOscillator& osc, double w1, double w2, double step, double horizon,
                       double stop_gap);

struct UepInfo {
    double w2 = 0.0;
    double energy = 0.0;
};

// Conservative reduced system: only v_0l kept. V = w1^2/2 - sum v_0l/(l+1) w2^(l+1).
BiPoly first_integral(const RealOscillator& osc);
std::vector<UepInfo> first_integral_ueps(const RealOscillator& osc);
BoundaryEstimate first_integral_boundary(const RealOscillator& osc, const LevelSetConfig& cfg = {});

BiPoly quadratic_phi(double c1, double c2);
BiPoly zubov_series(const RealOscillator& osc, const BiPoly& phi, int L);

struct ZubovCritical {
    std::optional<double> value;
    double w1 = 0.0, w2 = 0.0;     // location of the minimum on Phi
    std::size_t phi_points = 0;    // sign changes of dV/dt located
};
// min of V over {dV/dt = 0} outside the guard disk.
ZubovCritical zubov_critical_value(const BiPoly& V, const RealOscillator& osc, const ZubovConfig& cfg = {});
BoundaryEstimate zubov_critical_level(const BiPoly& V, const RealOscillator& osc, const ZubovConfig& cfg = {},
                                      const LevelSetConfig& ls = {});
BoundaryEstimate zubov_boundary(const RealOscillator& osc, const ZubovConfig& cfg = {}, const LevelSetConfig& ls = {});

// dV/dt of a level function along the oscillator (full product, no truncation).
BiPoly lie_derivative(const BiPoly& V, const RealOscillator& osc);

// Level set {V = c} sampled on M rays, innermost crossing per ray.
std::vector<BoundaryPoint> level_set_polyline(const BiPoly& V, double c, const LevelSetConfig& cfg);

enum class Region { inside, outside, indeterminate };
std::string to_string(Region r);

Region classify_state(const BoundaryEstimate& b, double w1, double w2);
// level/critical for level methods, |w|/radius for sim search; nullopt when
// the estimate has no finite extent at w.
std::optional<double> state_margin(const BoundaryEstimate& b, double w1, double w2);

// Effective critical value scaled by ratio in (0, 1]; level set re-sampled.
// With radial_for_sim, sim-search polylines shrink by sqrt(ratio).
BoundaryEstimate shrink(const BoundaryEstimate& b, double ratio, bool radial_for_sim = false,
                        const LevelSetConfig& ls = {});

void write_boundary_csv(std::ostream& os, const BoundaryEstimate& b);
BoundaryEstimate read_boundary_csv(std::istream& is);

nlohmann::json bipoly_to_json(const BiPoly& p);
BiPoly bipoly_from_json(const nlohmann::json& j);

}  // namespace nmdtsa
