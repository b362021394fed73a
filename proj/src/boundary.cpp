#include "nmdtsa/boundary.hpp"

#include "nmdtsa/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nmdtsa {

using json = nlohmann::json;

std::string to_string(BoundaryMethod m) {
    switch (m) {
        case BoundaryMethod::sim_search: return "sim_search";
        case BoundaryMethod::first_integral: return "first_integral";
        case BoundaryMethod::zubov: return "zubov";
    }
    return "unknown";
}

BoundaryMethod boundary_method_from_string(const std::string& s) {
    if (s == "sim" || s == "sim_search") return BoundaryMethod::sim_search;
    if (s == "fi" || s == "first_integral") return BoundaryMethod::first_integral;
    if (s == "zubov") return BoundaryMethod::zubov;
    throw std::invalid_argument("unknown boundary method '" + s + "' (expected sim, fi or zubov)");
}

std::string to_string(Region r) {
    switch (r) {
        case Region::inside: return "inside";
        case Region::outside: return "outside";
        case Region::indeterminate: return "indeterminate";
    }
    return "unknown";
}

void SearchConfig::validate() const {
    if (M < 8) throw std::invalid_argument("search: ray count M must be at least 8");
    if (!(eps > 0.0) || !(s0 > eps)) throw std::invalid_argument("search: need s0 > eps > 0");
    if (!(horizon > 0.0) || !(step > 0.0)) throw std::invalid_argument("search: horizon and step must be positive");
    if (!(instability_gap > 0.0)) throw std::invalid_argument("search: instability gap must be positive");
}

double simulate_w2_gap(const RealOscillator& osc, double w1, double w2, double step, double horizon,
                       double stop_gap) {
    const int n = step_count(horizon, step);
    const double h = n ? horizon / n : step;
    double lo = w2, hi = w2;
    auto f = [&osc](double a, double b, double& da, double& db) { osc.rhs(a, b, da, db); };
    for (int s = 0; s < n; ++s) {
        double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
        f(w1, w2, k1a, k1b);
        f(w1 + 0.5 * h * k1a, w2 + 0.5 * h * k1b, k2a, k2b);
        f(w1 + 0.5 * h * k2a, w2 + 0.5 * h * k2b, k3a, k3b);
        f(w1 + h * k3a, w2 + h * k3b, k4a, k4b);
        w1 += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
        w2 += h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
        if (!std::isfinite(w1) || !std::isfinite(w2) || std::max(std::abs(w1), std::abs(w2)) > kOverflowGuard)
            return std::numeric_limits<double>::infinity();
        lo = std::min(lo, w2);
        hi = std::max(hi, w2);
        if (hi - lo > stop_gap) return hi - lo;
        // Settled at the origin: later excursions are negligible.
        if (std::abs(w1) + std::abs(w2) < 1e-10) break;
    }
    return hi - lo;
}

BoundaryEstimate search_boundary_sim(const RealOscillator& osc, const SearchConfig& cfg) {
    cfg.validate();
    BoundaryEstimate out;
    out.method = BoundaryMethod::sim_search;
    out.polyline.resize(static_cast<std::size_t>(cfg.M));
    std::vector<int> unbounded;
    for (int j = 0; j < cfg.M; ++j) {
        const double ang = 360.0 * j / cfg.M;
        const double th = ang * std::numbers::pi / 180.0;
        const double c = std::cos(th), s_ = std::sin(th);
        double s = cfg.s0, r = cfg.s0;
        bool bounded = true;
        for (;;) {
            if (r > cfg.radius_cap) {
                bounded = false;
                r = cfg.radius_cap;
                break;
            }
            if (s < cfg.eps) break;
            const double gap = simulate_w2_gap(osc, r * c, r * s_, cfg.step, cfg.horizon, cfg.instability_gap);
            if (gap > cfg.instability_gap) {
                r -= s;
                s /= 2.0;
            }
            r += s;
        }
        auto& p = out.polyline[static_cast<std::size_t>(j)];
        p = {ang, r * c, r * s_, r, bounded};
        if (!bounded) unbounded.push_back(j);
    }
    out.meta = {{"M", cfg.M},
                {"s0", cfg.s0},
                {"eps", cfg.eps},
                {"horizon", cfg.horizon},
                {"step", cfg.step},
                {"instability_gap", cfg.instability_gap},
                {"radius_cap", cfg.radius_cap},
                {"unbounded_rays", unbounded}};
    if (!unbounded.empty()) out.meta["warning"] = "some rays are unbounded in this direction up to the radius cap";
    return out;
}

std::vector<BoundaryPoint> level_set_polyline(const BiPoly& V, double c, const LevelSetConfig& cfg) {
    std::vector<BoundaryPoint> out(static_cast<std::size_t>(cfg.M));
    const double target = c * (1.0 - 1e-9);
    const double ratio = 1.005;
    for (int j = 0; j < cfg.M; ++j) {
        const double ang = 360.0 * j / cfg.M;
        const double th = ang * std::numbers::pi / 180.0;
        const double cx = std::cos(th), cy = std::sin(th);
        auto g = [&](double r) { return V(r * cx, r * cy) - target; };
        double prev = 0.0, prev2 = 0.0;
        double g_prev = -std::numeric_limits<double>::infinity(), g_prev2 = g_prev;
        double r = std::min(1e-4, cfg.radius_cap);
        bool found = false;
        for (;;) {
            const double gr = g(r);
            if (gr >= 0.0) {
                found = true;
                break;
            }
            // A level that only touches the ray (at a UEP) can fall between
            // two march points: maximise g over the bracketing interval.
            if (g_prev > g_prev2 && g_prev > gr) {
                double a = prev2, b = r;
                const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
                for (int it = 0; it < 100 && b - a > 1e-13 * b; ++it) {
                    const double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
                    if (g(x1) < g(x2))
                        a = x1;
                    else
                        b = x2;
                }
                const double peak = 0.5 * (a + b);
                if (g(peak) >= 0.0) {
                    prev = prev2;
                    r = peak;
                    found = true;
                    break;
                }
            }
            if (r >= cfg.radius_cap) break;
            prev2 = prev;
            g_prev2 = g_prev;
            prev = r;
            g_prev = gr;
            r = std::min(r * ratio, cfg.radius_cap);
        }
        auto& p = out[static_cast<std::size_t>(j)];
        if (!found) {
            p = {ang, cfg.radius_cap * cx, cfg.radius_cap * cy, cfg.radius_cap, false};
            continue;
        }
        double lo = prev, hi = r;
        while (hi - lo > 1e-10 * std::max(1.0, hi)) {
            const double mid = 0.5 * (lo + hi);
            (g(mid) >= 0.0 ? hi : lo) = mid;
        }
        p = {ang, hi * cx, hi * cy, hi, true};
    }
    return out;
}

BiPoly first_integral(const RealOscillator& osc) {
    const int k = osc.row1.degree();
    BiPoly v(k + 1);
    v.set(2, 0, 0.5);
    for (int l = 1; l <= k; ++l)
        if (osc.v(0, l) != 0.0) v.set(0, l + 1, -osc.v(0, l) / (l + 1));
    return v;
}

std::vector<UepInfo> first_integral_ueps(const RealOscillator& osc) {
    const int k = osc.row1.degree();
    // p(x) = sum_{l>=1} v_0l x^(l-1); nonzero roots of the reduced force.
    std::vector<double> c;
    for (int l = 1; l <= k; ++l) c.push_back(osc.v(0, l));
    while (!c.empty() && c.back() == 0.0) c.pop_back();
    std::vector<UepInfo> out;
    const int deg = static_cast<int>(c.size()) - 1;
    if (deg < 1) return out;
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[static_cast<std::size_t>(i)] / c.back();
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    auto p = [&](double x, double& dp) {
        double v = 0.0;
        dp = 0.0;
        for (int i = deg; i >= 0; --i) {
            dp = dp * x + v;
            v = v * x + c[static_cast<std::size_t>(i)];
        }
        return v;
    };
    const BiPoly V = first_integral(osc);
    double best_pos = std::numeric_limits<double>::infinity(), best_neg = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < deg; ++i) {
        const cplx z = es.eigenvalues()(i);
        if (std::abs(z.imag()) > 1e-7 * std::max(1.0, std::abs(z.real()))) continue;
        double x = z.real();
        for (int it = 0; it < 20; ++it) {
            double dp;
            const double v = p(x, dp);
            if (dp == 0.0) break;
            const double dx = v / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
        }
        if (std::abs(x) < 1e-12) continue;
        if (x > 0) best_pos = std::min(best_pos, x);
        if (x < 0) best_neg = std::max(best_neg, x);
    }
    if (std::isfinite(best_pos)) out.push_back({best_pos, V(0.0, best_pos)});
    if (std::isfinite(best_neg)) out.push_back({best_neg, V(0.0, best_neg)});
    return out;
}

namespace {

std::vector<BoundaryPoint> unbounded_polyline(int M, double cap) {
    std::vector<BoundaryPoint> out;
    for (int j = 0; j < M; ++j) {
        const double ang = 360.0 * j / M, th = ang * std::numbers::pi / 180.0;
        out.push_back({ang, cap * std::cos(th), cap * std::sin(th), cap, false});
    }
    return out;
}

}  // namespace

BoundaryEstimate first_integral_boundary(const RealOscillator& osc, const LevelSetConfig& cfg) {
    BoundaryEstimate out;
    out.method = BoundaryMethod::first_integral;
    out.level = first_integral(osc);
    const auto ueps = first_integral_ueps(osc);
    json jueps = json::array();
    for (const auto& u : ueps) jueps.push_back({{"w2", u.w2}, {"energy", u.energy}});
    out.meta = {{"ueps", jueps}, {"M", cfg.M}, {"radius_cap", cfg.radius_cap}};
    if (ueps.empty()) {
        out.meta["warning"] = "no finite UEP: boundary unbounded";
        out.polyline = unbounded_polyline(cfg.M, cfg.radius_cap);
        return out;
    }
    double crit = ueps.front().energy;
    for (const auto& u : ueps) crit = std::min(crit, u.energy);
    out.critical = crit;
    out.polyline = level_set_polyline(*out.level, crit, cfg);
    return out;
}

BiPoly quadratic_phi(double c1, double c2) {
    if (c1 < 0.0 || c2 < 0.0) throw std::invalid_argument("phi coefficients must be non-negative");
    BiPoly p(2);
    p.set(2, 0, c1);
    p.set(0, 2, c2);
    return p;
}

BiPoly zubov_series(const RealOscillator& osc, const BiPoly& phi, int L) {
    if (L < 2) throw std::invalid_argument("zubov_series: L must be at least 2");
    if (!(osc.lambda.real() < 0.0) || !(osc.v(1, 0) < 0.0))
        throw std::invalid_argument("Zubov requires damped oscillator (Re lambda < 0)");
    for (auto [j, l, c] : phi.terms())
        if (j + l != 2) throw std::invalid_argument("zubov_series: phi must be a quadratic form");
    const double a11 = osc.row1.coeff(1, 0), a12 = osc.row1.coeff(0, 1);
    const double a21 = osc.row2.coeff(1, 0), a22 = osc.row2.coeff(0, 1);
    const int k = osc.row1.degree();

    // Homogeneous parts of the nonlinear field, f_d for d = 2..k.
    std::vector<BiPoly> f1(static_cast<std::size_t>(k) + 1), f2(static_cast<std::size_t>(k) + 1);
    for (int d = 2; d <= k; ++d) {
        f1[static_cast<std::size_t>(d)] = osc.row1.homogeneous(d);
        f2[static_cast<std::size_t>(d)] = osc.row2.homogeneous(d);
    }
    std::vector<BiPoly> Vd(static_cast<std::size_t>(L) + 1, BiPoly(L));
    std::vector<BiPoly> gx(static_cast<std::size_t>(L) + 1), gy(static_cast<std::size_t>(L) + 1);
    BiPoly V(L);
    for (int d = 2; d <= L; ++d) {
        // Basis w1^j w2^(d-j), index j.
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d + 1, d + 1);
        for (int j = 0; j <= d; ++j) {
            const int l = d - j;
            A(j, j) += j * a11 + l * a22;
            if (j > 0) A(j - 1, j) += j * a12;   // w1^(j-1) w2^(l+1)
            if (l > 0) A(j + 1, j) += l * a21;   // w1^(j+1) w2^(l-1)
        }
        BiPoly rhs(L);
        if (d == 2) rhs -= phi;
        for (int q = 2; q <= d - 1; ++q) {
            const int e = d + 1 - q;
            if (e > k) continue;
            rhs -= multiply(gx[static_cast<std::size_t>(q)], f1[static_cast<std::size_t>(e)], d).homogeneous(d);
            rhs -= multiply(gy[static_cast<std::size_t>(q)], f2[static_cast<std::size_t>(e)], d).homogeneous(d);
        }
        if (d - 2 >= 2) rhs += multiply(phi, Vd[static_cast<std::size_t>(d - 2)], d).homogeneous(d);
        Eigen::VectorXd b(d + 1);
        for (int j = 0; j <= d; ++j) b(j) = rhs.coeff(j, d - j);
        // Operator eigenvalues are a*lambda + b*conj(lambda) with a + b = d, so
        // damping alone keeps it invertible; only conditioning can hurt.
        const Eigen::VectorXd x = A.partialPivLu().solve(b);
        if (!x.allFinite() || (A * x - b).norm() > 1e-9 * std::max(1.0, b.norm()))
            throw std::runtime_error("zubov_series: ill-conditioned solve at degree " + std::to_string(d));
        BiPoly vd(L);
        for (int j = 0; j <= d; ++j) vd.set(j, d - j, x(j));
        Vd[static_cast<std::size_t>(d)] = vd;
        gx[static_cast<std::size_t>(d)] = vd.dx();
        gy[static_cast<std::size_t>(d)] = vd.dy();
        V += vd;
    }
    return V;
}

BiPoly lie_derivative(const BiPoly& V, const RealOscillator& osc) {
    return multiply(V.dx(), osc.row1) + multiply(V.dy(), osc.row2);
}

ZubovCritical zubov_critical_value(const BiPoly& V, const RealOscillator& osc, const ZubovConfig& cfg) {
    const BiPoly vdot = lie_derivative(V, osc);
    ZubovCritical out;
    const int n = std::max(16, cfg.radial_samples);
    const double ratio = std::pow(cfg.sweep_cap / cfg.guard_radius, 1.0 / (n - 1));
    std::vector<double> radii(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) radii[static_cast<std::size_t>(i)] = cfg.guard_radius * std::pow(ratio, i);
    radii.back() = cfg.sweep_cap;
    for (int j = 0; j < cfg.sweep_rays; ++j) {
        const double th = 2.0 * std::numbers::pi * j / cfg.sweep_rays;
        const double cx = std::cos(th), cy = std::sin(th);
        auto g = [&](double r) { return vdot(r * cx, r * cy); };
        double r0 = radii[0], g0 = g(r0);
        for (int i = 1; i < n; ++i) {
            const double r1 = radii[static_cast<std::size_t>(i)], g1 = g(r1);
            if ((g0 < 0.0) != (g1 < 0.0)) {
                double lo = r0, hi = r1, glo = g0;
                for (int it = 0; it < 60 && hi - lo > 1e-13 * hi; ++it) {
                    const double mid = 0.5 * (lo + hi), gm = g(mid);
                    if ((gm < 0.0) == (glo < 0.0)) {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                }
                const double r = 0.5 * (lo + hi);
                const double v = V(r * cx, r * cy);
                ++out.phi_points;
                if (!out.value || v < *out.value) {
                    out.value = v;
                    out.w1 = r * cx;
                    out.w2 = r * cy;
                }
            }
            r0 = r1;
            g0 = g1;
        }
    }
    return out;
}

BoundaryEstimate zubov_critical_level(const BiPoly& V, const RealOscillator& osc, const ZubovConfig& cfg,
                                      const LevelSetConfig& ls) {
    BoundaryEstimate out;
    out.method = BoundaryMethod::zubov;
    out.level = V;
    const auto crit = zubov_critical_value(V, osc, cfg);
    out.meta = {{"L", cfg.L},
                {"phi", {cfg.c1, cfg.c2}},
                {"guard_radius", cfg.guard_radius},
                {"sweep_cap", cfg.sweep_cap},
                {"sweep_rays", cfg.sweep_rays},
                {"phi_points", crit.phi_points},
                {"M", ls.M},
                {"radius_cap", ls.radius_cap}};
    if (!crit.value || !(*crit.value > 0.0)) {
        out.meta["warning"] = "no critical level found: boundary unbounded up to the sweep cap";
        out.polyline = unbounded_polyline(ls.M, ls.radius_cap);
        return out;
    }
    out.critical = *crit.value;
    out.meta["argmin"] = {crit.w1, crit.w2};
    out.polyline = level_set_polyline(V, *out.critical, ls);
    return out;
}

BoundaryEstimate zubov_boundary(const RealOscillator& osc, const ZubovConfig& cfg, const LevelSetConfig& ls) {
    const BiPoly V = zubov_series(osc, quadratic_phi(cfg.c1, cfg.c2), cfg.L);
    return zubov_critical_level(V, osc, cfg, ls);
}

namespace {

// Boundary radius at the angle of w by linear interpolation between the two
// neighbouring rays; nullopt when either neighbour is unbounded.
struct RadialLookup {
    std::optional<double> radius;
    double bounded_min = std::numeric_limits<double>::infinity();
    double cap = 0.0;
};

RadialLookup radial_lookup(const std::vector<BoundaryPoint>& poly, double w1, double w2) {
    RadialLookup out;
    if (poly.empty()) return out;
    double ang = std::atan2(w2, w1) * 180.0 / std::numbers::pi;
    if (ang < 0) ang += 360.0;
    // Rays are sorted by angle; find the bracketing pair with wrap-around.
    std::size_t hi = 0;
    while (hi < poly.size() && poly[hi].angle_deg <= ang) ++hi;
    const std::size_t lo = (hi == 0) ? poly.size() - 1 : hi - 1;
    const std::size_t up = hi % poly.size();
    double a0 = poly[lo].angle_deg, a1 = poly[up].angle_deg;
    if (a1 <= a0) a1 += 360.0;
    double a = ang;
    if (a < a0) a += 360.0;
    const double f = a1 > a0 ? (a - a0) / (a1 - a0) : 0.0;
    const auto& p0 = poly[lo];
    const auto& p1 = poly[up];
    if (p0.bounded) out.bounded_min = std::min(out.bounded_min, p0.radius);
    if (p1.bounded) out.bounded_min = std::min(out.bounded_min, p1.radius);
    out.cap = std::max(p0.radius, p1.radius);
    if (p0.bounded && p1.bounded) out.radius = (1.0 - f) * p0.radius + f * p1.radius;
    return out;
}

}  // namespace

std::optional<double> state_margin(const BoundaryEstimate& b, double w1, double w2) {
    const double r = std::hypot(w1, w2);
    const auto look = radial_lookup(b.polyline, w1, w2);
    double radial = 0.0;
    bool radial_known = false;
    if (look.radius) {
        radial = *look.radius > 0 ? r / *look.radius : std::numeric_limits<double>::infinity();
        radial_known = true;
    } else if (std::isfinite(look.bounded_min) && r >= look.bounded_min) {
        radial = r / look.bounded_min;
        radial_known = true;
    }
    if (b.level_based()) {
        const auto eff = b.effective_critical();
        if (!eff) return std::nullopt;
        const double lv = std::max(0.0, (*b.level)(w1, w2) / *eff);
        return radial_known ? std::max(lv, radial) : lv;
    }
    if (!radial_known) return std::nullopt;
    return radial;
}

Region classify_state(const BoundaryEstimate& b, double w1, double w2) {
    if (!std::isfinite(w1) || !std::isfinite(w2)) return Region::outside;
    const double r = std::hypot(w1, w2);
    if (r == 0.0) return (!b.level_based() || b.effective_critical().value_or(1.0) > 0.0) ? Region::inside
                                                                                          : Region::outside;
    const auto look = radial_lookup(b.polyline, w1, w2);
    if (b.level_based()) {
        const auto eff = b.effective_critical();
        if (!eff) return r < look.cap ? Region::inside : Region::indeterminate;
        if ((*b.level)(w1, w2) >= *eff) return Region::outside;
        if (look.radius) return r <= *look.radius * (1.0 + 1e-9) ? Region::inside : Region::outside;
        if (std::isfinite(look.bounded_min) && r > look.bounded_min) return Region::indeterminate;
        return Region::inside;
    }
    if (look.radius) return r < *look.radius ? Region::inside : Region::outside;
    if (std::isfinite(look.bounded_min)) return r < look.bounded_min ? Region::inside : Region::indeterminate;
    return r < look.cap ? Region::inside : Region::indeterminate;
}

BoundaryEstimate shrink(const BoundaryEstimate& b, double ratio, bool radial_for_sim, const LevelSetConfig& ls) {
    if (!(ratio > 0.0) || ratio > 1.0) throw std::invalid_argument("shrink: ratio must lie in (0, 1]");
    BoundaryEstimate out = b;
    out.shrink_ratio = b.shrink_ratio * ratio;
    out.meta["shrink_ratio"] = out.shrink_ratio;
    if (b.level_based()) {
        if (out.critical) {
            LevelSetConfig cfg = ls;
            cfg.M = static_cast<int>(b.polyline.size());
            if (b.meta.contains("radius_cap")) cfg.radius_cap = b.meta["radius_cap"].get<double>();
            out.polyline = level_set_polyline(*out.level, *out.effective_critical(), cfg);
        }
    } else if (radial_for_sim) {
        const double f = std::sqrt(ratio);
        out.radial_shrink = true;
        out.meta["radial_shrink"] = "sim-search polyline scaled by sqrt(ratio) (extension)";
        for (auto& p : out.polyline)
            if (p.bounded) {
                p.radius *= f;
                p.w1 *= f;
                p.w2 *= f;
            }
    } else {
        out.shrink_ratio = b.shrink_ratio;
        out.meta["shrink_ratio"] = out.shrink_ratio;
        out.meta["shrink_note"] = "shrink not applied to sim-search boundary";
    }
    return out;
}

json bipoly_to_json(const BiPoly& p) {
    json terms = json::array();
    for (auto [j, l, c] : p.terms()) terms.push_back({j, l, c});
    return {{"degree", p.degree()}, {"terms", terms}};
}

BiPoly bipoly_from_json(const json& j) {
    BiPoly p(j.at("degree").get<int>());
    for (const auto& t : j.at("terms")) p.set(t[0].get<int>(), t[1].get<int>(), t[2].get<double>());
    return p;
}

void write_boundary_csv(std::ostream& os, const BoundaryEstimate& b) {
    json meta = b.meta;
    meta["method"] = to_string(b.method);
    meta["critical"] = b.critical ? json(*b.critical) : json(nullptr);
    meta["shrink_ratio"] = b.shrink_ratio;
    meta["radial_shrink"] = b.radial_shrink;
    if (b.level) meta["level"] = bipoly_to_json(*b.level);
    json unb = json::array();
    for (std::size_t i = 0; i < b.polyline.size(); ++i)
        if (!b.polyline[i].bounded) unb.push_back(i);
    meta["unbounded_rays"] = unb;
    os << "# meta " << meta.dump() << '\n';
    os << "angle_deg, w1, w2, level_value\n" << std::setprecision(17);
    for (const auto& p : b.polyline) {
        os << p.angle_deg << ", " << p.w1 << ", " << p.w2 << ", ";
        if (b.level)
            os << (*b.level)(p.w1, p.w2);
        else
            os << "nan";
        os << '\n';
    }
}

BoundaryEstimate read_boundary_csv(std::istream& is) {
    BoundaryEstimate b;
    std::string line;
    std::vector<int> unbounded;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("# meta ", 0) == 0) {
            b.meta = json::parse(line.substr(7));
            b.method = boundary_method_from_string(b.meta.at("method").get<std::string>());
            if (!b.meta.at("critical").is_null()) b.critical = b.meta["critical"].get<double>();
            b.shrink_ratio = b.meta.value("shrink_ratio", 1.0);
            b.radial_shrink = b.meta.value("radial_shrink", false);
            if (b.meta.contains("level")) b.level = bipoly_from_json(b.meta["level"]);
            unbounded = b.meta.value("unbounded_rays", std::vector<int>{});
            continue;
        }
        if (line[0] == '#' || line[0] == 'a') continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
        if (v.size() != 4) throw std::runtime_error("boundary csv: expected 4 columns");
        b.polyline.push_back({v[0], v[1], v[2], std::hypot(v[1], v[2]), true});
    }
    for (int i : unbounded)
        if (i >= 0 && i < static_cast<int>(b.polyline.size())) b.polyline[static_cast<std::size_t>(i)].bounded = false;
    return b;
}

}  // namespace nmdtsa
