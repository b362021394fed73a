#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "nmdtsa/model.hpp"
#include "nmdtsa/nmd.hpp"
#include "nmdtsa/poly_field.hpp"
#include "nmdtsa/trajectory.hpp"

namespace nmdtsa {

inline constexpr double kOverflowGuard = 1e8;

// Classical RK4 on any scalar type. rhs(x, dx) writes dx. Samples every
// step; stops after the first sample whose max-norm exceeds the guard or is
// not finite. Returns the sample list and whether it stopped early.
template <class V, class F>
std::pair<std::vector<std::vector<V>>, bool> rk4_samples(F&& rhs, std::vector<V> x, double step, int steps) {
    const std::size_t n = x.size();
    std::vector<std::vector<V>> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    out.push_back(x);
    std::vector<V> k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (int s = 0; s < steps; ++s) {
        rhs(std::span<const V>(x), std::span<V>(k1));
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + (0.5 * step) * k1[i];
        rhs(std::span<const V>(tmp), std::span<V>(k2));
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + (0.5 * step) * k2[i];
        rhs(std::span<const V>(tmp), std::span<V>(k3));
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + step * k3[i];
        rhs(std::span<const V>(tmp), std::span<V>(k4));
        double norm = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += (step / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            const double a = std::abs(x[i]);
            finite = finite && std::isfinite(a);
            norm = std::max(norm, a);
        }
        if (!finite) return {std::move(out), true};
        out.push_back(x);
        if (norm > kOverflowGuard) return {std::move(out), true};
    }
    return {std::move(out), false};
}

using RealRhs = std::function<void(std::span<const double>, std::span<double>)>;

// Fixed-step RK4 from x0 over [t0, t0 + horizon]. The step count is
// ceil(horizon/step - 1e-9); the step is shortened uniformly so the grid ends
// exactly at the horizon.
Trajectory integrate(const RealRhs& rhs, const Eigen::VectorXd& x0, double step, double horizon, double t0 = 0.0);
Trajectory integrate(const ClassicalSystem& sys, const Eigen::VectorXd& x0, double step, double horizon,
                     double t0 = 0.0);
Trajectory integrate(const RealField& f, const Eigen::VectorXd& x0, double step, double horizon);
Trajectory integrate(const RealOscillator& osc, double w1, double w2, double step, double horizon);

// Complex fields (conjugate-paired or not) integrated in complex arithmetic.
std::vector<Eigen::VectorXcd> integrate(const ComplexField& f, const Eigen::VectorXcd& z0, double step,
                                        double horizon);

int step_count(double horizon, double step);

struct ContingencyRun {
    EquilibriumResult prefault_sep;
    EquilibriumResult postfault_sep;
    Trajectory faulton;    // absolute Delta
    Trajectory postfault;  // Delta minus [delta*; 0] of the post-fault system
};

ContingencyRun run_contingency_full(const Scenario& scn);
// Post-fault segment, shifted so the post-fault SEP is the origin.
Trajectory run_contingency(const Scenario& scn);

}  // namespace nmdtsa
