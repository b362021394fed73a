#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nmdtsa/io.hpp"
#include "nmdtsa/model.hpp"

namespace testsupport {

inline std::string data_path(const std::string& rel) { return std::string(NMDTSA_DATA_DIR) + "/" + rel; }

inline constexpr double kOmegaS = 2.0 * std::numbers::pi * 60.0;

// Two identical machines whose relative angle obeys the single-machine
// equation with D = 1, H = 3, P_max = 1.7 and a 15 degree operating angle.
inline nmdtsa::ClassicalSystem smib(double D = 2.0, double coupling = 1.7) {
    const double pm = 1.7 * std::sin(15.0 * std::numbers::pi / 180.0);
    std::vector<nmdtsa::Machine> ms = {{"G1", 6.0, D, 1.0, pm}, {"G2", 6.0, D, 1.0, -pm}};
    nmdtsa::ReducedNetwork net;
    net.g = Eigen::VectorXd::Zero(2);
    net.a = Eigen::MatrixXd::Zero(2, 2);
    net.a(0, 1) = net.a(1, 0) = coupling;
    net.b = Eigen::MatrixXd::Zero(2, 2);
    return nmdtsa::ClassicalSystem(ms, net, kOmegaS, "smib");
}

// Random lossy m-machine system with uniform damping gamma whose SEP is a
// prescribed small-angle point. Coupling is dense and symmetric in magnitude.
struct RandomSystem {
    nmdtsa::ClassicalSystem system;
    Eigen::VectorXd sep;
};

inline RandomSystem random_system(int m, unsigned seed, double gamma = 0.2, double lossy = 0.05) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> H(2.5, 12.0), E(1.0, 1.1), A(0.2, 2.0), ang(-0.3, 0.3);
    std::vector<nmdtsa::Machine> ms;
    nmdtsa::ReducedNetwork net;
    net.g = Eigen::VectorXd::Zero(m);
    net.a = Eigen::MatrixXd::Zero(m, m);
    net.b = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            // Ring backbone plus weaker random chords.
            const bool ring = (j == i + 1) || (i == 0 && j == m - 1);
            const double a = ring ? A(rng) : 0.15 * A(rng);
            net.a(i, j) = net.a(j, i) = a;
            net.b(i, j) = net.b(j, i) = lossy * a;
        }
        net.g(i) = lossy;
    }
    Eigen::VectorXd delta(m);
    for (int i = 0; i < m; ++i) {
        nmdtsa::Machine mc;
        mc.id = "G" + std::to_string(i + 1);
        mc.inertia_H = H(rng);
        mc.damping_D = gamma * 2.0 * mc.inertia_H;
        mc.emf_E = E(rng);
        ms.push_back(mc);
        delta(i) = i == 0 ? 0.0 : ang(rng);
    }
    nmdtsa::ClassicalSystem tmp(ms, net, kOmegaS);
    const Eigen::VectorXd pe = nmdtsa::electrical_power(tmp, std::span<const double>(delta.data(), m));
    for (int i = 0; i < m; ++i) ms[i].pmech = pe(i);
    return {nmdtsa::ClassicalSystem(ms, net, kOmegaS, "random" + std::to_string(m)), delta};
}

// Central-difference Jacobian of F at x.
template <class F>
Eigen::MatrixXd fd_jacobian(F&& f, const Eigen::VectorXd& x, double h = 1e-6) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd J(f0.size(), x.size());
    for (int j = 0; j < x.size(); ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return J;
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace testsupport
