#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nmdtsa {

// Classical-model synchronous machine. Inertia is stored as H (seconds); the
// swing equation uses M = 2H.
struct Machine {
    std::string id;
    double inertia_H = 0.0;
    double damping_D = 0.0;
    double emf_E = 1.0;
    double pmech = 0.0;

    double M() const { return 2.0 * inertia_H; }
};

// Network terms of P_ei = E_i^2 g_i + sum_j [a_ij sin(d_i - d_j) + b_ij cos(d_i - d_j)].
struct ReducedNetwork {
    Eigen::VectorXd g;
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;

    int size() const { return static_cast<int>(g.size()); }
};

class ClassicalSystem {
public:
    ClassicalSystem(std::vector<Machine> machines, ReducedNetwork network, double omega_s,
                    std::string id = {});

    int size() const { return static_cast<int>(machines_.size()); }
    const std::vector<Machine>& machines() const { return machines_; }
    const Machine& machine(int i) const { return machines_.at(static_cast<std::size_t>(i)); }
    const ReducedNetwork& network() const { return network_; }
    double omega_s() const { return omega_s_; }
    const std::string& id() const { return id_; }

    // Copy with every D_i replaced by gamma * 2H_i.
    ClassicalSystem with_uniform_damping(double gamma) const;

private:
    std::vector<Machine> machines_;
    ReducedNetwork network_;
    double omega_s_;
    std::string id_;
};

struct Scenario {
    ClassicalSystem prefault;
    ClassicalSystem faulton;
    ClassicalSystem postfault;
    double clearing_time = 0.0;
    double horizon = 0.0;
    double step = 1e-3;
    std::string id;

    void validate() const;
};

Eigen::VectorXd electrical_power(const ClassicalSystem& sys, std::span<const double> delta);

// d/dt [delta; delta_dot].
Eigen::VectorXd swing_rhs(const ClassicalSystem& sys, std::span<const double> state);
void swing_rhs(const ClassicalSystem& sys, std::span<const double> state, std::span<double> out);

// d P_e / d delta (m x m).
Eigen::MatrixXd power_jacobian(const ClassicalSystem& sys, std::span<const double> delta);
// Jacobian of swing_rhs at [delta; 0] (2m x 2m).
Eigen::MatrixXd swing_jacobian(const ClassicalSystem& sys, std::span<const double> delta);

struct KronReduction {
    ReducedNetwork network;
    Eigen::MatrixXcd reduced_admittance;
    std::string mapping;  // human-readable note on how (g, a, b) derive from Y_red
};

struct KronInput {
    Eigen::MatrixXcd bus_admittance;      // loads already folded in as shunts
    std::vector<int> machine_nodes;       // bus index of each machine
    std::vector<double> machine_reactances;  // x'_d per machine; empty = nodes are internal EMF nodes
    std::vector<int> grounded_buses;      // buses held at zero voltage (bolted faults)
};

// Eliminates every non-machine node: Y_red = Y_gg - Y_gb Y_bb^-1 Y_bg, then
// g_i = Re Y_ii, a_ij = E_i E_j Im Y_ij, b_ij = E_i E_j Re Y_ij.
KronReduction kron_reduce(const KronInput& in, std::span<const double> emf);

struct EquilibriumResult {
    Eigen::VectorXd delta;
    int iterations = 0;
    double residual = 0.0;  // infinity norm of the relative-motion mismatch
    // Common acceleration of all machines at the returned point (rad/s^2).
    // Zero when mechanical and electrical power balance exactly.
    double common_acceleration = 0.0;
    bool stable = true;  // all oscillatory eigenvalues in the closed left half-plane
};

struct EquilibriumOptions {
    int max_iterations = 50;
    double tolerance = 1e-10;
};

// Newton iteration on the relative swing equilibrium with machine 1 as the
// angle reference: (P_mi - P_ei)/M_i equal for all i. When mechanical input
// matches electrical output this is P_ei = P_mi.
EquilibriumResult find_equilibrium(const ClassicalSystem& sys, std::span<const double> guess,
                                   const EquilibriumOptions& opts = {});

struct DampingCheck {
    bool uniform = false;
    double gamma = 0.0;                 // D_i / (2 H_i), or the forced value
    double relative_spread = 0.0;       // (max - min) / max over per-machine ratios
    std::vector<double> ratios;
    bool forced = false;

    std::string report() const;
};

// gamma = D_i/(2H_i) when uniform to rel_tol; otherwise a violation report.
// With force_uniform, gamma becomes the inertia-weighted mean sum(D)/sum(2H).
DampingCheck check_uniform_damping(const ClassicalSystem& sys, double rel_tol = 1e-6,
                                   bool force_uniform = false);

}  // namespace nmdtsa
