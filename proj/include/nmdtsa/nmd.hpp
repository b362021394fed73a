#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "nmdtsa/bipoly.hpp"
#include "nmdtsa/modal.hpp"
#include "nmdtsa/trajectory.hpp"

namespace nmdtsa {

// Decoupled second-order system of one mode:
//   w1' = sum v_jl w1^j w2^l          (row1)
//   w2' = w1 + nonlinear row2 terms    (row2)
struct RealOscillator {
    int mode = 0;
    cplx lambda;
    int order = 3;
    BiPoly row1;
    BiPoly row2;

    double v(int j, int l) const { return row1.coeff(j, l); }
    void rhs(double w1, double w2, double& d1, double& d2) const {
        d1 = row1(w1, w2);
        d2 = row2(w1, w2);
    }
    std::string table() const;  // "j l v_jl" rows for row1, then row2 nonlinear terms
};

// z^(p) = z^(p+1) + h_{p+1}(z^(p+1)), applied for degrees 2..k in order.
struct TransformChain {
    Eigen::MatrixXcd T;          // y -> Delta (N_full x n)
    Eigen::MatrixXcd S;          // Delta -> y (n x N_full)
    std::vector<cplx> lambda;    // per retained variable
    std::vector<int> mode_ids;   // per pair
    std::vector<HomogeneousMap> maps;
    int order = 3;
    Eigen::VectorXd sep;         // operating point of the expansion (absolute Delta)

    int dim() const { return static_cast<int>(lambda.size()); }
    // 2x2 real transform of pair p: [[lambda, conj lambda], [1, 1]].
    Eigen::Matrix2cd real_transform(int pair) const;
};

void to_json(nlohmann::json& j, const TransformChain& c);
void from_json(const nlohmann::json& j, TransformChain& c);

struct HomologicalOptions {
    double resonance_tol = 1e-6;  // relative to |lambda_r|
};

// h coefficients for one row and one degree: inter-modal terms are cancelled,
// intra-modal terms stay (h = 0). Throws on resonance.
Polynomial<cplx> homological_solve(const Polynomial<cplx>& terms, const std::vector<cplx>& lambda, int row,
                                   const HomologicalOptions& opts = {});

struct NmdResult {
    TransformChain chain;
    ComplexModalSystem decoupled;
};

NmdResult nmd_decouple(const ComplexModalSystem& sys, int k, const HomologicalOptions& opts = {});

// Pair p of a decoupled system mapped through w1 = lambda z1 + conj(lambda) z2, w2 = z1 + z2.
RealOscillator to_real_oscillator(const ComplexModalSystem& decoupled, int pair, double imag_tol = 1e-9);

// Oscillator of an explicit (lambda, field) pair in variables (0, 1).
RealOscillator to_real_oscillator(const ComplexField& pair_field, cplx lambda, int mode, double imag_tol = 1e-9);

struct ProjectionOptions {
    double tolerance = 1e-12;
    int max_iterations = 50;
};

struct ProjectedSample {
    double w1 = 0.0;
    double w2 = 0.0;
    bool ok = true;
};

// Delta offset from the SEP -> decoupled z. Returns nullopt when a
// fixed-point inversion does not converge.
std::optional<Eigen::VectorXcd> chain_inverse(const TransformChain& c, const Eigen::VectorXd& delta,
                                              const ProjectionOptions& opts = {});
// Decoupled z -> Delta offset from the SEP.
Eigen::VectorXd chain_forward(const TransformChain& c, const Eigen::VectorXcd& z);
// Decoupled z -> modal y (explicit evaluation of the cascade).
Eigen::VectorXcd chain_to_modal(const TransformChain& c, const Eigen::VectorXcd& z);

// Real oscillator coordinates of pair p from decoupled z.
ProjectedSample pair_coordinates(const TransformChain& c, const Eigen::VectorXcd& z, int pair);

// Delta-frame trajectory (SEP already subtracted) -> (w1, w2) of pair p.
// Unprojectable samples are marked invalid.
Trajectory project_trajectory(const TransformChain& c, const Trajectory& traj, int pair,
                              const ProjectionOptions& opts = {});
// All pairs at once; element p is the trajectory of pair p.
std::vector<Trajectory> project_trajectory_all(const TransformChain& c, const Trajectory& traj,
                                               const ProjectionOptions& opts = {});

}  // namespace nmdtsa
