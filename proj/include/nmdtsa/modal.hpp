#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "nmdtsa/poly_field.hpp"

namespace nmdtsa {

struct Mode {
    int index = 0;
    cplx lambda;               // Im > 0
    double frequency_hz = 0.0;
    double damping_ratio = 0.0;
    Eigen::VectorXcd vector;   // right eigenvector of lambda
};

enum class EigenNormalization {
    // Largest-magnitude entry scaled to 1.
    largest_entry,
    // Machine Jacobians [delta; delta_dot]: the pair of angle entries with the
    // largest difference is scaled so that v_i - v_j = 1. The real oscillator
    // coordinate w2 then measures that angle separation in radians.
    angle_separation,
};

// Columns of R: (v_1, conj v_1, v_2, conj v_2, ..., mean_0, mean_1). The two
// mean-motion columns are present only when A has real eigenvalues.
struct ModeSet {
    std::vector<Mode> modes;
    bool has_mean_motion = false;
    cplx mean_lambda[2] = {0.0, 0.0};
    Eigen::MatrixXcd R;
    Eigen::MatrixXcd R_inv;

    int oscillatory_dim() const { return 2 * static_cast<int>(modes.size()); }
    // Eigenvalue attached to column c of R.
    cplx column_lambda(int c) const;
    std::string report() const;
};

ModeSet eigen_decompose(const Eigen::MatrixXd& A,
                        EigenNormalization norm = EigenNormalization::largest_entry);

// Modal-coordinate system y' = S f(T y) on the retained variables.
// T maps retained y to the original state (N_full x n); S = rows of R^-1.
// Variables 2p, 2p+1 belong to mode mode_ids[p] with eigenvalues (lambda, conj).
struct ComplexModalSystem {
    ComplexField field;
    std::vector<cplx> lambda;  // per variable
    std::vector<int> mode_ids; // per pair, index into ModeSet::modes
    Eigen::MatrixXcd T;
    Eigen::MatrixXcd S;

    int pairs() const { return static_cast<int>(mode_ids.size()); }
    int pair_of(int var) const { return var / 2; }
};

// Substitutes x = R y, drops the mean-motion rows and variables. When
// `interest` is non-empty only those modes are substituted, which equals
// select_modes(to_modal(f, modes), interest) without forming the full system.
ComplexModalSystem to_modal(const RealField& f, const ModeSet& modes, const std::vector<int>& interest = {});

// y_non = 0: drops non-interest variables and every monomial touching them.
// `interest` holds indices into ModeSet::modes (values of mode_ids).
ComplexModalSystem select_modes(const ComplexModalSystem& sys, const std::vector<int>& interest);

// Largest |inter-modal coefficient| per degree check helper: max over rows of
// |c| for monomials touching variables of modes other than the row's own.
double inter_modal_residual(const ComplexField& f);

// True when every variable in m belongs to pair `pair`.
bool is_intra_modal(const Monomial& m, int pair);

}  // namespace nmdtsa
