#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "nmdtsa/boundary.hpp"
#include "nmdtsa/modal.hpp"
#include "nmdtsa/model.hpp"
#include "nmdtsa/nmd.hpp"
#include "nmdtsa/sim.hpp"

namespace nmdtsa {

enum class Verdict { stable, unstable, indeterminate };
std::string to_string(Verdict v);

struct ModalEnergyReport {
    std::vector<int> mode_ids;
    std::vector<double> sigma;   // 1/s
    std::vector<double> omega;   // rad/s
    Eigen::MatrixXd amplitude;   // machines x modes, rad/s
    Eigen::MatrixXd phase;       // machines x modes, rad
    std::vector<double> energy;  // E_i = sum_j H_j A_ji^2
    double energy_all = 0.0;
    std::vector<double> ratio;   // E_i / E_all

    std::optional<double> ratio_of(int mode_id) const;
    nlohmann::json to_json() const;
};

// Least-squares fit of each column of `speeds` (samples x machines, speed
// deviations in rad/s) on exp(sigma t) cos/sin(Omega t) with the eigenvalues
// of the selected modes held fixed. Time is measured from the first sample.
// Constant, linear and exp(-gamma t) terms absorb the common (mean) motion.
ModalEnergyReport fit_modal_amplitudes(const std::vector<double>& times, const Eigen::MatrixXd& speeds,
                                       const std::vector<double>& inertia_H, const ModeSet& modes,
                                       const std::vector<int>& mode_ids = {}, double gamma = 0.0);

// Speed columns of a Delta-frame trajectory of an m-machine system.
ModalEnergyReport fit_modal_amplitudes(const Trajectory& traj, const ClassicalSystem& sys, const ModeSet& modes,
                                       const std::vector<int>& mode_ids = {});

struct TsaOptions {
    int k = 3;
    std::vector<BoundaryMethod> methods = {BoundaryMethod::sim_search};
    SearchConfig search;
    ZubovConfig zubov;
    LevelSetConfig level;
    bool force_uniform_damping = false;
    double damping_tol = 1e-6;
    bool radial_shrink_sim = false;  // extension: sqrt(r) scaling of sim-search polylines in 2b
    HomologicalOptions homological;
    ProjectionOptions projection;
};

// Steps 1-3 on a post-fault system: SEP, Taylor expansion, modal form,
// decoupling and one real oscillator per analysed mode.
struct PostFaultModel {
    ClassicalSystem system;  // uniform damping (forced if requested)
    DampingCheck damping;
    EquilibriumResult sep;
    RealField taylor;
    ModeSet modes;
    ComplexModalSystem modal;
    NmdResult nmd;
    std::vector<RealOscillator> oscillators;  // one per pair of nmd.decoupled
};

PostFaultModel build_postfault_model(const ClassicalSystem& sys, const Eigen::VectorXd& guess,
                                     const std::vector<int>& interest, const TsaOptions& opts);

std::vector<BoundaryEstimate> estimate_boundaries(const RealOscillator& osc, const TsaOptions& opts);

struct MethodVerdict {
    BoundaryEstimate boundary;
    Verdict verdict = Verdict::stable;
    double margin = 0.0;                 // max over valid samples of state_margin
    std::optional<double> clearing_margin;
    std::optional<double> first_exit_time;
    int unprojectable = 0;
};

struct ModeVerdict {
    int mode_id = 0;
    double frequency_hz = 0.0;
    cplx lambda;
    double shrink_ratio = 1.0;
    Trajectory projected;
    std::vector<MethodVerdict> methods;
    Verdict verdict = Verdict::stable;
};

struct TSAReport {
    std::string procedure;  // "1", "2a", "2b"
    std::string scenario_id;
    int k = 3;
    std::vector<BoundaryMethod> methods;
    std::vector<ModeVerdict> modes;
    Verdict overall = Verdict::stable;
    std::optional<ModalEnergyReport> energy;
    double common_acceleration = 0.0;
    bool diverged = false;

    nlohmann::json to_json() const;
};

// Whole-trajectory classification of one projected mode trajectory.
MethodVerdict assess_trajectory(const BoundaryEstimate& b, const Trajectory& w);

TSAReport nmd_tsa_1(const Scenario& scn, const TsaOptions& opts = {});
// 2a: interest modes only. 2b (shrink): critical levels scaled by the modal
// energy ratios fitted on `reference` (defaults to the scenario trajectory,
// which must then be stable).
TSAReport nmd_tsa_2(const Scenario& scn, const std::vector<int>& interest, bool shrink, const TsaOptions& opts = {},
                    const Trajectory* reference = nullptr);

// No divergence and all relative angles within 2 pi of the SEP.
bool trajectory_looks_stable(const Trajectory& t, int machines);

}  // namespace nmdtsa
