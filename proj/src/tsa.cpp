#include "nmdtsa/tsa.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace nmdtsa {

using json = nlohmann::json;

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::stable: return "stable";
        case Verdict::unstable: return "unstable";
        case Verdict::indeterminate: return "indeterminate";
    }
    return "unknown";
}

namespace {

// unstable beats indeterminate beats stable
Verdict combine(Verdict a, Verdict b) {
    if (a == Verdict::unstable || b == Verdict::unstable) return Verdict::unstable;
    if (a == Verdict::indeterminate || b == Verdict::indeterminate) return Verdict::indeterminate;
    return Verdict::stable;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::optional<double> ModalEnergyReport::ratio_of(int mode_id) const {
    for (std::size_t i = 0; i < mode_ids.size(); ++i)
        if (mode_ids[i] == mode_id) return ratio[i];
    return std::nullopt;
}

json ModalEnergyReport::to_json() const {
    json modes = json::array();
    for (std::size_t i = 0; i < mode_ids.size(); ++i) {
        std::vector<double> a(static_cast<std::size_t>(amplitude.rows())), ph(a.size());
        for (int j = 0; j < amplitude.rows(); ++j) {
            a[static_cast<std::size_t>(j)] = amplitude(j, static_cast<Eigen::Index>(i));
            ph[static_cast<std::size_t>(j)] = phase(j, static_cast<Eigen::Index>(i));
        }
        modes.push_back({{"mode", mode_ids[i]},
                         {"sigma", sigma[i]},
                         {"omega", omega[i]},
                         {"frequency_hz", omega[i] / (2.0 * std::numbers::pi)},
                         {"amplitude", a},
                         {"phase", ph},
                         {"energy", energy[i]},
                         {"ratio", ratio[i]}});
    }
    return {{"modes", modes}, {"energy_all", energy_all}};
}

ModalEnergyReport fit_modal_amplitudes(const std::vector<double>& times, const Eigen::MatrixXd& speeds,
                                       const std::vector<double>& inertia_H, const ModeSet& modes,
                                       const std::vector<int>& mode_ids, double gamma) {
    const int ns = static_cast<int>(times.size());
    const int m = static_cast<int>(speeds.cols());
    if (speeds.rows() != ns) throw std::invalid_argument("fit_modal_amplitudes: times and samples differ in length");
    if (static_cast<int>(inertia_H.size()) != m)
        throw std::invalid_argument("fit_modal_amplitudes: one inertia per machine is required");
    if (!speeds.allFinite()) throw std::invalid_argument("fit_modal_amplitudes: trajectory is not finite");

    ModalEnergyReport rep;
    rep.mode_ids = mode_ids;
    if (rep.mode_ids.empty())
        for (const auto& md : modes.modes) rep.mode_ids.push_back(md.index);
    const int nm = static_cast<int>(rep.mode_ids.size());
    double slowest = std::numeric_limits<double>::infinity();
    for (int id : rep.mode_ids) {
        if (id < 0 || id >= static_cast<int>(modes.modes.size()))
            throw std::invalid_argument("fit_modal_amplitudes: unknown mode " + std::to_string(id));
        const cplx l = modes.modes[static_cast<std::size_t>(id)].lambda;
        rep.sigma.push_back(l.real());
        rep.omega.push_back(l.imag());
        slowest = std::min(slowest, l.imag());
    }
    const double span = ns > 1 ? times.back() - times.front() : 0.0;
    if (span < 2.0 * 2.0 * std::numbers::pi / slowest)
        throw std::invalid_argument("fit_modal_amplitudes: trajectory shorter than two periods of the slowest mode");

    const int nuisance = 2;
    Eigen::MatrixXd B(ns, 2 * nm + nuisance);
    for (int s = 0; s < ns; ++s) {
        const double t = times[static_cast<std::size_t>(s)] - times.front();
        for (int i = 0; i < nm; ++i) {
            const double e = std::exp(rep.sigma[static_cast<std::size_t>(i)] * t);
            B(s, 2 * i) = e * std::cos(rep.omega[static_cast<std::size_t>(i)] * t);
            B(s, 2 * i + 1) = e * std::sin(rep.omega[static_cast<std::size_t>(i)] * t);
        }
        B(s, 2 * nm) = 1.0;
        B(s, 2 * nm + 1) = gamma > 0.0 ? std::exp(-gamma * t) : t;
    }

    // Rank check on the oscillatory block with unit-norm columns.
    Eigen::MatrixXd osc = B.leftCols(2 * nm);
    for (int c = 0; c < osc.cols(); ++c) osc.col(c).normalize();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(osc);
    const auto& sv = svd.singularValues();
    if (nm > 0 && sv(sv.size() - 1) < 1e-8 * sv(0)) {
        int a = 0, b = nm > 1 ? 1 : 0;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < nm; ++i)
            for (int j = i + 1; j < nm; ++j) {
                const double d = std::abs(rep.omega[static_cast<std::size_t>(i)] - rep.omega[static_cast<std::size_t>(j)]);
                if (d < best) {
                    best = d;
                    a = i;
                    b = j;
                }
            }
        std::ostringstream os;
        os << "fit_modal_amplitudes: rank-deficient basis, modes " << rep.mode_ids[static_cast<std::size_t>(a)]
           << " and " << rep.mode_ids[static_cast<std::size_t>(b)] << " are not separable over this window";
        throw std::runtime_error(os.str());
    }

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
    rep.amplitude.resize(m, nm);
    rep.phase.resize(m, nm);
    rep.energy.assign(static_cast<std::size_t>(nm), 0.0);
    for (int j = 0; j < m; ++j) {
        const Eigen::VectorXd x = qr.solve(speeds.col(j));
        for (int i = 0; i < nm; ++i) {
            const double a = x(2 * i), b = x(2 * i + 1);
            rep.amplitude(j, i) = std::hypot(a, b);
            rep.phase(j, i) = std::atan2(-b, a);
            rep.energy[static_cast<std::size_t>(i)] += inertia_H[static_cast<std::size_t>(j)] * (a * a + b * b);
        }
    }
    rep.energy_all = 0.0;
    for (double e : rep.energy) rep.energy_all += e;
    for (double e : rep.energy) rep.ratio.push_back(rep.energy_all > 0.0 ? e / rep.energy_all : 0.0);
    return rep;
}

ModalEnergyReport fit_modal_amplitudes(const Trajectory& traj, const ClassicalSystem& sys, const ModeSet& modes,
                                       const std::vector<int>& mode_ids) {
    const int m = sys.size();
    if (traj.dim() != 2 * m) throw std::invalid_argument("fit_modal_amplitudes: trajectory is not a Delta-frame state");
    if (traj.diverged) throw std::invalid_argument("fit_modal_amplitudes: trajectory diverged");
    std::vector<double> H;
    for (const auto& mc : sys.machines()) H.push_back(mc.inertia_H);
    const double gamma = sys.machine(0).damping_D / sys.machine(0).M();
    return fit_modal_amplitudes(traj.times, traj.states.rightCols(m), H, modes, mode_ids, gamma);
}

PostFaultModel build_postfault_model(const ClassicalSystem& sys, const Eigen::VectorXd& guess,
                                     const std::vector<int>& interest, const TsaOptions& opts) {
    const int m = sys.size();
    DampingCheck damping = check_uniform_damping(sys, opts.damping_tol, opts.force_uniform_damping);
    if (!damping.uniform) throw std::invalid_argument("analysis needs uniform damping: " + damping.report());
    ClassicalSystem uniform = damping.forced ? sys.with_uniform_damping(damping.gamma) : sys;

    EquilibriumResult sep =
        find_equilibrium(uniform, std::span<const double>(guess.data(), static_cast<std::size_t>(guess.size())));
    if (!sep.stable) throw std::runtime_error("post-fault equilibrium is not stable");
    Eigen::VectorXd center = Eigen::VectorXd::Zero(2 * m);
    center.head(m) = sep.delta;
    RealField taylor = taylor_expand(uniform, std::span<const double>(center.data(), static_cast<std::size_t>(2 * m)), opts.k);
    const Eigen::MatrixXd A =
        swing_jacobian(uniform, std::span<const double>(sep.delta.data(), static_cast<std::size_t>(m)));
    ModeSet modes = eigen_decompose(A, EigenNormalization::angle_separation);
    ComplexModalSystem modal = to_modal(taylor, modes, interest);
    NmdResult nmd = nmd_decouple(modal, opts.k, opts.homological);
    nmd.chain.sep = center;
    std::vector<RealOscillator> oscillators;
    for (int p = 0; p < nmd.decoupled.pairs(); ++p) oscillators.push_back(to_real_oscillator(nmd.decoupled, p));
    return PostFaultModel{std::move(uniform), std::move(damping), std::move(sep),    std::move(taylor),
                          std::move(modes),   std::move(modal),   std::move(nmd), std::move(oscillators)};
}

std::vector<BoundaryEstimate> estimate_boundaries(const RealOscillator& osc, const TsaOptions& opts) {
    std::vector<BoundaryEstimate> out;
    for (auto m : opts.methods) {
        switch (m) {
            case BoundaryMethod::sim_search: out.push_back(search_boundary_sim(osc, opts.search)); break;
            case BoundaryMethod::first_integral: out.push_back(first_integral_boundary(osc, opts.level)); break;
            case BoundaryMethod::zubov: out.push_back(zubov_boundary(osc, opts.zubov, opts.level)); break;
        }
    }
    return out;
}

MethodVerdict assess_trajectory(const BoundaryEstimate& b, const Trajectory& w) {
    MethodVerdict mv;
    mv.boundary = b;
    bool outside = false, uncertain = false;
    for (int s = 0; s < w.samples(); ++s) {
        if (!w.sample_valid(s)) {
            ++mv.unprojectable;
            uncertain = true;
            continue;
        }
        const double w1 = w.states(s, 0), w2 = w.states(s, 1);
        const auto margin = state_margin(b, w1, w2);
        if (margin) mv.margin = std::max(mv.margin, *margin);
        if (s == 0) mv.clearing_margin = margin;
        const Region r = classify_state(b, w1, w2);
        if (r == Region::outside && !outside) {
            outside = true;
            mv.first_exit_time = w.times[static_cast<std::size_t>(s)];
        }
        if (r == Region::indeterminate) uncertain = true;
    }
    // An observed exit settles the case; uncertainty only matters otherwise.
    if (outside)
        mv.verdict = Verdict::unstable;
    else if (uncertain)
        mv.verdict = Verdict::indeterminate;
    else
        mv.verdict = Verdict::stable;
    return mv;
}

bool trajectory_looks_stable(const Trajectory& t, int machines) {
    if (t.diverged || t.dim() != 2 * machines) return false;
    for (int s = 0; s < t.samples(); ++s) {
        const auto row = t.states.row(s);
        if (!row.allFinite()) return false;
        const double spread = row.head(machines).maxCoeff() - row.head(machines).minCoeff();
        if (spread > 2.0 * std::numbers::pi) return false;
    }
    return true;
}

namespace {

TSAReport run_procedure(const Scenario& scn, const std::vector<int>& interest, bool shrink_levels,
                        const TsaOptions& opts, const Trajectory* reference, const std::string& procedure) {
    scn.validate();
    const ContingencyRun run = run_contingency_full(scn);
    const PostFaultModel model = build_postfault_model(scn.postfault, run.prefault_sep.delta, interest, opts);
    const int m = scn.postfault.size();

    TSAReport rep;
    rep.procedure = procedure;
    rep.scenario_id = scn.id;
    rep.k = opts.k;
    rep.methods = opts.methods;
    rep.common_acceleration = model.sep.common_acceleration;
    rep.diverged = run.postfault.diverged;

    if (shrink_levels) {
        const Trajectory& ref = reference ? *reference : run.postfault;
        if (!trajectory_looks_stable(ref, m))
            throw std::invalid_argument("shrink ratios need a stable reference trajectory");
        rep.energy = fit_modal_amplitudes(ref, model.system, model.modes);
        if (!(rep.energy->energy_all > 0.0))
            throw std::invalid_argument("shrink ratios undefined: reference trajectory carries no modal energy");
    }

    const auto projected = project_trajectory_all(model.nmd.chain, run.postfault, opts.projection);
    for (int p = 0; p < model.nmd.decoupled.pairs(); ++p) {
        const auto& osc = model.oscillators[static_cast<std::size_t>(p)];
        ModeVerdict mv;
        mv.mode_id = osc.mode;
        mv.lambda = osc.lambda;
        mv.frequency_hz = osc.lambda.imag() / (2.0 * std::numbers::pi);
        mv.projected = projected[static_cast<std::size_t>(p)];
        if (shrink_levels) mv.shrink_ratio = rep.energy->ratio_of(osc.mode).value_or(1.0);
        for (auto& b : estimate_boundaries(osc, opts)) {
            if (shrink_levels && mv.shrink_ratio > 0.0 && mv.shrink_ratio < 1.0)
                b = shrink(b, mv.shrink_ratio, opts.radial_shrink_sim, opts.level);
            mv.methods.push_back(assess_trajectory(b, mv.projected));
            mv.verdict = combine(mv.verdict, mv.methods.back().verdict);
        }
        rep.overall = combine(rep.overall, mv.verdict);
        rep.modes.push_back(std::move(mv));
    }
    return rep;
}

}  // namespace

TSAReport nmd_tsa_1(const Scenario& scn, const TsaOptions& opts) {
    return run_procedure(scn, {}, false, opts, nullptr, "1");
}

TSAReport nmd_tsa_2(const Scenario& scn, const std::vector<int>& interest, bool shrink_levels, const TsaOptions& opts,
                    const Trajectory* reference) {
    if (interest.empty()) throw std::invalid_argument("nmd_tsa_2: empty mode selection");
    return run_procedure(scn, interest, shrink_levels, opts, reference, shrink_levels ? "2b" : "2a");
}

json TSAReport::to_json() const {
    json jm = json::array();
    for (const auto& mv : modes) {
        json meth = json::array();
        for (const auto& r : mv.methods)
            meth.push_back({{"method", to_string(r.boundary.method)},
                            {"verdict", to_string(r.verdict)},
                            {"margin", r.margin},
                            {"clearing_margin", opt_json(r.clearing_margin)},
                            {"first_exit_time", opt_json(r.first_exit_time)},
                            {"critical", opt_json(r.boundary.critical)},
                            {"effective_critical", opt_json(r.boundary.effective_critical())},
                            {"unprojectable_samples", r.unprojectable}});
        jm.push_back({{"mode", mv.mode_id},
                      {"frequency_hz", mv.frequency_hz},
                      {"lambda", {mv.lambda.real(), mv.lambda.imag()}},
                      {"shrink_ratio", mv.shrink_ratio},
                      {"verdict", to_string(mv.verdict)},
                      {"methods", meth}});
    }
    json ms = json::array();
    for (auto m : methods) ms.push_back(to_string(m));
    json out = {{"procedure", procedure}, {"scenario", scenario_id}, {"k", k},
                {"methods", ms},          {"overall", to_string(overall)},
                {"modes", jm},            {"common_acceleration", common_acceleration},
                {"diverged", diverged}};
    if (energy) out["modal_energy"] = energy->to_json();
    return out;
}

}  // namespace nmdtsa
