// nmdtsa command-line tool: modes, boundary, tsa, simulate, project.
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "nmdtsa/boundary.hpp"
#include "nmdtsa/io.hpp"
#include "nmdtsa/modal.hpp"
#include "nmdtsa/tsa.hpp"

namespace fs = std::filesystem;
using namespace nmdtsa;
using nlohmann::json;

namespace {

constexpr int kExitError = 1;

struct RunConfig {
    std::string input;
    int k = 3;
    std::vector<std::string> methods;
    std::string modes = "all";
    std::string procedure = "1";
    int rays = 180;
    int L = 16;
    std::vector<double> phi;
    double s0 = 0.1;
    double search_horizon = 5.0;
    double search_step = 5e-4;
    double eps = 0.01;
    double radius_cap = 1e3;
    std::string out;
    std::string trajectory;
    bool force_uniform = false;
    bool radial_shrink = false;

    void validate() const {
        if (!fs::exists(input)) throw std::invalid_argument("input file not found: " + input);
        if (!trajectory.empty() && !fs::exists(trajectory))
            throw std::invalid_argument("trajectory file not found: " + trajectory);
        if (k < 2) throw std::invalid_argument("--order must be at least 2");
        if (L < 2) throw std::invalid_argument("--L must be at least 2");
        if (!phi.empty() && phi.size() != 2) throw std::invalid_argument("--phi takes two coefficients c1,c2");
    }

    TsaOptions options(const std::vector<std::string>& default_methods) const {
        TsaOptions o;
        o.k = k;
        o.methods.clear();
        for (const auto& m : methods.empty() ? default_methods : methods)
            o.methods.push_back(boundary_method_from_string(m));
        o.search.M = rays;
        o.search.s0 = s0;
        o.search.horizon = search_horizon;
        o.search.step = search_step;
        o.search.eps = eps;
        o.search.radius_cap = radius_cap;
        o.search.validate();
        o.level.M = rays;
        o.level.radius_cap = radius_cap;
        o.zubov.L = L;
        if (!phi.empty()) {
            o.zubov.c1 = phi[0];
            o.zubov.c2 = phi[1];
        }
        o.force_uniform_damping = force_uniform;
        o.radial_shrink_sim = radial_shrink;
        return o;
    }
};

// A model file is either a system or a scenario; for a scenario the
// post-fault system is analysed, starting the SEP search at the pre-fault SEP.
struct ModelInput {
    ClassicalSystem system;
    Eigen::VectorXd guess;
    std::optional<Scenario> scenario;
};

ModelInput load_model_input(const std::string& path) {
    const json j = read_json_file(path);
    if (j.is_object() && j.contains("postfault")) {
        Scenario scn = scenario_from_json(j, fs::path(path).parent_path());
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(scn.prefault.size());
        const auto pre = find_equilibrium(scn.prefault, std::span<const double>(zero.data(), zero.size()));
        return {scn.postfault, pre.delta, std::move(scn)};
    }
    ClassicalSystem sys = system_from_json(j);
    const int m = sys.size();
    return {std::move(sys), Eigen::VectorXd::Zero(m), std::nullopt};
}

ModeSet linear_modes(const ClassicalSystem& sys, const Eigen::VectorXd& guess, const TsaOptions& o) {
    const DampingCheck dc = check_uniform_damping(sys, o.damping_tol, o.force_uniform_damping);
    const ClassicalSystem use = dc.forced ? sys.with_uniform_damping(dc.gamma) : sys;
    const auto sep = find_equilibrium(use, std::span<const double>(guess.data(), static_cast<std::size_t>(guess.size())));
    const Eigen::MatrixXd A =
        swing_jacobian(use, std::span<const double>(sep.delta.data(), static_cast<std::size_t>(sep.delta.size())));
    return eigen_decompose(A, EigenNormalization::angle_separation);
}

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw std::invalid_argument(what + ": cannot parse '" + item + "'");
        v.push_back(x);
    }
    if (v.empty()) throw std::invalid_argument(what + ": empty list");
    return v;
}

// "all" -> {} ; "idx:0,2" ; "top:N" (largest fitted energy ratio) ; "0.96,2.05" (Hz, nearest mode).
std::vector<int> resolve_modes(const std::string& sel, const ModeSet& modes, const ModelInput& in) {
    if (sel == "all") return {};
    const int n = static_cast<int>(modes.modes.size());
    std::vector<int> ids;
    if (sel.rfind("idx:", 0) == 0) {
        for (double x : parse_doubles(sel.substr(4), "--modes")) {
            const int i = static_cast<int>(x);
            if (i != x || i < 0 || i >= n)
                throw std::invalid_argument("--modes: no mode with index " + std::to_string(x));
            ids.push_back(i);
        }
    } else if (sel.rfind("top:", 0) == 0) {
        const int count = std::stoi(sel.substr(4));
        if (count < 1) throw std::invalid_argument("--modes top:N needs N >= 1");
        if (!in.scenario) throw std::invalid_argument("--modes top:N needs a scenario input");
        const Trajectory traj = run_contingency(*in.scenario);
        const auto rep = fit_modal_amplitudes(traj, in.system, modes);
        std::vector<int> order(rep.mode_ids.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rep.ratio[a] > rep.ratio[b]; });
        for (int i = 0; i < std::min<int>(count, static_cast<int>(order.size())); ++i)
            ids.push_back(rep.mode_ids[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
    } else {
        for (double f : parse_doubles(sel, "--modes")) {
            int best = -1;
            for (int i = 0; i < n; ++i)
                if (best < 0 || std::abs(modes.modes[i].frequency_hz - f) < std::abs(modes.modes[best].frequency_hz - f))
                    best = i;
            if (best < 0 || std::abs(modes.modes[best].frequency_hz - f) > 0.05 * std::max(f, 0.2))
                throw std::invalid_argument("--modes: no mode near " + std::to_string(f) + " Hz");
            ids.push_back(best);
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

fs::path out_dir(const RunConfig& c) {
    fs::path d = c.out.empty() ? fs::path(".") : fs::path(c.out);
    fs::create_directories(d);
    return d;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << s;
}

void write_boundary(const fs::path& p, const BoundaryEstimate& b) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    write_boundary_csv(f, b);
}

void write_trajectory(const fs::path& p, const Trajectory& t) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    write_trajectory_csv(f, t);
}

std::string opt_str(const std::optional<double>& v) {
    if (!v) return "none";
    std::ostringstream s;
    s << std::setprecision(6) << *v;
    return s.str();
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int cmd_modes(const RunConfig& c) {
    const ModelInput in = load_model_input(c.input);
    const TsaOptions o = c.options({"fi"});
    const ModeSet ms = linear_modes(in.system, in.guess, o);
    std::ostringstream csv;
    csv << "mode,frequency_hz,damping_ratio,sigma,omega\n" << std::setprecision(10);
    std::cout << "mode  frequency_hz  damping_ratio  sigma  omega\n";
    for (const auto& md : ms.modes) {
        csv << md.index << ',' << md.frequency_hz << ',' << md.damping_ratio << ',' << md.lambda.real() << ','
            << md.lambda.imag() << '\n';
        std::cout << std::setw(4) << md.index << "  " << std::fixed << std::setprecision(5) << std::setw(12)
                  << md.frequency_hz << "  " << std::setw(13) << md.damping_ratio << "  " << std::setprecision(4)
                  << md.lambda.real() << "  " << md.lambda.imag() << '\n'
                  << std::defaultfloat;
    }
    if (!c.out.empty()) write_text(out_dir(c) / "modes.csv", csv.str());
    return 0;
}

int cmd_boundary(const RunConfig& c) {
    const ModelInput in = load_model_input(c.input);
    const TsaOptions o = c.options({"fi"});
    const auto interest = resolve_modes(c.modes, linear_modes(in.system, in.guess, o), in);
    const PostFaultModel pm = build_postfault_model(in.system, in.guess, interest, o);
    const fs::path dir = out_dir(c);
    json meta = json::array();
    for (const auto& osc : pm.oscillators) {
        const double f = osc.lambda.imag() / (2.0 * std::numbers::pi);
        json jm = {{"mode", osc.mode},
                   {"frequency_hz", f},
                   {"lambda", {osc.lambda.real(), osc.lambda.imag()}},
                   {"order", osc.order},
                   {"row1", bipoly_to_json(osc.row1)},
                   {"row2", bipoly_to_json(osc.row2)}};
        json methods = json::array();
        for (const auto& b : estimate_boundaries(osc, o)) {
            const std::string name = "boundary_mode" + std::to_string(osc.mode) + "_" + to_string(b.method) + ".csv";
            write_boundary(dir / name, b);
            methods.push_back({{"method", to_string(b.method)}, {"critical", opt_json(b.critical)},
                               {"points", b.polyline.size()},  {"file", name},
                               {"meta", b.meta}});
            std::cout << "mode " << osc.mode << " (" << std::setprecision(5) << f << " Hz) " << to_string(b.method)
                      << ": critical " << opt_str(b.critical) << ", " << b.polyline.size() << " points -> " << name
                      << '\n';
        }
        jm["methods"] = methods;
        meta.push_back(jm);
    }
    write_text(dir / "boundary.json", meta.dump(2) + "\n");
    return 0;
}

int verdict_exit(Verdict v) {
    switch (v) {
        case Verdict::stable: return 0;
        case Verdict::unstable: return 2;
        case Verdict::indeterminate: return 3;
    }
    return kExitError;
}

int cmd_tsa(const RunConfig& c) {
    const ModelInput in = load_model_input(c.input);
    if (!in.scenario) throw std::invalid_argument("tsa needs a scenario file (with prefault/faulton/postfault)");
    const TsaOptions o = c.options({"sim"});
    TSAReport rep;
    if (c.procedure == "1") {
        if (c.modes != "all") throw std::invalid_argument("procedure 1 analyses every mode; use --procedure 2a or 2b");
        rep = nmd_tsa_1(*in.scenario, o);
    } else if (c.procedure == "2a" || c.procedure == "2b") {
        std::vector<int> ids = resolve_modes(c.modes, linear_modes(in.system, in.guess, o), in);
        if (ids.empty())
            for (int i = 0; i < in.system.size() - 1; ++i) ids.push_back(i);
        rep = nmd_tsa_2(*in.scenario, ids, c.procedure == "2b", o);
    } else {
        throw std::invalid_argument("--procedure must be 1, 2a or 2b");
    }
    const fs::path dir = out_dir(c);
    write_text(dir / "report.json", rep.to_json().dump(2) + "\n");
    for (const auto& mv : rep.modes) {
        const std::string id = std::to_string(mv.mode_id);
        write_trajectory(dir / ("projected_mode" + id + ".csv"), mv.projected);
        for (const auto& r : mv.methods)
            write_boundary(dir / ("boundary_mode" + id + "_" + to_string(r.boundary.method) + ".csv"), r.boundary);
        std::cout << "mode " << id << " (" << std::setprecision(5) << mv.frequency_hz << " Hz";
        if (rep.energy) std::cout << ", r = " << mv.shrink_ratio;
        std::cout << "): " << to_string(mv.verdict);
        for (const auto& r : mv.methods)
            std::cout << "  [" << to_string(r.boundary.method) << " " << to_string(r.verdict) << " margin "
                      << std::setprecision(4) << r.margin << "]";
        std::cout << '\n';
    }
    std::cout << "overall: " << to_string(rep.overall) << '\n';
    return verdict_exit(rep.overall);
}

int cmd_simulate(const RunConfig& c) {
    const ModelInput in = load_model_input(c.input);
    if (!in.scenario) throw std::invalid_argument("simulate needs a scenario file (with prefault/faulton/postfault)");
    const ContingencyRun run = run_contingency_full(*in.scenario);
    const fs::path dir = out_dir(c);
    write_trajectory(dir / "faulton.csv", run.faulton);
    write_trajectory(dir / "postfault.csv", run.postfault);
    const bool ok = trajectory_looks_stable(run.postfault, in.system.size());
    std::cout << "samples " << run.postfault.samples() << ", " << (ok ? "stable" : "unstable") << '\n';
    return 0;
}

int cmd_project(const RunConfig& c) {
    const ModelInput in = load_model_input(c.input);
    const TsaOptions o = c.options({"fi"});
    const auto interest = resolve_modes(c.modes, linear_modes(in.system, in.guess, o), in);
    const PostFaultModel pm = build_postfault_model(in.system, in.guess, interest, o);
    Trajectory traj;
    if (!c.trajectory.empty()) {
        std::ifstream f(c.trajectory);
        traj = read_trajectory_csv(f);
    } else if (in.scenario) {
        traj = run_contingency(*in.scenario);
    } else {
        throw std::invalid_argument("project needs a scenario file or --trajectory");
    }
    const auto ws = project_trajectory_all(pm.nmd.chain, traj, o.projection);
    const fs::path dir = out_dir(c);
    for (std::size_t p = 0; p < ws.size(); ++p) {
        const int mode = pm.nmd.chain.mode_ids[p];
        write_trajectory(dir / ("projected_mode" + std::to_string(mode) + ".csv"), ws[p]);
        int bad = 0;
        for (int s = 0; s < ws[p].samples(); ++s) bad += ws[p].sample_valid(s) ? 0 : 1;
        std::cout << "mode " << mode << ": " << ws[p].samples() << " samples, " << bad << " unprojectable\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-mode transient stability analysis by nonlinear modal decoupling"};
    app.require_subcommand(1);
    app.fallthrough();
    RunConfig c;
    app.add_option("--order", c.k, "Taylor / normal-form order k")->capture_default_str();
    app.add_option("--method", c.methods, "Boundary method(s): sim, fi, zubov (repeatable)")
        ->check(CLI::IsMember({"sim", "sim_search", "fi", "first_integral", "zubov"}));
    app.add_option("--L", c.L, "Zubov series degree")->capture_default_str();
    app.add_option("--phi", c.phi, "Zubov weights c1,c2 in phi = c1 w1^2 + c2 w2^2")->delimiter(',');
    app.add_option("--rays", c.rays, "Rays per boundary polyline")->capture_default_str();
    app.add_option("--out", c.out, "Output directory");
    app.add_flag("--force-uniform-damping", c.force_uniform, "Replace damping by the inertia-weighted mean D/M");
    app.add_option("--modes", c.modes, "all | idx:i,j | top:N | f1,f2 (Hz)")->capture_default_str();
    app.add_option("--s0", c.s0, "Sim search initial radius")->capture_default_str();
    app.add_option("--search-horizon", c.search_horizon, "Sim search horizon (s)")->capture_default_str();
    app.add_option("--search-step", c.search_step, "Sim search RK4 step (s)")->capture_default_str();
    app.add_option("--eps", c.eps, "Sim search radial resolution")->capture_default_str();
    app.add_option("--radius-cap", c.radius_cap, "Largest radius searched")->capture_default_str();

    auto* modes = app.add_subcommand("modes", "Linear modes at the post-fault SEP");
    auto* boundary = app.add_subcommand("boundary", "Stability boundary of each mode oscillator");
    auto* tsa = app.add_subcommand("tsa", "Per-mode stability verdicts for a contingency");
    auto* simulate = app.add_subcommand("simulate", "Simulate a contingency");
    auto* project = app.add_subcommand("project", "Project a trajectory onto mode coordinates");
    for (auto* s : {modes, boundary, tsa, simulate, project})
        s->add_option("input", c.input, "System or scenario JSON")->required();
    tsa->add_option("--procedure", c.procedure, "1, 2a or 2b")->capture_default_str();
    tsa->add_flag("--radial-shrink", c.radial_shrink, "Shrink sim-search polylines by sqrt(r) in 2b");
    project->add_option("--trajectory", c.trajectory, "Delta-frame trajectory CSV (SEP subtracted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        c.validate();
        if (modes->parsed()) return cmd_modes(c);
        if (boundary->parsed()) return cmd_boundary(c);
        if (tsa->parsed()) return cmd_tsa(c);
        if (simulate->parsed()) return cmd_simulate(c);
        if (project->parsed()) return cmd_project(c);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
