#include "nmdtsa/sim.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nmdtsa {

int step_count(double horizon, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("integrate: step must be positive");
    if (!(horizon >= 0.0)) throw std::invalid_argument("integrate: horizon must be non-negative");
    return std::max(0, static_cast<int>(std::ceil(horizon / step - 1e-9)));
}

namespace {

Trajectory pack(const std::vector<std::vector<double>>& samples, bool diverged, double h, double t0) {
    Trajectory t;
    const int ns = static_cast<int>(samples.size());
    const int dim = ns ? static_cast<int>(samples[0].size()) : 0;
    t.states.resize(ns, dim);
    t.times.resize(static_cast<std::size_t>(ns));
    for (int i = 0; i < ns; ++i) {
        t.times[static_cast<std::size_t>(i)] = t0 + i * h;
        for (int j = 0; j < dim; ++j) t.states(i, j) = samples[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    t.diverged = diverged;
    return t;
}

void check_start(const Eigen::VectorXd& x0) {
    if (!x0.allFinite()) throw std::invalid_argument("integrate: initial state is not finite");
}

}  // namespace

Trajectory integrate(const RealRhs& rhs, const Eigen::VectorXd& x0, double step, double horizon, double t0) {
    check_start(x0);
    const int n = step_count(horizon, step);
    const double h = n ? horizon / n : step;
    auto [samples, diverged] = rk4_samples<double>(rhs, std::vector<double>(x0.data(), x0.data() + x0.size()), h, n);
    return pack(samples, diverged, h, t0);
}

Trajectory integrate(const ClassicalSystem& sys, const Eigen::VectorXd& x0, double step, double horizon,
                     double t0) {
    if (x0.size() != 2 * sys.size()) throw std::invalid_argument("integrate: state must have length 2m");
    Trajectory t = integrate(
        [&sys](std::span<const double> x, std::span<double> dx) { swing_rhs(sys, x, dx); }, x0, step, horizon, t0);
    t.source = sys.id();
    return t;
}

Trajectory integrate(const RealField& f, const Eigen::VectorXd& x0, double step, double horizon) {
    if (x0.size() != f.dim()) throw std::invalid_argument("integrate: state dimension does not match field");
    return integrate(
        [&f](std::span<const double> x, std::span<double> dx) {
            for (int r = 0; r < f.dim(); ++r) dx[static_cast<std::size_t>(r)] = f.row(r).evaluate(x);
        },
        x0, step, horizon);
}

Trajectory integrate(const RealOscillator& osc, double w1, double w2, double step, double horizon) {
    Eigen::Vector2d x0(w1, w2);
    Trajectory t = integrate(
        [&osc](std::span<const double> x, std::span<double> dx) { osc.rhs(x[0], x[1], dx[0], dx[1]); }, x0, step,
        horizon);
    t.frame = "w";
    return t;
}

std::vector<Eigen::VectorXcd> integrate(const ComplexField& f, const Eigen::VectorXcd& z0, double step,
                                        double horizon) {
    if (z0.size() != f.dim()) throw std::invalid_argument("integrate: state dimension does not match field");
    if (!z0.allFinite()) throw std::invalid_argument("integrate: initial state is not finite");
    const int n = step_count(horizon, step);
    const double h = n ? horizon / n : step;
    auto [samples, diverged] = rk4_samples<cplx>(
        [&f](std::span<const cplx> x, std::span<cplx> dx) {
            for (int r = 0; r < f.dim(); ++r) dx[static_cast<std::size_t>(r)] = f.row(r).evaluate(x);
        },
        std::vector<cplx>(z0.data(), z0.data() + z0.size()), h, n);
    (void)diverged;
    std::vector<Eigen::VectorXcd> out;
    out.reserve(samples.size());
    for (const auto& s : samples)
        out.push_back(Eigen::Map<const Eigen::VectorXcd>(s.data(), static_cast<Eigen::Index>(s.size())));
    return out;
}

ContingencyRun run_contingency_full(const Scenario& scn) {
    scn.validate();
    const int m = scn.prefault.size();
    ContingencyRun run;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m);
    run.prefault_sep = find_equilibrium(scn.prefault, std::span<const double>(zero.data(), static_cast<std::size_t>(m)));
    run.postfault_sep = find_equilibrium(
        scn.postfault, std::span<const double>(run.prefault_sep.delta.data(), static_cast<std::size_t>(m)));

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2 * m);
    x0.head(m) = run.prefault_sep.delta;
    run.faulton = integrate(scn.faulton, x0, scn.step, scn.clearing_time);
    run.faulton.frame = "delta";

    Eigen::VectorXd sep = Eigen::VectorXd::Zero(2 * m);
    sep.head(m) = run.postfault_sep.delta;
    if (run.faulton.diverged) {
        // Diverged during the fault: report the truncated fault-on segment.
        run.postfault = run.faulton;
        run.postfault.states.rowwise() -= sep.transpose();
    } else {
        const Eigen::VectorXd xc = run.faulton.states.row(run.faulton.samples() - 1).transpose();
        run.postfault = integrate(scn.postfault, xc, scn.step, scn.horizon - scn.clearing_time, scn.clearing_time);
        run.postfault.states.rowwise() -= sep.transpose();
    }
    run.postfault.frame = "delta";
    run.postfault.sep = sep;
    run.postfault.source = scn.id.empty() ? scn.postfault.id() : scn.id;
    return run;
}

Trajectory run_contingency(const Scenario& scn) { return run_contingency_full(scn).postfault; }

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
    os << "# frame=" << t.frame;
    if (!t.source.empty()) os << " source=" << t.source;
    if (t.diverged) os << " diverged=1";
    os << '\n' << "t";
    for (int j = 0; j < t.dim(); ++j) os << ", x" << j + 1;
    if (!t.valid.empty()) os << ", valid";
    os << '\n' << std::setprecision(17);
    for (int i = 0; i < t.samples(); ++i) {
        os << t.times[static_cast<std::size_t>(i)];
        for (int j = 0; j < t.dim(); ++j) os << ", " << t.states(i, j);
        if (!t.valid.empty()) os << ", " << int(t.valid[static_cast<std::size_t>(i)]);
        os << '\n';
    }
}

Trajectory read_trajectory_csv(std::istream& is) {
    Trajectory t;
    std::string line;
    std::vector<std::vector<double>> rows;
    bool has_valid = false;
    int dim = -1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string tok;
            while (ls >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
                if (key == "frame") t.frame = val;
                if (key == "source") t.source = val;
                if (key == "diverged") t.diverged = val == "1";
            }
            continue;
        }
        if (line[0] == 't') {
            has_valid = line.find("valid") != std::string::npos;
            continue;
        }
        std::vector<double> vals;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
        if (dim < 0) dim = static_cast<int>(vals.size());
        if (static_cast<int>(vals.size()) != dim) throw std::runtime_error("trajectory csv: ragged row");
        rows.push_back(std::move(vals));
    }
    const int cols = std::max(0, dim - 1 - (has_valid ? 1 : 0));
    t.states.resize(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        t.times.push_back(rows[i][0]);
        for (int j = 0; j < cols; ++j) t.states(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j) + 1];
        if (has_valid) t.valid.push_back(static_cast<char>(rows[i].back() != 0.0));
    }
    return t;
}

}  // namespace nmdtsa
