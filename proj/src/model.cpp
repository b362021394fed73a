#include "nmdtsa/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace nmdtsa {

namespace {

void require_length(std::span<const double> v, int n, const char* what) {
    if (static_cast<int>(v.size()) != n) {
        std::ostringstream os;
        os << what << ": expected length " << n << ", got " << v.size();
        throw std::invalid_argument(os.str());
    }
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

ClassicalSystem::ClassicalSystem(std::vector<Machine> machines, ReducedNetwork network, double omega_s,
                                 std::string id)
    : machines_(std::move(machines)), network_(std::move(network)), omega_s_(omega_s), id_(std::move(id)) {
    const int m = static_cast<int>(machines_.size());
    if (m < 2) throw std::invalid_argument("classical system needs at least 2 machines");
    if (network_.size() != m || network_.a.rows() != m || network_.a.cols() != m || network_.b.rows() != m ||
        network_.b.cols() != m)
        throw std::invalid_argument("network dimension does not match machine count " + std::to_string(m));
    if (!network_.g.allFinite() || !all_finite(network_.a) || !all_finite(network_.b))
        throw std::invalid_argument("network parameters must be finite");
    for (int i = 0; i < m; ++i)
        if (network_.a(i, i) != 0.0 || network_.b(i, i) != 0.0)
            throw std::invalid_argument("network a/b diagonal must be zero (machine " + std::to_string(i + 1) + ")");
    for (const auto& mc : machines_) {
        if (!(mc.inertia_H > 0.0)) throw std::invalid_argument("machine " + mc.id + ": H must be positive");
        if (!(mc.emf_E > 0.0)) throw std::invalid_argument("machine " + mc.id + ": E must be positive");
        if (!(mc.damping_D >= 0.0)) throw std::invalid_argument("machine " + mc.id + ": D must be nonnegative");
        if (!std::isfinite(mc.pmech)) throw std::invalid_argument("machine " + mc.id + ": Pm must be finite");
    }
    if (!(omega_s_ > 0.0)) throw std::invalid_argument("omega_s must be positive");
}

ClassicalSystem ClassicalSystem::with_uniform_damping(double gamma) const {
    auto machines = machines_;
    for (auto& mc : machines) mc.damping_D = gamma * mc.M();
    return ClassicalSystem(std::move(machines), network_, omega_s_, id_);
}

void Scenario::validate() const {
    const int m = prefault.size();
    if (faulton.size() != m || postfault.size() != m)
        throw std::invalid_argument("scenario systems differ in machine count");
    if (faulton.omega_s() != prefault.omega_s() || postfault.omega_s() != prefault.omega_s())
        throw std::invalid_argument("scenario systems differ in omega_s");
    if (!(clearing_time >= 0.0) || !(clearing_time < horizon))
        throw std::invalid_argument("scenario requires 0 <= clearing_time < horizon");
    if (!(step > 0.0)) throw std::invalid_argument("scenario step must be positive");
}

Eigen::VectorXd electrical_power(const ClassicalSystem& sys, std::span<const double> delta) {
    const int m = sys.size();
    require_length(delta, m, "electrical_power");
    const auto& net = sys.network();
    Eigen::VectorXd pe(m);
    for (int i = 0; i < m; ++i) {
        const double e = sys.machine(i).emf_E;
        double p = e * e * net.g(i);
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            const double t = delta[i] - delta[j];
            p += net.a(i, j) * std::sin(t) + net.b(i, j) * std::cos(t);
        }
        pe(i) = p;
    }
    return pe;
}

void swing_rhs(const ClassicalSystem& sys, std::span<const double> state, std::span<double> out) {
    const int m = sys.size();
    require_length(state, 2 * m, "swing_rhs state");
    if (static_cast<int>(out.size()) != 2 * m) throw std::invalid_argument("swing_rhs: output length mismatch");
    const Eigen::VectorXd pe = electrical_power(sys, state.first(static_cast<std::size_t>(m)));
    for (int i = 0; i < m; ++i) {
        const auto& mc = sys.machine(i);
        const double speed = state[m + i];
        out[i] = speed;
        out[m + i] = -(mc.damping_D / mc.M()) * speed - (sys.omega_s() / mc.M()) * (pe(i) - mc.pmech);
    }
}

Eigen::VectorXd swing_rhs(const ClassicalSystem& sys, std::span<const double> state) {
    Eigen::VectorXd out(2 * sys.size());
    swing_rhs(sys, state, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
}

Eigen::MatrixXd power_jacobian(const ClassicalSystem& sys, std::span<const double> delta) {
    const int m = sys.size();
    require_length(delta, m, "power_jacobian");
    const auto& net = sys.network();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            const double t = delta[i] - delta[j];
            const double d = net.a(i, j) * std::cos(t) - net.b(i, j) * std::sin(t);
            k(i, i) += d;
            k(i, j) -= d;
        }
    }
    return k;
}

Eigen::MatrixXd swing_jacobian(const ClassicalSystem& sys, std::span<const double> delta) {
    const int m = sys.size();
    const Eigen::MatrixXd k = power_jacobian(sys, delta);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    a.topRightCorner(m, m).setIdentity();
    for (int i = 0; i < m; ++i) {
        const auto& mc = sys.machine(i);
        a.row(m + i).head(m) = -(sys.omega_s() / mc.M()) * k.row(i);
        a(m + i, m + i) = -mc.damping_D / mc.M();
    }
    return a;
}

KronReduction kron_reduce(const KronInput& in, std::span<const double> emf) {
    const Eigen::MatrixXcd& y = in.bus_admittance;
    if (y.rows() != y.cols()) throw std::invalid_argument("kron_reduce: bus admittance must be square");
    const int nbus = static_cast<int>(y.rows());
    const int m = static_cast<int>(in.machine_nodes.size());
    if (m == 0) throw std::invalid_argument("kron_reduce: no machine nodes");
    require_length(emf, m, "kron_reduce emf");
    const bool internal = in.machine_reactances.empty();
    if (!internal && static_cast<int>(in.machine_reactances.size()) != m)
        throw std::invalid_argument("kron_reduce: machine_reactances length mismatch");
    for (int node : in.machine_nodes)
        if (node < 0 || node >= nbus) throw std::invalid_argument("kron_reduce: machine node out of range");
    for (int node : in.grounded_buses)
        if (node < 0 || node >= nbus) throw std::invalid_argument("kron_reduce: grounded bus out of range");

    // Augmented network: internal EMF nodes 0..m-1 first (when reactances are
    // given), then the buses.
    const int offset = internal ? 0 : m;
    const int n = nbus + offset;
    Eigen::MatrixXcd ya = Eigen::MatrixXcd::Zero(n, n);
    ya.bottomRightCorner(nbus, nbus) = y;
    std::vector<int> keep;
    if (internal) {
        keep = in.machine_nodes;
        auto sorted = keep;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("kron_reduce: duplicate machine node");
        for (int g : in.grounded_buses)
            if (std::binary_search(sorted.begin(), sorted.end(), g))
                throw std::invalid_argument("kron_reduce: machine node is grounded");
    } else {
        for (int i = 0; i < m; ++i) {
            const double x = in.machine_reactances[static_cast<std::size_t>(i)];
            if (!(x > 0.0)) throw std::invalid_argument("kron_reduce: machine reactance must be positive");
            const std::complex<double> ys = 1.0 / std::complex<double>(0.0, x);
            const int t = offset + in.machine_nodes[static_cast<std::size_t>(i)];
            ya(i, i) += ys;
            ya(t, t) += ys;
            ya(i, t) -= ys;
            ya(t, i) -= ys;
            keep.push_back(i);
        }
    }
    std::vector<char> dropped(static_cast<std::size_t>(n), 0);
    for (int g : in.grounded_buses) dropped[static_cast<std::size_t>(offset + g)] = 1;
    for (int k : keep) dropped[static_cast<std::size_t>(k)] = 1;
    std::vector<int> elim;
    for (int i = 0; i < n; ++i)
        if (!dropped[static_cast<std::size_t>(i)]) elim.push_back(i);

    const int ne = static_cast<int>(elim.size());
    Eigen::MatrixXcd ygg(m, m), ygb(m, ne), ybg(ne, m), ybb(ne, ne);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) ygg(i, j) = ya(keep[i], keep[j]);
        for (int j = 0; j < ne; ++j) {
            ygb(i, j) = ya(keep[i], elim[j]);
            ybg(j, i) = ya(elim[j], keep[i]);
        }
    }
    for (int i = 0; i < ne; ++i)
        for (int j = 0; j < ne; ++j) ybb(i, j) = ya(elim[i], elim[j]);

    KronReduction out;
    if (ne > 0) {
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(ybb);
        if (!lu.isInvertible() || std::abs(lu.rcond()) < 1e-14)
            throw std::runtime_error("kron_reduce: eliminated-node block is singular");
        out.reduced_admittance = ygg - ygb * lu.solve(ybg);
    } else {
        out.reduced_admittance = ygg;
    }

    const auto& yr = out.reduced_admittance;
    out.network.g.resize(m);
    out.network.a = Eigen::MatrixXd::Zero(m, m);
    out.network.b = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        out.network.g(i) = yr(i, i).real();
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            out.network.a(i, j) = emf[i] * emf[j] * yr(i, j).imag();
            out.network.b(i, j) = emf[i] * emf[j] * yr(i, j).real();
        }
    }
    out.mapping = "g_i = Re(Yred_ii); a_ij = E_i E_j Im(Yred_ij); b_ij = E_i E_j Re(Yred_ij)";
    return out;
}

EquilibriumResult find_equilibrium(const ClassicalSystem& sys, std::span<const double> guess,
                                   const EquilibriumOptions& opts) {
    const int m = sys.size();
    require_length(guess, m, "find_equilibrium guess");
    Eigen::VectorXd delta = Eigen::Map<const Eigen::VectorXd>(guess.data(), m);
    Eigen::VectorXd inv_m(m);
    for (int i = 0; i < m; ++i) inv_m(i) = 1.0 / sys.machine(i).M();

    auto mismatch = [&](const Eigen::VectorXd& d) {
        const Eigen::VectorXd pe = electrical_power(sys, std::span<const double>(d.data(), static_cast<std::size_t>(m)));
        Eigen::VectorXd acc(m);
        for (int i = 0; i < m; ++i) acc(i) = (sys.machine(i).pmech - pe(i)) * inv_m(i);
        return acc;
    };
    // Relative residual r_i = acc_i - acc_1 for i = 2..m.
    auto residual = [&](const Eigen::VectorXd& acc) {
        return Eigen::VectorXd(acc.tail(m - 1).array() - acc(0));
    };

    EquilibriumResult res;
    Eigen::VectorXd acc = mismatch(delta);
    Eigen::VectorXd r = residual(acc);
    auto newton_step = [&](const Eigen::VectorXd& d, const Eigen::VectorXd& rr) {
        const Eigen::MatrixXd k = power_jacobian(sys, std::span<const double>(d.data(), static_cast<std::size_t>(m)));
        // d acc_i / d delta_j = -K_ij / M_i; reference angle delta_1 fixed.
        Eigen::MatrixXd jac(m - 1, m - 1);
        for (int i = 1; i < m; ++i)
            for (int j = 1; j < m; ++j) jac(i - 1, j - 1) = -k(i, j) * inv_m(i) + k(0, j) * inv_m(0);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) throw std::runtime_error("find_equilibrium: singular Jacobian");
        Eigen::VectorXd next = d;
        next.tail(m - 1) += lu.solve(-rr);
        return next;
    };
    int it = 0;
    while (r.lpNorm<Eigen::Infinity>() >= opts.tolerance) {
        if (it >= opts.max_iterations)
            throw std::runtime_error("find_equilibrium: Newton did not converge in " +
                                     std::to_string(opts.max_iterations) + " iterations (residual " +
                                     std::to_string(r.lpNorm<Eigen::Infinity>()) + ")");
        delta = newton_step(delta, r);
        acc = mismatch(delta);
        r = residual(acc);
        ++it;
    }
    // Polish to rounding level so swing_rhs at the result is tiny once scaled by omega_s.
    for (int extra = 0; extra < 2 && m > 1; ++extra) {
        const Eigen::VectorXd trial = newton_step(delta, r);
        const Eigen::VectorXd acc_t = mismatch(trial);
        const Eigen::VectorXd r_t = residual(acc_t);
        if (!(r_t.lpNorm<Eigen::Infinity>() < r.lpNorm<Eigen::Infinity>())) break;
        delta = trial;
        acc = acc_t;
        r = r_t;
    }
    res.delta = delta;
    res.iterations = it;
    res.residual = r.lpNorm<Eigen::Infinity>();
    res.common_acceleration = sys.omega_s() * acc(0);

    const Eigen::MatrixXd a = swing_jacobian(sys, std::span<const double>(delta.data(), static_cast<std::size_t>(m)));
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    const double scale = std::max(1.0, a.lpNorm<Eigen::Infinity>());
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i).real() > 1e-8 * scale) res.stable = false;
    return res;
}

std::string DampingCheck::report() const {
    std::ostringstream os;
    if (uniform) {
        os << "uniform damping ratio gamma = " << gamma;
        if (forced) os << " (forced: inertia-weighted mean; original spread " << relative_spread << ")";
        return os.str();
    }
    os << "non-uniform damping (relative spread " << relative_spread << "); D_i/(2H_i) per machine:";
    for (std::size_t i = 0; i < ratios.size(); ++i) os << (i ? ", " : " ") << ratios[i];
    return os.str();
}

DampingCheck check_uniform_damping(const ClassicalSystem& sys, double rel_tol, bool force_uniform) {
    DampingCheck out;
    double sum_d = 0.0, sum_m = 0.0;
    for (const auto& mc : sys.machines()) {
        out.ratios.push_back(mc.damping_D / mc.M());
        sum_d += mc.damping_D;
        sum_m += mc.M();
    }
    const auto [lo, hi] = std::minmax_element(out.ratios.begin(), out.ratios.end());
    if (*hi == *lo)
        out.relative_spread = 0.0;
    else if (*lo > 0.0)
        out.relative_spread = (*hi - *lo) / *lo;
    else
        out.relative_spread = std::numeric_limits<double>::infinity();
    if (out.relative_spread <= rel_tol) {
        out.uniform = true;
        out.gamma = sum_d / sum_m;
    } else if (force_uniform) {
        out.uniform = true;
        out.forced = true;
        out.gamma = sum_d / sum_m;
    }
    return out;
}

}  // namespace nmdtsa
