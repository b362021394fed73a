#include "nmdtsa/nmd.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace nmdtsa {

using json = nlohmann::json;

Eigen::Matrix2cd TransformChain::real_transform(int pair) const {
    const cplx l = lambda.at(static_cast<std::size_t>(2 * pair));
    Eigen::Matrix2cd t;
    t << l, std::conj(l), 1.0, 1.0;
    return t;
}

std::string RealOscillator::table() const {
    std::ostringstream os;
    os.precision(10);
    os << "# mode " << mode << " lambda " << lambda.real() << (lambda.imag() < 0 ? " - " : " + ")
       << std::abs(lambda.imag()) << "j\n";
    os << "row j l coefficient\n";
    for (auto [j, l, c] : row1.terms()) os << "1 " << j << ' ' << l << ' ' << c << '\n';
    for (auto [j, l, c] : row2.terms()) os << "2 " << j << ' ' << l << ' ' << c << '\n';
    return os.str();
}

Polynomial<cplx> homological_solve(const Polynomial<cplx>& terms, const std::vector<cplx>& lambda, int row,
                                   const HomologicalOptions& opts) {
    const cplx lr = lambda.at(static_cast<std::size_t>(row));
    Polynomial<cplx> h;
    for (const auto& [m, c] : terms.terms()) {
        if (is_intra_modal(m, row / 2)) continue;
        cplx sum = 0.0;
        for (auto v : m.vars()) sum += lambda.at(v);
        const cplx denom = sum - lr;
        if (std::abs(denom) <= opts.resonance_tol * std::abs(lr)) {
            std::ostringstream os;
            os << "resonance: monomial " << m.to_string() << " in row " << row << " has <alpha, lambda> - lambda_r = "
               << denom;
            throw std::runtime_error(os.str());
        }
        h.add(m, c / denom);
    }
    return h;
}

NmdResult nmd_decouple(const ComplexModalSystem& sys, int k, const HomologicalOptions& opts) {
    if (k < 2) throw std::invalid_argument("nmd_decouple: order must be at least 2");
    if (k > sys.field.order())
        throw std::invalid_argument("nmd_decouple: order " + std::to_string(k) + " exceeds field order " +
                                    std::to_string(sys.field.order()));
    const int n = sys.field.dim();
    NmdResult out;
    ComplexField g = sys.field.truncated(k);
    const double scale = std::max(1.0, g.max_abs_coeff());
    for (int r = 0; r < n; ++r)
        for (const auto& [m, c] : g.row(r).terms())
            if (m.degree() == 1 && (m.vars()[0] != r || std::abs(c - sys.lambda[static_cast<std::size_t>(r)]) > 1e-8 * scale))
                throw std::invalid_argument("nmd_decouple: linear part is not diagonal");

    for (int deg = 2; deg <= k; ++deg) {
        HomogeneousMap h{deg, ComplexField(n, k)};
        h.rows.set_conjugate_paired(true);
        bool any = false;
        for (int r = 0; r < n; ++r) {
            h.rows.row(r) = homological_solve(g.row(r).homogeneous_part(deg), sys.lambda, r, opts);
            any = any || !h.rows.row(r).empty();
        }
        if (any) {
            g = compose_near_identity(g, h, ComposeDirection::to_new);
            // The cancelled coefficients are left at rounding level; remove them.
            for (int r = 0; r < n; ++r) {
                std::vector<Monomial> drop;
                for (const auto& [m, c] : g.row(r).terms())
                    if (m.degree() == deg && !is_intra_modal(m, r / 2)) {
                        if (std::abs(c) > 1e-9 * scale)
                            throw std::runtime_error("nmd_decouple: inter-modal term survived cancellation");
                        drop.push_back(m);
                    }
                for (const auto& m : drop) g.row(r).erase(m);
            }
        }
        out.chain.maps.push_back(std::move(h));
    }

    out.chain.T = sys.T;
    out.chain.S = sys.S;
    out.chain.lambda = sys.lambda;
    out.chain.mode_ids = sys.mode_ids;
    out.chain.order = k;
    out.decoupled = sys;
    out.decoupled.field = std::move(g);
    out.decoupled.field.set_conjugate_paired(true);
    return out;
}

RealOscillator to_real_oscillator(const ComplexField& pair_field, cplx lambda, int mode, double imag_tol) {
    if (pair_field.dim() != 2) throw std::invalid_argument("to_real_oscillator: pair field must have dimension 2");
    if (lambda.imag() == 0.0) throw std::invalid_argument("to_real_oscillator: eigenvalue has zero imaginary part");
    Eigen::Matrix2cd t;
    t << lambda, std::conj(lambda), 1.0, 1.0;
    const ComplexField w = substitute_linear(pair_field, Eigen::MatrixXcd(t.inverse()));

    const double scale = std::max(1.0, w.max_abs_coeff());
    RealOscillator osc;
    osc.mode = mode;
    osc.lambda = lambda;
    osc.order = pair_field.order();
    osc.row1 = BiPoly(osc.order);
    osc.row2 = BiPoly(osc.order);
    for (int r = 0; r < 2; ++r) {
        for (const auto& [m, c] : w.row(r).terms()) {
            if (std::abs(c.imag()) > imag_tol * scale) {
                std::ostringstream os;
                os << "to_real_oscillator: imaginary residue " << c.imag() << " on " << m.to_string() << " in row "
                   << r + 1;
                throw std::runtime_error(os.str());
            }
            const auto e = m.exponents(2);
            (r == 0 ? osc.row1 : osc.row2).set(e[0], e[1], c.real());
        }
    }
    if (std::abs(osc.row2.coeff(1, 0) - 1.0) > 1e-8 || std::abs(osc.row2.coeff(0, 1)) > 1e-8 * scale)
        throw std::runtime_error("to_real_oscillator: second row linear part is not w1");
    osc.row2.set(1, 0, 1.0);
    osc.row2.set(0, 1, 0.0);
    return osc;
}

RealOscillator to_real_oscillator(const ComplexModalSystem& decoupled, int pair, double imag_tol) {
    if (pair < 0 || pair >= decoupled.pairs()) throw std::out_of_range("to_real_oscillator: pair index");
    ComplexField f(2, decoupled.field.order());
    for (int s = 0; s < 2; ++s)
        for (const auto& [m, c] : decoupled.field.row(2 * pair + s).terms()) {
            if (!is_intra_modal(m, pair)) {
                if (std::abs(c) > 1e-12 * std::max(1.0, decoupled.field.max_abs_coeff()))
                    throw std::invalid_argument("to_real_oscillator: pair is not decoupled (" + m.to_string() + ")");
                continue;
            }
            f.row(s).add(m.relabeled([&](int v) { return v - 2 * pair; }), c);
        }
    return to_real_oscillator(f, decoupled.lambda[static_cast<std::size_t>(2 * pair)],
                              decoupled.mode_ids[static_cast<std::size_t>(pair)], imag_tol);
}

namespace {

Eigen::VectorXcd eval_map(const HomogeneousMap& h, const Eigen::VectorXcd& z) {
    std::span<const cplx> pt(z.data(), static_cast<std::size_t>(z.size()));
    Eigen::VectorXcd out(z.size());
    for (int r = 0; r < h.rows.dim(); ++r) out(r) = h.rows.row(r).evaluate(pt);
    return out;
}

}  // namespace

Eigen::VectorXcd chain_to_modal(const TransformChain& c, const Eigen::VectorXcd& z) {
    Eigen::VectorXcd y = z;
    for (auto it = c.maps.rbegin(); it != c.maps.rend(); ++it)
        if (it->rows.term_count() > 0) y += eval_map(*it, y);
    return y;
}

Eigen::VectorXd chain_forward(const TransformChain& c, const Eigen::VectorXcd& z) {
    return (c.T * chain_to_modal(c, z)).real();
}

namespace {

// Newton solver for u + h(u) = x, one per map of the chain. The plain
// fixed-point u = x - h(u) diverges once h is comparable to u, which happens
// at moderate amplitudes when two modes are close to a 2:1 resonance.
class ChainInverter {
public:
    explicit ChainInverter(const TransformChain& c) : c_(c) {
        const int n = c.dim();
        jac_.resize(c.maps.size());
        for (std::size_t k = 0; k < c.maps.size(); ++k) {
            if (c.maps[k].rows.term_count() == 0) continue;
            auto& J = jac_[k];
            J.resize(static_cast<std::size_t>(n * n));
            for (int r = 0; r < n; ++r)
                for (int v = 0; v < n; ++v)
                    J[static_cast<std::size_t>(r * n + v)] = c.maps[k].rows.row(r).derivative(v);
        }
    }

    std::optional<Eigen::VectorXcd> operator()(const Eigen::VectorXd& delta, const ProjectionOptions& opts) const {
        if (delta.size() != c_.S.cols()) throw std::invalid_argument("chain_inverse: state dimension mismatch");
        Eigen::VectorXcd x = c_.S * delta.cast<cplx>();
        for (std::size_t k = 0; k < c_.maps.size(); ++k) {
            if (c_.maps[k].rows.term_count() == 0) continue;
            auto u = solve(k, x, opts);
            if (!u) return std::nullopt;
            x = *u;
        }
        return x;
    }

private:
    std::optional<Eigen::VectorXcd> solve(std::size_t k, const Eigen::VectorXcd& x, const ProjectionOptions& opts) const {
        const HomogeneousMap& h = c_.maps[k];
        const int n = c_.dim();
        const double tol = opts.tolerance * std::max(1.0, x.norm());
        Eigen::VectorXcd u = x;
        Eigen::VectorXcd F = eval_map(h, u);  // residual u + h(u) - x
        double res = F.norm();
        Eigen::MatrixXcd J(n, n);
        for (int it = 0; it < opts.max_iterations; ++it) {
            if (!F.allFinite()) return std::nullopt;
            if (res <= tol) return u;
            std::span<const cplx> pt(u.data(), static_cast<std::size_t>(n));
            J.setIdentity();
            for (int r = 0; r < n; ++r)
                for (int v = 0; v < n; ++v) J(r, v) += jac_[k][static_cast<std::size_t>(r * n + v)].evaluate(pt);
            const Eigen::VectorXcd du = J.partialPivLu().solve(F);
            if (!du.allFinite()) return std::nullopt;
            // Backtracking on the residual norm.
            double step = 1.0;
            Eigen::VectorXcd trial;
            Eigen::VectorXcd Ft;
            for (;;) {
                trial = u - step * du;
                Ft = trial + eval_map(h, trial) - x;
                if (Ft.norm() <= (1.0 - 0.5 * step) * res || step < 1.0 / 1024) break;
                step *= 0.5;
            }
            u = trial;
            F = Ft;
            res = F.norm();
        }
        return res <= tol ? std::optional<Eigen::VectorXcd>(u) : std::nullopt;
    }

    const TransformChain& c_;
    std::vector<std::vector<Polynomial<cplx>>> jac_;
};

}  // namespace

std::optional<Eigen::VectorXcd> chain_inverse(const TransformChain& c, const Eigen::VectorXd& delta,
                                              const ProjectionOptions& opts) {
    return ChainInverter(c)(delta, opts);
}

ProjectedSample pair_coordinates(const TransformChain& c, const Eigen::VectorXcd& z, int pair) {
    const cplx l = c.lambda.at(static_cast<std::size_t>(2 * pair));
    const cplx a = z(2 * pair), b = z(2 * pair + 1);
    return {(l * a + std::conj(l) * b).real(), (a + b).real(), true};
}

std::vector<Trajectory> project_trajectory_all(const TransformChain& c, const Trajectory& traj,
                                               const ProjectionOptions& opts) {
    if (traj.dim() != c.S.cols())
        throw std::invalid_argument("project_trajectory: trajectory dimension " + std::to_string(traj.dim()) +
                                    " does not match the chain (" + std::to_string(c.S.cols()) + ")");
    const int pairs = static_cast<int>(c.mode_ids.size());
    const int ns = traj.samples();
    std::vector<Trajectory> out(static_cast<std::size_t>(pairs));
    for (auto& t : out) {
        t.times = traj.times;
        t.states = Eigen::MatrixXd::Zero(ns, 2);
        t.frame = "w";
        t.source = traj.source;
        t.diverged = traj.diverged;
        t.valid.assign(static_cast<std::size_t>(ns), 1);
    }
    const ChainInverter inverse(c);
    for (int s = 0; s < ns; ++s) {
        std::optional<Eigen::VectorXcd> z;
        if (traj.sample_valid(s) && traj.states.row(s).allFinite())
            z = inverse(traj.states.row(s).transpose(), opts);
        for (int p = 0; p < pairs; ++p) {
            auto& t = out[static_cast<std::size_t>(p)];
            if (!z) {
                t.valid[static_cast<std::size_t>(s)] = 0;
                t.states.row(s).setConstant(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            const auto w = pair_coordinates(c, *z, p);
            t.states(s, 0) = w.w1;
            t.states(s, 1) = w.w2;
        }
    }
    return out;
}

Trajectory project_trajectory(const TransformChain& c, const Trajectory& traj, int pair,
                              const ProjectionOptions& opts) {
    if (pair < 0 || pair >= static_cast<int>(c.mode_ids.size()))
        throw std::out_of_range("project_trajectory: pair index");
    auto all = project_trajectory_all(c, traj, opts);
    return std::move(all[static_cast<std::size_t>(pair)]);
}

namespace {

json matrix_to_json(const Eigen::MatrixXcd& m) {
    json re = json::array(), im = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json rr = json::array(), ri = json::array();
        for (int j = 0; j < m.cols(); ++j) {
            rr.push_back(m(i, j).real());
            ri.push_back(m(i, j).imag());
        }
        re.push_back(rr);
        im.push_back(ri);
    }
    return {{"re", re}, {"im", im}};
}

Eigen::MatrixXcd matrix_from_json(const json& j) {
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    const int rows = static_cast<int>(re.size());
    const int cols = rows ? static_cast<int>(re[0].size()) : 0;
    Eigen::MatrixXcd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int k = 0; k < cols; ++k) m(i, k) = cplx(re[i][k].get<double>(), im[i][k].get<double>());
    return m;
}

}  // namespace

void to_json(json& j, const TransformChain& c) {
    json maps = json::array();
    for (const auto& h : c.maps) {
        json terms = json::array();
        for (int r = 0; r < h.rows.dim(); ++r)
            for (const auto& [m, v] : h.rows.row(r).terms()) {
                std::vector<int> vars(m.vars().begin(), m.vars().end());
                terms.push_back({r, vars, v.real(), v.imag()});
            }
        maps.push_back({{"degree", h.degree}, {"terms", terms}});
    }
    json lam = json::array();
    for (const auto& l : c.lambda) lam.push_back({l.real(), l.imag()});
    j = {{"order", c.order},   {"T", matrix_to_json(c.T)}, {"S", matrix_to_json(c.S)}, {"lambda", lam},
         {"mode_ids", c.mode_ids}, {"sep", std::vector<double>(c.sep.data(), c.sep.data() + c.sep.size())},
         {"maps", maps}};
}

void from_json(const json& j, TransformChain& c) {
    c.order = j.at("order").get<int>();
    c.T = matrix_from_json(j.at("T"));
    c.S = matrix_from_json(j.at("S"));
    c.lambda.clear();
    for (const auto& l : j.at("lambda")) c.lambda.emplace_back(l[0].get<double>(), l[1].get<double>());
    c.mode_ids = j.at("mode_ids").get<std::vector<int>>();
    const auto sep = j.at("sep").get<std::vector<double>>();
    c.sep = Eigen::Map<const Eigen::VectorXd>(sep.data(), static_cast<Eigen::Index>(sep.size()));
    c.maps.clear();
    const int n = static_cast<int>(c.lambda.size());
    for (const auto& jm : j.at("maps")) {
        HomogeneousMap h{jm.at("degree").get<int>(), ComplexField(n, c.order)};
        h.rows.set_conjugate_paired(true);
        for (const auto& t : jm.at("terms")) {
            const auto vars = t[1].get<std::vector<int>>();
            h.rows.add_term(t[0].get<int>(), Monomial::from_vars(std::span<const int>(vars)),
                            cplx(t[2].get<double>(), t[3].get<double>()));
        }
        c.maps.push_back(std::move(h));
    }
}

}  // namespace nmdtsa
