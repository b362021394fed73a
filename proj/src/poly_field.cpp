#include "nmdtsa/poly_field.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "nmdtsa/model.hpp"

namespace nmdtsa {

namespace {

using CPoly = Polynomial<cplx>;

std::vector<CPoly> linear_map(const Eigen::MatrixXcd& t) {
    std::vector<CPoly> map(static_cast<std::size_t>(t.rows()));
    for (int v = 0; v < t.rows(); ++v)
        for (int j = 0; j < t.cols(); ++j)
            if (t(v, j) != cplx(0.0)) map[static_cast<std::size_t>(v)].add(Monomial::variable(j), t(v, j));
    return map;
}

// Sparse Jacobian of a homogeneous map: jac[r] = list of (var, dh_r/dvar).
std::vector<std::vector<std::pair<int, CPoly>>> jacobian(const HomogeneousMap& h) {
    const int n = h.rows.dim();
    std::vector<std::vector<std::pair<int, CPoly>>> jac(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        for (const auto& kv : h.rows.row(r).terms())
            for (auto v : kv.first.vars()) seen[v] = 1;
        for (int v = 0; v < n; ++v)
            if (seen[static_cast<std::size_t>(v)])
                jac[static_cast<std::size_t>(r)].emplace_back(v, h.rows.row(r).derivative(v));
    }
    return jac;
}

// out_r = sum_v (dh_r/du_v) * g_v, truncated at max_degree.
std::vector<CPoly> jacobian_apply(const std::vector<std::vector<std::pair<int, CPoly>>>& jac,
                                  const std::vector<CPoly>& g, int max_degree) {
    std::vector<CPoly> out(jac.size());
    for (std::size_t r = 0; r < jac.size(); ++r) {
        for (const auto& [v, dh] : jac[r]) out[r] += multiply(dh, g[static_cast<std::size_t>(v)], max_degree);
        out[r].prune();
    }
    return out;
}

void check_map(const HomogeneousMap& h, int dim) {
    if (h.rows.dim() != dim) throw std::invalid_argument("homogeneous map dimension does not match field");
    for (const auto& row : h.rows.rows())
        for (const auto& kv : row.terms())
            if (kv.first.degree() != h.degree)
                throw std::invalid_argument("homogeneous map has a term of degree " +
                                            std::to_string(kv.first.degree()) + ", expected " +
                                            std::to_string(h.degree));
}

int cascade_rounds(int order, int degree) {
    const int p = degree - 1;
    return (order + p - 1) / p + 1;
}

template <class S>
std::string format_coeff(S c) {
    std::ostringstream os;
    os << std::setprecision(17);
    if constexpr (is_complex<S>::value)
        os << c.real() << ' ' << c.imag();
    else
        os << c;
    return os.str();
}

}  // namespace

double conjugate_pairing_defect(const ComplexField& f) {
    if (f.dim() % 2 != 0) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (int r = 0; r < f.dim(); ++r) {
        const auto& partner = f.row(conjugate_index(r));
        for (const auto& [m, c] : f.row(r).terms()) {
            const cplx p = partner.coeff(m.relabeled([](int v) { return conjugate_index(v); }));
            worst = std::max(worst, std::abs(p - std::conj(c)));
        }
    }
    return worst / std::max(1.0, f.max_abs_coeff());
}

ComplexField to_complex(const RealField& f) {
    ComplexField out(f.dim(), f.order());
    for (int r = 0; r < f.dim(); ++r) out.row(r) = f.row(r).cast<cplx>();
    return out;
}

RealField real_part(const ComplexField& f) {
    RealField out(f.dim(), f.order());
    for (int r = 0; r < f.dim(); ++r) {
        out.row(r) = f.row(r).cast<double>();
        out.row(r).prune();
    }
    return out;
}

ComplexField pull_back(const ComplexField& f, const Eigen::MatrixXcd& t, const Eigen::MatrixXcd& s) {
    if (t.rows() != f.dim()) throw std::invalid_argument("pull_back: T rows must equal field dimension");
    if (s.cols() != f.dim() || s.rows() != t.cols())
        throw std::invalid_argument("pull_back: S must be n x N with n = T columns");
    const int n = static_cast<int>(t.cols());
    const auto map = linear_map(t);
    PolynomialComposer<cplx> composer(map, f.order());
    std::vector<CPoly> image(static_cast<std::size_t>(f.dim()));
    std::vector<char> needed(static_cast<std::size_t>(f.dim()), 0);
    for (int v = 0; v < f.dim(); ++v)
        for (int r = 0; r < n; ++r)
            if (s(r, v) != cplx(0.0)) needed[static_cast<std::size_t>(v)] = 1;
    for (int v = 0; v < f.dim(); ++v)
        if (needed[static_cast<std::size_t>(v)] && !f.row(v).empty())
            image[static_cast<std::size_t>(v)] = composer.compose(f.row(v));

    ComplexField out(n, f.order());
    for (int r = 0; r < n; ++r) {
        auto& row = out.row(r);
        for (int v = 0; v < f.dim(); ++v)
            if (s(r, v) != cplx(0.0)) row.add_scaled(image[static_cast<std::size_t>(v)], s(r, v));
        row.prune();
    }
    return out;
}

ComplexField pull_back(const RealField& f, const Eigen::MatrixXcd& t, const Eigen::MatrixXcd& s) {
    return pull_back(to_complex(f), t, s);
}

namespace {

Eigen::MatrixXcd checked_inverse(const Eigen::MatrixXcd& t) {
    if (t.rows() != t.cols()) throw std::invalid_argument("substitute_linear: T must be square");
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(t);
    if (!lu.isInvertible() || lu.rcond() < 1e-13) throw std::invalid_argument("substitute_linear: T is singular");
    return lu.inverse();
}

}  // namespace

ComplexField substitute_linear(const ComplexField& f, const Eigen::MatrixXcd& t) {
    return pull_back(f, t, checked_inverse(t));
}

ComplexField substitute_linear(const RealField& f, const Eigen::MatrixXcd& t) {
    return pull_back(to_complex(f), t, checked_inverse(t));
}

RealField substitute_linear(const RealField& f, const Eigen::MatrixXd& t) {
    const Eigen::MatrixXcd tc = t.cast<cplx>();
    return real_part(pull_back(to_complex(f), tc, checked_inverse(tc)));
}

std::vector<CPoly> invert_near_identity(const HomogeneousMap& h, int dim, int max_degree) {
    check_map(h, dim);
    std::vector<CPoly> psi(static_cast<std::size_t>(dim));
    for (int v = 0; v < dim; ++v) psi[static_cast<std::size_t>(v)] = CPoly::variable(v);
    const int rounds = cascade_rounds(max_degree, h.degree);
    for (int it = 0; it < rounds; ++it) {
        PolynomialComposer<cplx> composer(psi, max_degree);
        std::vector<CPoly> next(static_cast<std::size_t>(dim));
        for (int v = 0; v < dim; ++v) {
            next[static_cast<std::size_t>(v)] = CPoly::variable(v);
            next[static_cast<std::size_t>(v)] -= composer.compose(h.rows.row(v));
            next[static_cast<std::size_t>(v)].prune();
        }
        psi = std::move(next);
    }
    return psi;
}

ComplexField compose_near_identity(const ComplexField& f, const HomogeneousMap& h, ComposeDirection dir) {
    const int n = f.dim();
    const int k = f.order();
    if (h.degree < 2 || h.degree > k)
        throw std::invalid_argument("compose_near_identity: map degree " + std::to_string(h.degree) +
                                    " outside [2, " + std::to_string(k) + "]");
    check_map(h, n);
    const auto jac = jacobian(h);

    ComplexField out(n, k);
    out.set_conjugate_paired(f.conjugate_paired());
    if (dir == ComposeDirection::to_new) {
        // u' = (I + Dh(u))^{-1} f(u + h(u))
        std::vector<CPoly> map(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) {
            map[static_cast<std::size_t>(v)] = CPoly::variable(v);
            map[static_cast<std::size_t>(v)] += h.rows.row(v);
        }
        PolynomialComposer<cplx> composer(map, k);
        std::vector<CPoly> rhs(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) rhs[static_cast<std::size_t>(v)] = composer.compose(f.row(v));
        std::vector<CPoly> g = rhs;
        const int rounds = cascade_rounds(k, h.degree);
        for (int it = 0; it < rounds; ++it) {
            const auto corr = jacobian_apply(jac, g, k);
            for (int v = 0; v < n; ++v) {
                g[static_cast<std::size_t>(v)] = rhs[static_cast<std::size_t>(v)];
                g[static_cast<std::size_t>(v)] -= corr[static_cast<std::size_t>(v)];
                g[static_cast<std::size_t>(v)].prune();
            }
        }
        out.rows() = std::move(g);
    } else {
        // z' = (I + Dh(u)) g(u) at u = (I + h)^{-1}(z)
        const auto corr = jacobian_apply(jac, f.rows(), k);
        std::vector<CPoly> pushed = f.rows();
        for (int v = 0; v < n; ++v) pushed[static_cast<std::size_t>(v)] += corr[static_cast<std::size_t>(v)];
        const auto psi = invert_near_identity(h, n, k);
        PolynomialComposer<cplx> composer(psi, k);
        for (int v = 0; v < n; ++v) out.row(v) = composer.compose(pushed[static_cast<std::size_t>(v)]);
    }
    out.prune();
    return out;
}

RealField taylor_expand(const ClassicalSystem& sys, std::span<const double> center, int order) {
    const int m = sys.size();
    if (order < 2) throw std::invalid_argument("taylor_expand: order must be at least 2");
    if (static_cast<int>(center.size()) != 2 * m)
        throw std::invalid_argument("taylor_expand: center must have length 2m");
    const Eigen::VectorXd f0 = swing_rhs(sys, center);
    const double acc_lo = f0.tail(m).minCoeff();
    const double acc_hi = f0.tail(m).maxCoeff();
    const double tol = 1e-9 * std::max(1.0, f0.tail(m).cwiseAbs().maxCoeff());
    if (f0.head(m).lpNorm<Eigen::Infinity>() > 1e-9 || acc_hi - acc_lo > tol) {
        std::ostringstream os;
        os << "taylor_expand: center is not an equilibrium of the relative motion (speed residual "
           << f0.head(m).lpNorm<Eigen::Infinity>() << ", acceleration spread " << acc_hi - acc_lo << ")";
        throw std::invalid_argument(os.str());
    }

    const auto& net = sys.network();
    RealField f(2 * m, order);
    std::vector<double> factorial(static_cast<std::size_t>(order) + 1, 1.0);
    for (int n = 1; n <= order; ++n) factorial[static_cast<std::size_t>(n)] = factorial[static_cast<std::size_t>(n) - 1] * n;
    auto binom = [&](int n, int r) {
        return factorial[static_cast<std::size_t>(n)] /
               (factorial[static_cast<std::size_t>(r)] * factorial[static_cast<std::size_t>(n - r)]);
    };

    for (int i = 0; i < m; ++i) {
        f.add_term(i, Monomial::variable(m + i), 1.0);
        const auto& mc = sys.machine(i);
        const double scale = -sys.omega_s() / mc.M();
        f.add_term(m + i, Monomial::variable(m + i), -mc.damping_D / mc.M());
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            const double theta = center[i] - center[j];
            for (int n = 1; n <= order; ++n) {
                // n-th derivatives of sin and cos: shift the argument by n*pi/2.
                const double shift = n * std::numbers::pi / 2.0;
                const double dn = net.a(i, j) * std::sin(theta + shift) + net.b(i, j) * std::cos(theta + shift);
                const double c = scale * dn / factorial[static_cast<std::size_t>(n)];
                if (c == 0.0) continue;
                // (x_i - x_j)^n expanded binomially.
                for (int r = 0; r <= n; ++r) {
                    const double sign = ((n - r) % 2 == 0) ? 1.0 : -1.0;
                    std::vector<int> vars(static_cast<std::size_t>(r), i);
                    vars.insert(vars.end(), static_cast<std::size_t>(n - r), j);
                    f.add_term(m + i, Monomial::from_vars(std::span<const int>(vars)), c * sign * binom(n, r));
                }
            }
        }
    }
    f.prune();
    return f;
}

template <class S>
void dump_field(std::ostream& os, const PolyVectorField<S>& f) {
    for (int r = 0; r < f.dim(); ++r) {
        for (const auto& [m, c] : f.row(r).terms()) {
            os << r << ", [";
            const auto vars = m.vars();
            for (std::size_t i = 0; i < vars.size(); ++i) os << (i ? " " : "") << vars[i];
            os << "], " << format_coeff(c) << '\n';
        }
    }
}

template <class S>
std::string dump_field(const PolyVectorField<S>& f) {
    std::ostringstream os;
    dump_field(os, f);
    return os.str();
}

template void dump_field<double>(std::ostream&, const RealField&);
template void dump_field<cplx>(std::ostream&, const ComplexField&);
template std::string dump_field<double>(const RealField&);
template std::string dump_field<cplx>(const ComplexField&);

}  // namespace nmdtsa
