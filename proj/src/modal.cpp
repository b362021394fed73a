#include "nmdtsa/modal.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nmdtsa {

namespace {

Eigen::VectorXcd normalize_largest(Eigen::VectorXcd v) {
    Eigen::Index k = 0;
    v.cwiseAbs().maxCoeff(&k);
    return v / v(k);
}

Eigen::VectorXcd normalize_angle_separation(const Eigen::VectorXcd& v) {
    const int m = static_cast<int>(v.size()) / 2;
    int bi = 0, bj = 1;
    double best = -1.0;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            const double d = std::abs(v(i) - v(j));
            if (d > best * (1.0 + 1e-12)) {
                best = d;
                bi = i;
                bj = j;
            }
        }
    if (best <= 0.0) throw std::runtime_error("eigen_decompose: mode has no angle separation to normalize");
    return v / (v(bi) - v(bj));
}

}  // namespace

cplx ModeSet::column_lambda(int c) const {
    const int n_osc = oscillatory_dim();
    if (c < n_osc) {
        const cplx l = modes[static_cast<std::size_t>(c / 2)].lambda;
        return c % 2 == 0 ? l : std::conj(l);
    }
    return mean_lambda[c - n_osc];
}

std::string ModeSet::report() const {
    std::ostringstream os;
    os << "mode  frequency_hz  damping_ratio  re_lambda  im_lambda\n";
    os << std::setprecision(6) << std::fixed;
    for (const auto& md : modes)
        os << std::setw(4) << md.index << "  " << std::setw(12) << md.frequency_hz << "  " << std::setw(13)
           << md.damping_ratio << "  " << std::setw(9) << md.lambda.real() << "  " << std::setw(9)
           << md.lambda.imag() << '\n';
    if (has_mean_motion)
        os << "mean motion eigenvalues: " << mean_lambda[0].real() << ", " << mean_lambda[1].real() << '\n';
    return os.str();
}

ModeSet eigen_decompose(const Eigen::MatrixXd& A, EigenNormalization norm) {
    if (A.rows() != A.cols() || A.rows() == 0) throw std::invalid_argument("eigen_decompose: A must be square");
    const int n = static_cast<int>(A.rows());
    if (norm == EigenNormalization::angle_separation && (n % 2 != 0 || n < 4))
        throw std::invalid_argument("eigen_decompose: angle normalization needs a 2m x 2m machine Jacobian, m >= 2");
    const double scale = std::max(1.0, A.lpNorm<Eigen::Infinity>());
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, true);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigen_decompose: eigen solver failed");

    const double real_tol = 1e-6 * scale;
    std::vector<int> osc, real_idx;
    for (int i = 0; i < n; ++i) {
        const double im = es.eigenvalues()(i).imag();
        if (std::abs(im) <= real_tol)
            real_idx.push_back(i);
        else if (im > 0)
            osc.push_back(i);
    }
    if (!real_idx.empty() && real_idx.size() != 2) {
        std::ostringstream os;
        os << "eigen_decompose: " << real_idx.size()
           << " non-oscillatory eigenvalues; only the two mean-motion values are allowed:";
        for (int i : real_idx) os << ' ' << es.eigenvalues()(i);
        throw std::runtime_error(os.str());
    }
    if (2 * osc.size() + real_idx.size() != static_cast<std::size_t>(n))
        throw std::runtime_error("eigen_decompose: eigenvalues are not in conjugate pairs");

    ModeSet out;
    for (int i : osc) {
        Mode md;
        md.lambda = es.eigenvalues()(i);
        Eigen::VectorXcd v = es.eigenvectors().col(i);
        v = norm == EigenNormalization::angle_separation ? normalize_angle_separation(v) : normalize_largest(v);
        const double res = (A.cast<cplx>() * v - md.lambda * v).norm() / v.norm();
        if (res > 1e-8 * scale) {
            std::ostringstream os;
            os << "eigen_decompose: eigenvector residual " << res << " for lambda " << md.lambda;
            throw std::runtime_error(os.str());
        }
        md.vector = v;
        md.frequency_hz = md.lambda.imag() / (2.0 * std::numbers::pi);
        md.damping_ratio = -md.lambda.real() / std::abs(md.lambda);
        out.modes.push_back(std::move(md));
    }
    std::stable_sort(out.modes.begin(), out.modes.end(), [](const Mode& a, const Mode& b) {
        if (a.frequency_hz != b.frequency_hz) return a.frequency_hz < b.frequency_hz;
        return a.damping_ratio < b.damping_ratio;
    });
    for (std::size_t i = 0; i < out.modes.size(); ++i) out.modes[i].index = static_cast<int>(i);

    out.R.resize(n, n);
    const int n_osc = out.oscillatory_dim();
    for (int p = 0; p < static_cast<int>(out.modes.size()); ++p) {
        out.R.col(2 * p) = out.modes[static_cast<std::size_t>(p)].vector;
        out.R.col(2 * p + 1) = out.modes[static_cast<std::size_t>(p)].vector.conjugate();
    }
    if (!real_idx.empty()) {
        out.has_mean_motion = true;
        double mu[2] = {es.eigenvalues()(real_idx[0]).real(), es.eigenvalues()(real_idx[1]).real()};
        int order[2] = {0, 1};
        if (std::abs(mu[1]) < std::abs(mu[0])) std::swap(order[0], order[1]);
        Eigen::MatrixXd basis(n, 2);
        if (std::abs(mu[0] - mu[1]) > 1e-6 * scale) {
            for (int c = 0; c < 2; ++c) basis.col(c) = es.eigenvectors().col(real_idx[order[c]]).real();
        } else {
            // Repeated (possibly defective) eigenvalue: use the generalized
            // eigenspace, null space of (A - mu I)^2.
            const double mbar = 0.5 * (mu[0] + mu[1]);
            const Eigen::MatrixXd shifted = A - mbar * Eigen::MatrixXd::Identity(n, n);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(shifted * shifted, Eigen::ComputeFullV);
            basis = svd.matrixV().rightCols(2);
        }
        for (int c = 0; c < 2; ++c) {
            out.mean_lambda[c] = mu[order[c]];
            out.R.col(n_osc + c) = normalize_largest(basis.col(c).cast<cplx>());
        }
    }
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(out.R);
    if (!lu.isInvertible() || lu.rcond() < 1e-13) throw std::runtime_error("eigen_decompose: modal matrix is singular");
    out.R_inv = lu.inverse();
    return out;
}

bool is_intra_modal(const Monomial& m, int pair) {
    for (auto v : m.vars())
        if (static_cast<int>(v) / 2 != pair) return false;
    return true;
}

double inter_modal_residual(const ComplexField& f) {
    double worst = 0.0;
    for (int r = 0; r < f.dim(); ++r)
        for (const auto& [m, c] : f.row(r).terms())
            if (!is_intra_modal(m, r / 2)) worst = std::max(worst, std::abs(c));
    return worst;
}

namespace {

void check_mean_motion_coupling(const RealField& f, const ModeSet& modes) {
    const double tol = 1e-9 * std::max(1.0, f.max_abs_coeff());
    const int n_osc = modes.oscillatory_dim();
    for (int c = 0; c < 2; ++c) {
        const Eigen::VectorXcd u = modes.R.col(n_osc + c);
        for (int r = 0; r < f.dim(); ++r) {
            Polynomial<cplx> nonlinear;
            for (const auto& [m, coef] : f.row(r).terms())
                if (m.degree() >= 2) nonlinear.add(m, cplx(coef));
            Polynomial<cplx> dir;
            for (int v = 0; v < f.dim(); ++v)
                if (u(v) != cplx(0.0)) dir.add_scaled(nonlinear.derivative(v), u(v));
            dir.prune(tol);
            if (!dir.empty()) {
                std::ostringstream os;
                os << "to_modal: mean-motion direction " << c << " couples nonlinearly into row " << r
                   << " (max coefficient " << dir.max_abs_coeff()
                   << "); the relative-motion reduction needs uniform damping";
                throw std::runtime_error(os.str());
            }
        }
    }
}

}  // namespace

ComplexModalSystem to_modal(const RealField& f, const ModeSet& modes, const std::vector<int>& interest) {
    const int n_full = static_cast<int>(modes.R.rows());
    if (f.dim() != n_full) throw std::invalid_argument("to_modal: field dimension does not match the modal matrix");
    std::vector<int> keep = interest;
    if (keep.empty())
        for (const auto& md : modes.modes) keep.push_back(md.index);
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    for (int k : keep)
        if (k < 0 || k >= static_cast<int>(modes.modes.size()))
            throw std::invalid_argument("to_modal: unknown mode index " + std::to_string(k));
    if (modes.has_mean_motion) check_mean_motion_coupling(f, modes);

    ComplexModalSystem out;
    const int n = 2 * static_cast<int>(keep.size());
    out.T.resize(n_full, n);
    out.S.resize(n, n_full);
    for (std::size_t p = 0; p < keep.size(); ++p) {
        const int c = 2 * keep[p];
        for (int s = 0; s < 2; ++s) {
            const int dst = 2 * static_cast<int>(p) + s;
            out.T.col(dst) = modes.R.col(c + s);
            out.S.row(dst) = modes.R_inv.row(c + s);
            out.lambda.push_back(modes.column_lambda(c + s));
        }
        out.mode_ids.push_back(keep[p]);
    }
    out.field = pull_back(f, out.T, out.S);
    out.field.set_conjugate_paired(true);

    const double scale = std::max(1.0, f.max_abs_coeff());
    for (int r = 0; r < n; ++r) {
        auto& row = out.field.row(r);
        for (int v = 0; v < n; ++v) {
            const Monomial m = Monomial::variable(v);
            const cplx expected = v == r ? out.lambda[static_cast<std::size_t>(r)] : cplx(0.0);
            const cplx got = row.coeff(m);
            if (std::abs(got - expected) > 1e-8 * scale) {
                std::ostringstream os;
                os << "to_modal: linear part not diagonal at (" << r << ", " << v << "): " << got << " vs " << expected;
                throw std::runtime_error(os.str());
            }
            row.set(m, expected);
        }
    }
    const double defect = conjugate_pairing_defect(out.field);
    if (defect > 1e-9)
        throw std::runtime_error("to_modal: conjugate pairing violated (defect " + std::to_string(defect) + ")");
    return out;
}

ComplexModalSystem select_modes(const ComplexModalSystem& sys, const std::vector<int>& interest) {
    if (interest.empty()) throw std::invalid_argument("select_modes: empty mode selection");
    std::set<int> wanted(interest.begin(), interest.end());
    std::vector<int> new_index(static_cast<std::size_t>(sys.field.dim()), -1);
    std::vector<int> kept_pairs;
    for (int p = 0; p < sys.pairs(); ++p)
        if (wanted.count(sys.mode_ids[static_cast<std::size_t>(p)])) kept_pairs.push_back(p);
    if (kept_pairs.size() != wanted.size())
        throw std::invalid_argument("select_modes: selection names modes absent from the system");

    const int n = 2 * static_cast<int>(kept_pairs.size());
    ComplexModalSystem out;
    out.field = ComplexField(n, sys.field.order());
    out.field.set_conjugate_paired(sys.field.conjugate_paired());
    out.T.resize(sys.T.rows(), n);
    out.S.resize(n, sys.S.cols());
    for (std::size_t q = 0; q < kept_pairs.size(); ++q) {
        const int p = kept_pairs[q];
        out.mode_ids.push_back(sys.mode_ids[static_cast<std::size_t>(p)]);
        for (int s = 0; s < 2; ++s) {
            const int old_v = 2 * p + s, new_v = 2 * static_cast<int>(q) + s;
            new_index[static_cast<std::size_t>(old_v)] = new_v;
            out.T.col(new_v) = sys.T.col(old_v);
            out.S.row(new_v) = sys.S.row(old_v);
            out.lambda.push_back(sys.lambda[static_cast<std::size_t>(old_v)]);
        }
    }
    for (int old_r = 0; old_r < sys.field.dim(); ++old_r) {
        const int r = new_index[static_cast<std::size_t>(old_r)];
        if (r < 0) continue;
        for (const auto& [m, c] : sys.field.row(old_r).terms()) {
            bool touches_dropped = false;
            for (auto v : m.vars())
                if (new_index[v] < 0) {
                    touches_dropped = true;
                    break;
                }
            if (touches_dropped) continue;
            out.field.row(r).add(m.relabeled([&](int v) { return new_index[static_cast<std::size_t>(v)]; }), c);
        }
    }
    return out;
}

}  // namespace nmdtsa
