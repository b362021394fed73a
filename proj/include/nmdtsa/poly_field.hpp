#pragma once

#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nmdtsa/polynomial.hpp"

namespace nmdtsa {

class ClassicalSystem;

// Polynomial vector field x' = f(x): one polynomial per row, no coefficient of
// degree above order().
//
// A complex field may be flagged conjugate-paired: variables come in pairs
// (2i, 2i+1) that are complex conjugates of each other, and row 2i+1 is the
// conjugate of row 2i with the pair indices swapped.
template <class S>
class PolyVectorField {
public:
    using Scalar = S;
    using Poly = Polynomial<S>;

    PolyVectorField() = default;
    PolyVectorField(int dim, int order) : dim_(dim), order_(order), rows_(static_cast<std::size_t>(dim)) {
        if (dim < 0) throw std::invalid_argument("negative field dimension");
        if (order < 1 || order > Monomial::kMaxDegree)
            throw std::invalid_argument("field order out of range: " + std::to_string(order));
    }

    int dim() const { return dim_; }
    int order() const { return order_; }
    bool conjugate_paired() const { return conjugate_paired_; }
    void set_conjugate_paired(bool v) { conjugate_paired_ = v; }

    const Poly& row(int i) const { return rows_.at(static_cast<std::size_t>(i)); }
    Poly& row(int i) { return rows_.at(static_cast<std::size_t>(i)); }
    const std::vector<Poly>& rows() const { return rows_; }
    std::vector<Poly>& rows() { return rows_; }

    void add_term(int row_index, const Monomial& m, S c) {
        if (m.degree() > order_) return;
        if (m.max_var() >= dim_) throw std::out_of_range("monomial variable exceeds field dimension");
        row(row_index).add(m, c);
    }

    void prune(double tol = kCoefficientDropTol) {
        for (auto& r : rows_) r.prune(tol);
    }

    std::size_t term_count() const {
        std::size_t n = 0;
        for (const auto& r : rows_) n += r.size();
        return n;
    }
    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& r : rows_) m = std::max(m, r.max_abs_coeff());
        return m;
    }

    // Number of stored terms of each degree 0..order.
    std::vector<std::size_t> degree_census() const {
        std::vector<std::size_t> c(static_cast<std::size_t>(order_) + 1, 0);
        for (const auto& r : rows_)
            for (const auto& kv : r.terms()) ++c[static_cast<std::size_t>(kv.first.degree())];
        return c;
    }

    template <class V>
    auto evaluate(std::span<const V> x) const {
        using R = std::common_type_t<S, V>;
        if (static_cast<int>(x.size()) != dim_)
            throw std::invalid_argument("evaluate: point has dimension " + std::to_string(x.size()) +
                                        ", field has " + std::to_string(dim_));
        std::vector<R> out(static_cast<std::size_t>(dim_));
        for (int i = 0; i < dim_; ++i) out[static_cast<std::size_t>(i)] = rows_[static_cast<std::size_t>(i)].evaluate(x);
        return out;
    }

    PolyVectorField truncated(int new_order) const {
        if (new_order > order_) throw std::invalid_argument("truncate: new order exceeds field order");
        PolyVectorField out(dim_, new_order);
        out.conjugate_paired_ = conjugate_paired_;
        for (int i = 0; i < dim_; ++i) out.rows_[static_cast<std::size_t>(i)] = rows_[static_cast<std::size_t>(i)].truncated(new_order);
        return out;
    }

private:
    int dim_ = 0;
    int order_ = 1;
    bool conjugate_paired_ = false;
    std::vector<Poly> rows_;
};

using RealField = PolyVectorField<double>;
using ComplexField = PolyVectorField<cplx>;

// Degree-(p+1) homogeneous map h in z_old = z_new + h(z_new).
struct HomogeneousMap {
    int degree = 2;
    ComplexField rows;  // every term has exactly `degree`
};

enum class ComposeDirection {
    // Field given in z_old; return it expressed in z_new.
    to_new,
    // Field given in z_new; return it expressed in z_old.
    to_old,
};

// Drops every term of degree above new_order.
template <class S>
PolyVectorField<S> truncate(const PolyVectorField<S>& f, int new_order) {
    return f.truncated(new_order);
}

// Index of the conjugate partner of a paired variable.
inline int conjugate_index(int var) { return var ^ 1; }

// Largest violation of the conjugate-pairing invariant, relative to the
// largest coefficient.
double conjugate_pairing_defect(const ComplexField& f);

// g(y) = S * f(T y) with T (N x n) and S (n x N). Output dimension n.
ComplexField pull_back(const ComplexField& f, const Eigen::MatrixXcd& T, const Eigen::MatrixXcd& S);
ComplexField pull_back(const RealField& f, const Eigen::MatrixXcd& T, const Eigen::MatrixXcd& S);

// g(y) = T^{-1} f(T y). Throws on singular T.
ComplexField substitute_linear(const ComplexField& f, const Eigen::MatrixXcd& T);
ComplexField substitute_linear(const RealField& f, const Eigen::MatrixXcd& T);
RealField substitute_linear(const RealField& f, const Eigen::MatrixXd& T);

// Rewrites f under z_old = z_new + h(z_new), modulo degree f.order() + 1.
ComplexField compose_near_identity(const ComplexField& f, const HomogeneousMap& h, ComposeDirection dir);

// Polynomial inverse of u -> u + h(u), truncated at max_degree.
std::vector<Polynomial<cplx>> invert_near_identity(const HomogeneousMap& h, int dim, int max_degree);

// Exact Taylor coefficients of the swing dynamics about `center` (a state
// [delta; delta_dot] of length 2m), truncated at degree `order`. The constant
// term is dropped; the center must be an equilibrium of the relative motion
// (zero speeds, equal per-machine accelerations).
RealField taylor_expand(const ClassicalSystem& sys, std::span<const double> center, int order);

// "row, alpha, coefficient" per term in canonical order.
template <class S>
void dump_field(std::ostream& os, const PolyVectorField<S>& f);
template <class S>
std::string dump_field(const PolyVectorField<S>& f);

RealField real_part(const ComplexField& f);
ComplexField to_complex(const RealField& f);

}  // namespace nmdtsa
