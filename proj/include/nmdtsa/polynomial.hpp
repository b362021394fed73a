#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "nmdtsa/monomial.hpp"

namespace nmdtsa {

using cplx = std::complex<double>;

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

// Coefficients at or below this magnitude are pruned after every algebraic
// operation.
inline constexpr double kCoefficientDropTol = 1e-14;

// Sparse multivariate polynomial, coefficient type S (double or cplx).
template <class S>
class Polynomial {
public:
    using Scalar = S;
    using Terms = std::map<Monomial, S>;

    Polynomial() = default;
    explicit Polynomial(Terms terms) : terms_(std::move(terms)) {}

    static Polynomial constant(S c) {
        Polynomial p;
        p.add(Monomial{}, c);
        return p;
    }
    static Polynomial variable(int var, S c = S(1)) {
        Polynomial p;
        p.add(Monomial::variable(var), c);
        return p;
    }

    const Terms& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    S coeff(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? S(0) : it->second;
    }

    void add(const Monomial& m, S c) {
        if (c == S(0)) return;
        auto [it, inserted] = terms_.try_emplace(m, c);
        if (!inserted) it->second += c;
    }
    void set(const Monomial& m, S c) {
        if (c == S(0))
            terms_.erase(m);
        else
            terms_[m] = c;
    }
    void erase(const Monomial& m) { terms_.erase(m); }

    // Adds scale * other, dropping terms above max_degree.
    void add_scaled(const Polynomial& other, S scale, int max_degree = Monomial::kMaxDegree) {
        if (scale == S(0)) return;
        for (const auto& [m, c] : other.terms_)
            if (m.degree() <= max_degree) add(m, scale * c);
    }

    Polynomial& operator+=(const Polynomial& o) {
        add_scaled(o, S(1));
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        add_scaled(o, S(-1));
        return *this;
    }
    Polynomial& operator*=(S s) {
        if (s == S(0)) {
            terms_.clear();
            return *this;
        }
        for (auto& [m, c] : terms_) c *= s;
        return *this;
    }

    void prune(double tol = kCoefficientDropTol) {
        std::erase_if(terms_, [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
    }

    int max_degree() const { return terms_.empty() ? -1 : terms_.rbegin()->first.degree(); }
    int min_degree() const { return terms_.empty() ? -1 : terms_.begin()->first.degree(); }
    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& kv : terms_) m = std::max(m, std::abs(kv.second));
        return m;
    }

    Polynomial truncated(int max_degree) const {
        Polynomial p;
        for (const auto& [m, c] : terms_)
            if (m.degree() <= max_degree) p.terms_.emplace_hint(p.terms_.end(), m, c);
        return p;
    }
    Polynomial homogeneous_part(int degree) const {
        Polynomial p;
        for (const auto& [m, c] : terms_)
            if (m.degree() == degree) p.terms_.emplace_hint(p.terms_.end(), m, c);
        return p;
    }

    Polynomial derivative(int var) const {
        Polynomial p;
        for (const auto& [m, c] : terms_) {
            auto [mult, reduced] = m.derivative(var);
            if (mult > 0) p.add(reduced, c * S(static_cast<double>(mult)));
        }
        return p;
    }

    template <class V>
    auto evaluate(std::span<const V> x) const {
        using R = std::common_type_t<S, V>;
        R acc(0);
        for (const auto& [m, c] : terms_) {
            R t(c);
            for (auto v : m.vars()) {
                if (v >= x.size()) throw std::out_of_range("polynomial evaluated at too short a point");
                t *= x[v];
            }
            acc += t;
        }
        return acc;
    }

    Polynomial conj() const {
        if constexpr (is_complex<S>::value) {
            Polynomial p;
            for (const auto& [m, c] : terms_) p.terms_.emplace_hint(p.terms_.end(), m, std::conj(c));
            return p;
        } else {
            return *this;
        }
    }

    template <class Map>
    Polynomial relabeled(Map&& map) const {
        Polynomial p;
        for (const auto& [m, c] : terms_) p.add(m.relabeled(map), c);
        return p;
    }

    template <class T>
    Polynomial<T> cast() const {
        Polynomial<T> p;
        for (const auto& [m, c] : terms_) {
            if constexpr (is_complex<S>::value && !is_complex<T>::value)
                p.add(m, c.real());
            else
                p.add(m, T(c));
        }
        return p;
    }

private:
    Terms terms_;
};

// Product truncated at max_degree.
template <class S>
Polynomial<S> multiply(const Polynomial<S>& a, const Polynomial<S>& b,
                       int max_degree = Monomial::kMaxDegree) {
    Polynomial<S> out;
    for (const auto& [ma, ca] : a.terms()) {
        if (ma.degree() > max_degree) break;
        for (const auto& [mb, cb] : b.terms()) {
            if (ma.degree() + mb.degree() > max_degree) break;
            out.add(ma * mb, ca * cb);
        }
    }
    return out;
}

// Evaluates polynomial p at the polynomial point `map` (p(map(u))) truncated
// at max_degree. Products of map components are built incrementally along
// monomial prefixes and cached, so shared factors are multiplied once.
template <class S>
class PolynomialComposer {
public:
    PolynomialComposer(const std::vector<Polynomial<S>>& map, int max_degree)
        : map_(map), max_degree_(max_degree), low_degree_(map.size(), 0) {
        for (std::size_t v = 0; v < map.size(); ++v) low_degree_[v] = std::max(0, map[v].min_degree());
    }

    const Polynomial<S>& power_product(const Monomial& m) {
        auto it = cache_.find(m);
        if (it != cache_.end()) return it->second;
        Polynomial<S> value;
        if (m.is_constant()) {
            value = Polynomial<S>::constant(S(1));
        } else {
            const int last = m.max_var();
            if (last >= static_cast<int>(map_.size()))
                throw std::out_of_range("composition map has too few components");
            const Polynomial<S>& head = power_product(m.prefix());
            value = multiply(head, map_[last], max_degree_);
        }
        return cache_.emplace(m, std::move(value)).first->second;
    }

    Polynomial<S> compose(const Polynomial<S>& p) {
        Polynomial<S> out;
        for (const auto& [m, c] : p.terms()) {
            if (lowest_degree(m) > max_degree_) continue;
            out.add_scaled(power_product(m), c);
        }
        out.prune();
        return out;
    }

private:
    int lowest_degree(const Monomial& m) const {
        int d = 0;
        for (auto v : m.vars()) d += v < low_degree_.size() ? low_degree_[v] : 0;
        return d;
    }

    const std::vector<Polynomial<S>>& map_;
    int max_degree_;
    std::vector<int> low_degree_;
    std::map<Monomial, Polynomial<S>> cache_;
};

}  // namespace nmdtsa
