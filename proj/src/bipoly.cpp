#include "nmdtsa/bipoly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nmdtsa {

BiPoly::BiPoly(int degree) : degree_(degree) {
    if (degree < 0) throw std::invalid_argument("BiPoly: negative degree");
    c_.assign(static_cast<std::size_t>((degree + 1) * (degree + 1)), 0.0);
}

void BiPoly::set(int j, int l, double v) {
    if (j < 0 || l < 0 || j + l > degree_)
        throw std::out_of_range("BiPoly: term x^" + std::to_string(j) + " y^" + std::to_string(l) +
                                " exceeds degree " + std::to_string(degree_));
    c_[static_cast<std::size_t>(j * (degree_ + 1) + l)] = v;
}

double BiPoly::operator()(double x, double y) const {
    // Horner in y inside Horner in x.
    double acc = 0.0;
    for (int j = degree_; j >= 0; --j) {
        double inner = 0.0;
        for (int l = degree_ - j; l >= 0; --l) inner = inner * y + coeff(j, l);
        acc = acc * x + inner;
    }
    return acc;
}

void BiPoly::eval_grad(double x, double y, double& v, double& gx, double& gy) const {
    v = gx = gy = 0.0;
    double xp = 1.0;  // x^j
    double xpm = 0.0; // j x^(j-1)
    for (int j = 0; j <= degree_; ++j) {
        double inner = 0.0, dinner = 0.0;
        for (int l = degree_ - j; l >= 0; --l) {
            dinner = dinner * y + inner;
            inner = inner * y + coeff(j, l);
        }
        v += xp * inner;
        gx += xpm * inner;
        gy += xp * dinner;
        xpm = (j + 1) * xp;
        xp *= x;
    }
}

BiPoly BiPoly::dx() const {
    BiPoly out(std::max(0, degree_ - 1));
    for (int j = 1; j <= degree_; ++j)
        for (int l = 0; j + l <= degree_; ++l)
            if (coeff(j, l) != 0.0) out.set(j - 1, l, j * coeff(j, l));
    return out;
}

BiPoly BiPoly::dy() const {
    BiPoly out(std::max(0, degree_ - 1));
    for (int j = 0; j <= degree_; ++j)
        for (int l = 1; j + l <= degree_; ++l)
            if (coeff(j, l) != 0.0) out.set(j, l - 1, l * coeff(j, l));
    return out;
}

BiPoly BiPoly::homogeneous(int d) const {
    BiPoly out(degree_);
    if (d < 0 || d > degree_) return out;
    for (int j = 0; j <= d; ++j) out.set(j, d - j, coeff(j, d - j));
    return out;
}

BiPoly BiPoly::truncated(int d) const {
    BiPoly out(std::max(0, d));
    for (int j = 0; j <= std::min(d, degree_); ++j)
        for (int l = 0; j + l <= std::min(d, degree_); ++l) out.set(j, l, coeff(j, l));
    return out;
}

int BiPoly::effective_degree() const {
    for (int d = degree_; d >= 0; --d)
        for (int j = 0; j <= d; ++j)
            if (coeff(j, d - j) != 0.0) return d;
    return -1;
}

double BiPoly::max_abs() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
}

void BiPoly::prune(double tol) {
    for (double& v : c_)
        if (std::abs(v) <= tol) v = 0.0;
}

std::vector<std::tuple<int, int, double>> BiPoly::terms() const {
    std::vector<std::tuple<int, int, double>> out;
    for (int d = 0; d <= degree_; ++d)
        for (int j = d; j >= 0; --j)
            if (coeff(j, d - j) != 0.0) out.emplace_back(j, d - j, coeff(j, d - j));
    return out;
}

std::string BiPoly::to_string(const char* x, const char* y) const {
    std::ostringstream os;
    os.precision(6);
    bool first = true;
    for (auto [j, l, c] : terms()) {
        os << (first ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + ")) << std::abs(c);
        if (j) os << ' ' << x << (j > 1 ? "^" + std::to_string(j) : "");
        if (l) os << ' ' << y << (l > 1 ? "^" + std::to_string(l) : "");
        first = false;
    }
    return first ? "0" : os.str();
}

BiPoly& BiPoly::operator+=(const BiPoly& o) {
    if (o.degree_ > degree_) {
        BiPoly wide = truncated(o.degree_);
        *this = std::move(wide);
    }
    for (int j = 0; j <= o.degree_; ++j)
        for (int l = 0; j + l <= o.degree_; ++l)
            if (o.coeff(j, l) != 0.0) add(j, l, o.coeff(j, l));
    return *this;
}

BiPoly& BiPoly::operator-=(const BiPoly& o) {
    BiPoly neg = o;
    neg *= -1.0;
    return *this += neg;
}

BiPoly& BiPoly::operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
}

BiPoly operator+(BiPoly a, const BiPoly& b) { return a += b; }
BiPoly operator-(BiPoly a, const BiPoly& b) { return a -= b; }
BiPoly operator*(BiPoly a, double s) { return a *= s; }

BiPoly multiply(const BiPoly& a, const BiPoly& b, int max_degree) {
    const int full = a.degree() + b.degree();
    const int d = max_degree < 0 ? full : std::min(full, max_degree);
    BiPoly out(d);
    for (auto [ja, la, ca] : a.terms())
        for (auto [jb, lb, cb] : b.terms())
            if (ja + la + jb + lb <= d) out.add(ja + jb, la + lb, ca * cb);
    return out;
}

}  // namespace nmdtsa
