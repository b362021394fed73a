#pragma once

#include <string>
#include <tuple>
#include <vector>

namespace nmdtsa {

// Dense real polynomial in two variables (x, y): sum c_jl x^j y^l, j + l <= degree.
// Used for oscillator right-hand sides and level functions.
class BiPoly {
public:
    BiPoly() : BiPoly(0) {}
    explicit BiPoly(int degree);

    int degree() const { return degree_; }
    double coeff(int j, int l) const {
        if (j < 0 || l < 0 || j > degree_ || l > degree_) return 0.0;
        return c_[static_cast<std::size_t>(j * (degree_ + 1) + l)];
    }
    void set(int j, int l, double v);
    void add(int j, int l, double v) { set(j, l, coeff(j, l) + v); }

    double operator()(double x, double y) const;
    // Value and gradient in one pass.
    void eval_grad(double x, double y, double& v, double& gx, double& gy) const;

    BiPoly dx() const;
    BiPoly dy() const;
    BiPoly homogeneous(int d) const;
    BiPoly truncated(int d) const;
    // Highest degree with a nonzero coefficient, -1 for the zero polynomial.
    int effective_degree() const;
    double max_abs() const;
    void prune(double tol = 1e-14);

    // (j, l, c) for every nonzero coefficient, graded order.
    std::vector<std::tuple<int, int, double>> terms() const;
    std::string to_string(const char* x = "x", const char* y = "y") const;

    BiPoly& operator+=(const BiPoly& o);
    BiPoly& operator-=(const BiPoly& o);
    BiPoly& operator*=(double s);

private:
    int degree_;
    std::vector<double> c_;
};

BiPoly operator+(BiPoly a, const BiPoly& b);
BiPoly operator-(BiPoly a, const BiPoly& b);
BiPoly operator*(BiPoly a, double s);
// Product, truncated at max_degree when max_degree >= 0.
BiPoly multiply(const BiPoly& a, const BiPoly& b, int max_degree = -1);

}  // namespace nmdtsa
