#include <doctest.h>

#include <random>
#include <sstream>

#include "nmdtsa/poly_field.hpp"
#include "support.hpp"

using namespace nmdtsa;

namespace {

template <class S, class V>
Eigen::Matrix<std::common_type_t<S, V>, Eigen::Dynamic, 1> eval(const PolyVectorField<S>& f,
                                                                  const Eigen::Matrix<V, Eigen::Dynamic, 1>& x) {
    auto out = f.evaluate(std::span<const V>(x.data(), static_cast<std::size_t>(x.size())));
    return Eigen::Map<Eigen::Matrix<std::common_type_t<S, V>, Eigen::Dynamic, 1>>(out.data(), x.size());
}

RealField random_real_field(int dim, int order, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RealField f(dim, order);
    for (int r = 0; r < dim; ++r)
        for (int t = 0; t < 6; ++t) {
            std::vector<int> vars;
            const int deg = 1 + static_cast<int>(rng() % static_cast<unsigned>(order));
            for (int k = 0; k < deg; ++k) vars.push_back(static_cast<int>(rng() % static_cast<unsigned>(dim)));
            f.add_term(r, Monomial::from_vars(std::span<const int>(vars)), u(rng));
        }
    return f;
}

}  // namespace

TEST_SUITE("poly") {
    TEST_CASE("monomial canonical form and graded order") {
        const Monomial a = Monomial::from_vars({3, 0, 0});
        CHECK(a.degree() == 3);
        CHECK(a.exponent(0) == 2);
        CHECK(a.exponent(3) == 1);
        CHECK(a == Monomial::from_vars({0, 3, 0}));
        CHECK(a.to_string() == Monomial::from_exponents(std::vector<int>{2, 0, 0, 1}).to_string());
        CHECK(Monomial::from_vars({5}) < Monomial::from_vars({0, 0}));  // lower degree first
        CHECK(Monomial::from_vars({0, 1}) < Monomial::from_vars({0, 2}));
        CHECK(a * Monomial::from_vars({1}) == Monomial::from_vars({0, 0, 1, 3}));
        auto [mult, red] = a.derivative(0);
        CHECK(mult == 2);
        CHECK(red == Monomial::from_vars({0, 3}));
        CHECK(a.derivative(7).first == 0);
    }

    TEST_CASE("polynomial product matches pointwise product") {
        Polynomial<double> p, q;
        p.add(Monomial::from_vars({0}), 2.0);
        p.add(Monomial::from_vars({0, 1}), -1.5);
        q.add(Monomial{}, 1.0);
        q.add(Monomial::from_vars({1, 1}), 0.5);
        const auto pq = multiply(p, q);
        const std::vector<double> x = {0.3, -1.7};
        const std::span<const double> xs(x);
        CHECK(pq.evaluate(xs) == doctest::Approx(p.evaluate(xs) * q.evaluate(xs)).epsilon(1e-14));
        // truncated product keeps only degree <= 2
        CHECK(multiply(p, q, 2).max_degree() == 2);
    }

    TEST_CASE("coefficients at the drop tolerance are pruned") {
        Polynomial<double> p;
        p.add(Monomial::from_vars({0}), 1.0);
        p.add(Monomial::from_vars({1}), 5e-15);
        p.prune();
        CHECK(p.size() == 1);
    }

    TEST_CASE("substitute_linear is a group action") {
        const RealField f = random_real_field(3, 3, 7);
        Eigen::MatrixXd T1(3, 3), T2(3, 3);
        T1 << 1.0, 0.2, -0.3, 0.1, 0.9, 0.4, -0.2, 0.3, 1.1;
        T2 << 0.7, -0.1, 0.0, 0.5, 1.2, 0.2, 0.1, 0.0, 0.8;
        const RealField twice = substitute_linear(substitute_linear(f, T1), T2);
        const RealField once = substitute_linear(f, Eigen::MatrixXd(T1 * T2));
        double worst = 0.0;
        for (int r = 0; r < 3; ++r) {
            auto diff = twice.row(r);
            diff -= once.row(r);
            worst = std::max(worst, diff.max_abs_coeff());
        }
        CHECK(worst < 1e-11);
    }

    TEST_CASE("substitute_linear agrees with direct evaluation") {
        const RealField f = random_real_field(3, 3, 11);
        Eigen::MatrixXd T(3, 3);
        T << 2.0, 0.1, 0.0, -0.3, 1.0, 0.2, 0.0, 0.4, 0.5;
        const RealField g = substitute_linear(f, T);
        const Eigen::Vector3d y(0.2, -0.4, 0.7);
        const Eigen::VectorXd ty = T * y;
        const Eigen::VectorXd want = T.inverse() * eval(f, ty);
        CHECK((eval(g, Eigen::VectorXd(y)) - want).norm() < 1e-12);
        CHECK_THROWS_AS(substitute_linear(f, Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 3))), std::invalid_argument);
    }

    TEST_CASE("pull_back to conjugate pairs preserves the pairing") {
        RealField f(2, 3);
        f.add_term(0, Monomial::from_vars({1}), 1.0);
        f.add_term(1, Monomial::from_vars({0}), -4.0);
        f.add_term(1, Monomial::from_vars({0, 0, 0}), 0.3);
        f.add_term(1, Monomial::from_vars({0, 1}), -0.2);
        const cplx l(-0.1, 2.0);
        Eigen::MatrixXcd T(2, 2);
        T << 1.0, 1.0, l, std::conj(l);
        const ComplexField g = substitute_linear(f, T);
        CHECK(conjugate_pairing_defect(g) < 1e-12);
        // evaluating at conjugate-swapped inputs gives conjugate-swapped outputs
        const Eigen::Vector2cd z(cplx(0.3, 0.2), cplx(-0.1, 0.5));
        const Eigen::Vector2cd zs(std::conj(z(1)), std::conj(z(0)));
        const auto a = eval(g, Eigen::VectorXcd(z)), b = eval(g, Eigen::VectorXcd(zs));
        CHECK(std::abs(b(0) - std::conj(a(1))) < 1e-12);
        CHECK(std::abs(b(1) - std::conj(a(0))) < 1e-12);
    }

    TEST_CASE("near-identity compose: to_new then to_old restores the field") {
        ComplexField f(2, 3);
        f.add_term(0, Monomial::from_vars({0}), cplx(-0.1, 3.0));
        f.add_term(1, Monomial::from_vars({1}), cplx(-0.1, -3.0));
        f.add_term(0, Monomial::from_vars({0, 1}), cplx(0.5, 0.1));
        f.add_term(1, Monomial::from_vars({0, 0}), cplx(-0.2, 0.3));
        f.add_term(0, Monomial::from_vars({1, 1, 1}), cplx(0.05, 0.0));
        HomogeneousMap h{2, ComplexField(2, 2)};
        h.rows.add_term(0, Monomial::from_vars({0, 0}), cplx(0.3, -0.1));
        h.rows.add_term(1, Monomial::from_vars({0, 1}), cplx(0.1, 0.2));
        const ComplexField there = compose_near_identity(f, h, ComposeDirection::to_new);
        const ComplexField back = compose_near_identity(there, h, ComposeDirection::to_old);
        double worst = 0.0;
        for (int r = 0; r < 2; ++r) {
            auto d = back.row(r);
            d -= f.row(r);
            worst = std::max(worst, d.max_abs_coeff());
        }
        CHECK(worst < 1e-12);
    }

    TEST_CASE("invert_near_identity inverts to the truncation order") {
        HomogeneousMap h{2, ComplexField(2, 2)};
        h.rows.add_term(0, Monomial::from_vars({0, 1}), cplx(0.4, 0.0));
        h.rows.add_term(1, Monomial::from_vars({0, 0}), cplx(-0.3, 0.2));
        const auto inv = invert_near_identity(h, 2, 5);
        // psi(u + h(u)) - u is O(|u|^6)
        for (double s : {1e-1, 5e-2}) {
            const Eigen::Vector2cd u(cplx(s, 0.3 * s), cplx(-0.5 * s, 0.1 * s));
            Eigen::Vector2cd x = u + eval(h.rows, Eigen::VectorXcd(u));
            Eigen::Vector2cd back;
            for (int r = 0; r < 2; ++r) back(r) = inv[static_cast<std::size_t>(r)].evaluate(std::span<const cplx>(x.data(), 2));
            CHECK((back - u).norm() < 50.0 * std::pow(s, 6));
        }
    }

    TEST_CASE("taylor expansion of SMIB matches the closed form") {
        const auto sys = testsupport::smib();
        const double d0 = 15.0 * std::numbers::pi / 180.0;
        const std::vector<double> center = {d0 / 2, -d0 / 2, 0.0, 0.0};
        const RealField f = taylor_expand(sys, center, 3);
        CHECK(f.dim() == 4);
        CHECK(f.row(0).coeff(Monomial::from_vars({2})) == doctest::Approx(1.0));
        // machine-1 acceleration row: -(ws/2H) * 1.7 * d^n/dx^n sin(x + d0) / n! in x = d1 - d2
        const double K = testsupport::kOmegaS / 12.0 * 1.7;
        const Polynomial<double>& acc = f.row(2);
        CHECK(acc.coeff(Monomial::from_vars({0})) == doctest::Approx(-K * std::cos(d0)).epsilon(1e-13));
        CHECK(acc.coeff(Monomial::from_vars({0, 0})) == doctest::Approx(K * std::sin(d0) / 2).epsilon(1e-13));
        CHECK(acc.coeff(Monomial::from_vars({0, 1})) == doctest::Approx(-K * std::sin(d0)).epsilon(1e-13));
        CHECK(acc.coeff(Monomial::from_vars({0, 0, 0})) == doctest::Approx(K * std::cos(d0) / 6).epsilon(1e-13));
        CHECK(acc.coeff(Monomial::from_vars({2})) == doctest::Approx(-1.0 / 6.0).epsilon(1e-13));
        CHECK(acc.coeff(Monomial{}) == 0.0);  // constant dropped
    }

    TEST_CASE("taylor expansion requires an equilibrium center") {
        const auto sys = testsupport::smib();
        const std::vector<double> bad = {0.3, 0.0, 0.0, 0.0};
        CHECK_THROWS(taylor_expand(sys, bad, 3));
        const std::vector<double> moving = {0.1309, -0.1309, 0.1, 0.1};
        CHECK_THROWS(taylor_expand(sys, moving, 3));
    }

    TEST_CASE("taylor error shrinks at rate r^(k+1)") {
        auto rs = testsupport::random_system(4, 3);
        Eigen::VectorXd c = Eigen::VectorXd::Zero(8);
        c.head(4) = rs.sep;
        for (int k : {2, 3}) {
            const RealField f = taylor_expand(rs.system, std::span<const double>(c.data(), 8), k);
            Eigen::VectorXd dir(8);
            dir << 0.3, -0.5, 0.2, 0.7, 0.1, -0.4, 0.6, 0.2;
            dir.normalize();
            const Eigen::VectorXd base = swing_rhs(rs.system, std::span<const double>(c.data(), 8));
            std::vector<double> lr, le;
            for (double r : {0.08, 0.04, 0.02, 0.01}) {
                const Eigen::VectorXd x = c + r * dir;
                const Eigen::VectorXd exact = swing_rhs(rs.system, std::span<const double>(x.data(), 8)) - base;
                const Eigen::VectorXd approx = eval(f, Eigen::VectorXd(r * dir));
                lr.push_back(std::log(r));
                le.push_back(std::log((exact - approx).norm()));
            }
            const double slope = (le.back() - le.front()) / (lr.back() - lr.front());
            CHECK(std::abs(slope - (k + 1)) < 0.2);
        }
    }

    TEST_CASE("dump format is one canonical line per term") {
        RealField f(2, 2);
        f.add_term(1, Monomial::from_vars({1, 0}), -2.5);
        f.add_term(0, Monomial::from_vars({1}), 1.0);
        CHECK(dump_field(f) == "0, [1], 1\n1, [0 1], -2.5\n");
        ComplexField g = to_complex(f);
        CHECK(dump_field(g) == "0, [1], 1 0\n1, [0 1], -2.5 0\n");
        CHECK(dump_field(real_part(g)) == dump_field(f));
    }

    TEST_CASE("field construction errors") {
        CHECK_THROWS_AS(RealField(2, 0), std::invalid_argument);
        RealField f(2, 2);
        CHECK_THROWS_AS(f.add_term(0, Monomial::from_vars({3}), 1.0), std::out_of_range);
        f.add_term(0, Monomial::from_vars({0, 0, 0}), 1.0);  // above order: ignored
        CHECK(f.term_count() == 0);
        const std::vector<double> x = {1.0};
        CHECK_THROWS_AS(f.evaluate(std::span<const double>(x)), std::invalid_argument);
    }
}
