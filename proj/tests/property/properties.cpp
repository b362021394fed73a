#include <doctest.h>

#include <random>

#include "nmdtsa/boundary.hpp"
#include "nmdtsa/nmd.hpp"
#include "nmdtsa/sim.hpp"
#include "nmdtsa/tsa.hpp"
#include "support.hpp"

using namespace nmdtsa;

namespace {

struct Case {
    testsupport::RandomSystem rs;
    ComplexModalSystem modal;
    NmdResult nmd;
};

Case make_case(int m, unsigned seed, int k = 3) {
    Case c{testsupport::random_system(m, seed), {}, {}};
    const Eigen::MatrixXd A = swing_jacobian(c.rs.system, std::span<const double>(c.rs.sep.data(), m));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * m);
    x.head(m) = c.rs.sep;
    const RealField f = taylor_expand(c.rs.system, std::span<const double>(x.data(), 2 * m), k);
    c.modal = to_modal(f, eigen_decompose(A, EigenNormalization::angle_separation));
    c.nmd = nmd_decouple(c.modal, k);
    return c;
}

// seed -> machine count, cycling 3..6
std::vector<std::pair<int, unsigned>> cases() {
    std::vector<std::pair<int, unsigned>> out;
    for (unsigned s = 1; s <= 8; ++s) out.emplace_back(3 + static_cast<int>(s % 4), 100 + s);
    return out;
}

RealOscillator random_oscillator(std::mt19937& rng) {
    std::uniform_real_distribution<double> g(0.05, 0.5), w2(20.0, 150.0), c2(-20.0, 20.0), c3(5.0, 30.0);
    RealOscillator o;
    const double gamma = g(rng), a = w2(rng);
    o.lambda = cplx(-gamma / 2, std::sqrt(a - gamma * gamma / 4));
    o.row1 = BiPoly(3);
    o.row1.set(1, 0, -gamma);
    o.row1.set(0, 1, -a);
    o.row1.set(0, 2, c2(rng));
    o.row1.set(0, 3, c3(rng));
    o.row2 = BiPoly(3);
    o.row2.set(1, 0, 1.0);
    return o;
}

}  // namespace

TEST_SUITE("decoupling") {
    TEST_CASE("no inter-modal term survives, and the chain undoes the decoupling") {
        for (auto [m, seed] : cases()) {
            CAPTURE(seed);
            const Case c = make_case(m, seed);
            CHECK(inter_modal_residual(c.nmd.decoupled.field) == 0.0);
            ComplexField g = c.nmd.decoupled.field;
            for (auto it = c.nmd.chain.maps.rbegin(); it != c.nmd.chain.maps.rend(); ++it)
                g = compose_near_identity(g, *it, ComposeDirection::to_old);
            const ComplexField ref = c.modal.field.truncated(3);
            double worst = 0.0;
            for (int r = 0; r < g.dim(); ++r) {
                auto d = g.row(r);
                d -= ref.row(r);
                worst = std::max(worst, d.max_abs_coeff());
            }
            CHECK(worst < 1e-9 * std::max(1.0, ref.max_abs_coeff()));
        }
    }

    TEST_CASE("intra-modal terms of degree 2 are untouched") {
        for (auto [m, seed] : cases()) {
            const Case c = make_case(m, seed);
            for (int r = 0; r < c.modal.field.dim(); ++r) {
                const auto quad = c.modal.field.row(r).homogeneous_part(2);
                for (const auto& [mono, coef] : quad.terms())
                    if (is_intra_modal(mono, r / 2))
                        CHECK(std::abs(c.nmd.decoupled.field.row(r).coeff(mono) - coef) <= 1e-12 * std::abs(coef));
            }
        }
    }
}

TEST_SUITE("conjugate") {
    TEST_CASE("conjugate pairing holds for modal, decoupled and map fields") {
        for (auto [m, seed] : cases()) {
            const Case c = make_case(m, seed);
            CHECK(conjugate_pairing_defect(c.modal.field) < 1e-9);
            CHECK(conjugate_pairing_defect(c.nmd.decoupled.field) < 1e-9);
            for (const auto& h : c.nmd.chain.maps) CHECK(conjugate_pairing_defect(h.rows) < 1e-9);
            for (int p = 0; p < c.nmd.decoupled.pairs(); ++p) CHECK_NOTHROW(to_real_oscillator(c.nmd.decoupled, p));
        }
    }

    TEST_CASE("real state maps to conjugate pairs") {
        std::mt19937 rng(5);
        std::normal_distribution<double> n(0.0, 0.05);
        for (auto [m, seed] : cases()) {
            const Case c = make_case(m, seed);
            Eigen::VectorXd d(2 * m);
            for (int i = 0; i < 2 * m; ++i) d(i) = n(rng);
            const auto z = chain_inverse(c.nmd.chain, d);
            REQUIRE(z.has_value());
            for (int p = 0; p < c.nmd.decoupled.pairs(); ++p)
                CHECK(std::abs((*z)(2 * p) - std::conj((*z)(2 * p + 1))) < 1e-10 * std::max(1.0, z->norm()));
        }
    }
}

TEST_SUITE("chain") {
    TEST_CASE("inverse then forward reproduces the modal state") {
        std::mt19937 rng(9);
        std::normal_distribution<double> n(0.0, 0.1);
        for (auto [m, seed] : cases()) {
            const Case c = make_case(m, seed);
            for (int t = 0; t < 5; ++t) {
                Eigen::VectorXd d(2 * m);
                for (int i = 0; i < 2 * m; ++i) d(i) = n(rng);
                const auto z = chain_inverse(c.nmd.chain, d);
                REQUIRE(z.has_value());
                const Eigen::VectorXcd y = c.nmd.chain.S * d.cast<cplx>();
                CHECK((chain_to_modal(c.nmd.chain, *z) - y).norm() < 1e-10 * std::max(1.0, y.norm()));
            }
        }
    }

    TEST_CASE("projection of the origin is the origin") {
        for (auto [m, seed] : cases()) {
            const Case c = make_case(m, seed);
            const auto z = chain_inverse(c.nmd.chain, Eigen::VectorXd::Zero(2 * m));
            REQUIRE(z.has_value());
            CHECK(z->norm() == 0.0);
        }
    }
}

TEST_SUITE("energy") {
    TEST_CASE("first integral is conserved along the undamped oscillator") {
        std::mt19937 rng(13);
        for (int t = 0; t < 6; ++t) {
            RealOscillator o = random_oscillator(rng);
            o.row1.set(1, 0, 0.0);
            const BiPoly V = first_integral(o);
            const auto ueps = first_integral_ueps(o);
            REQUIRE_FALSE(ueps.empty());
            // start well inside the critical level along w2
            const double w2 = 0.5 * ueps[0].w2;
            const Trajectory tr = integrate(o, 0.0, w2, 5e-4, 5.0);
            const double v0 = V(0.0, w2);
            double drift = 0.0;
            for (int s = 0; s < tr.samples(); ++s) drift = std::max(drift, std::abs(V(tr.states(s, 0), tr.states(s, 1)) - v0));
            CHECK(drift < 1e-6 * v0);
        }
    }

    TEST_CASE("ratios lie in [0, 1], sum to one and ignore scaling") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (auto [m, seed] : cases()) {
            const auto rs = testsupport::random_system(m, seed);
            const ModeSet ms = eigen_decompose(swing_jacobian(rs.system, std::span<const double>(rs.sep.data(), m)));
            Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2 * m);
            x0.head(m) = rs.sep;
            for (int i = 0; i < m; ++i) x0(m + i) = 0.01 * u(rng);
            Trajectory t = integrate(rs.system, x0, 2e-3, 8.0);
            t.states.leftCols(m).rowwise() -= rs.sep.transpose();
            const auto a = fit_modal_amplitudes(t, rs.system, ms);
            double sum = 0.0;
            for (double r : a.ratio) {
                CHECK(r >= 0.0);
                CHECK(r <= 1.0);
                sum += r;
            }
            CHECK(sum == doctest::Approx(1.0));
            Trajectory s = t;
            s.states *= 3.0;
            const auto b = fit_modal_amplitudes(s, rs.system, ms);
            for (std::size_t i = 0; i < a.ratio.size(); ++i) CHECK(b.ratio[i] == doctest::Approx(a.ratio[i]));
        }
    }
}

TEST_SUITE("zubov") {
    TEST_CASE("series solves the PDE and is a local Lyapunov function") {
        std::mt19937 rng(11);
        for (int t = 0; t < 8; ++t) {
            const RealOscillator o = random_oscillator(rng);
            const BiPoly phi = quadratic_phi(0.0002, 0.001);
            const int L = 10;
            const BiPoly V = zubov_series(o, phi, L);
            const BiPoly res = lie_derivative(V, o) + phi - multiply(phi, V);
            double worst = 0.0;
            for (int d = 0; d <= L; ++d) worst = std::max(worst, res.homogeneous(d).max_abs());
            CHECK(worst < 1e-10);
            const BiPoly vdot = lie_derivative(V, o);
            for (int j = 0; j < 24; ++j) {
                const double th = 2 * std::numbers::pi * j / 24, r = 1e-3;
                CHECK(V(r * std::cos(th), r * std::sin(th)) > 0.0);
                CHECK(vdot(r * std::cos(th), r * std::sin(th)) < 0.0);
            }
        }
    }
}

TEST_SUITE("rk4") {
    TEST_CASE("linear systems follow the matrix exponential") {
        std::mt19937 rng(21);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int t = 0; t < 6; ++t) {
            Eigen::Matrix3d A;
            for (int i = 0; i < 9; ++i) A.data()[i] = u(rng);
            const RealRhs rhs = [A](std::span<const double> x, std::span<double> dx) {
                Eigen::Map<Eigen::Vector3d>(dx.data()) = A * Eigen::Map<const Eigen::Vector3d>(x.data());
            };
            const Eigen::Vector3d x0(u(rng), u(rng), u(rng));
            const Trajectory tr = integrate(rhs, x0, 1e-2, 1.0);
            // exp(A) by a long Taylor sum is accurate for |A| ~ 1
            Eigen::Matrix3d E = Eigen::Matrix3d::Identity(), term = Eigen::Matrix3d::Identity();
            for (int n = 1; n < 30; ++n) {
                term = term * A / n;
                E += term;
            }
            const Eigen::Vector3d ref = E * x0;
            CHECK((tr.states.row(tr.samples() - 1).transpose() - ref).norm() < 1e-8);
        }
    }

    TEST_CASE("convergence slope on the SMIB swing field") {
        const auto sys = testsupport::smib();
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
        x0(0) = 0.9;
        x0(1) = -0.2;
        auto end = [&](double h) {
            const Trajectory t = integrate(sys, x0, h, 1.0);
            return Eigen::VectorXd(t.states.row(t.samples() - 1).transpose());
        };
        const Eigen::VectorXd ref = end(1.25e-4);
        const double e1 = (end(4e-3) - ref).norm(), e2 = (end(2e-3) - ref).norm();
        CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.3 / 4.0));
    }

    TEST_CASE("step shortening lands on the horizon") {
        std::mt19937 rng(4);
        std::uniform_real_distribution<double> h(0.013, 0.2), T(0.5, 3.0);
        for (int t = 0; t < 20; ++t) {
            const double step = h(rng), hor = T(rng);
            const RealRhs rhs = [](std::span<const double>, std::span<double> dx) { dx[0] = 1.0; };
            const Trajectory tr = integrate(rhs, Eigen::VectorXd::Zero(1), step, hor);
            CHECK(tr.times.back() == doctest::Approx(hor).epsilon(1e-12));
            CHECK(tr.states(tr.samples() - 1, 0) == doctest::Approx(hor).epsilon(1e-12));
            CHECK(hor / (tr.samples() - 1) <= step * (1 + 1e-12));
        }
    }
}

TEST_SUITE("shrink") {
    TEST_CASE("shrunk level regions are nested") {
        std::mt19937 rng(8);
        std::uniform_real_distribution<double> u(-3.0, 3.0), ratio(0.05, 1.0);
        for (int t = 0; t < 6; ++t) {
            const RealOscillator o = random_oscillator(rng);
            const BoundaryEstimate b = first_integral_boundary(o, {72, 1e3});
            if (!b.critical) continue;
            double r1 = ratio(rng), r2 = ratio(rng);
            if (r1 > r2) std::swap(r1, r2);
            const auto s1 = shrink(b, r1), s2 = shrink(b, r2);
            CHECK(*s1.effective_critical() <= *s2.effective_critical());
            for (std::size_t j = 0; j < b.polyline.size(); ++j) {
                CHECK(s1.polyline[j].radius <= s2.polyline[j].radius * (1 + 1e-9));
                CHECK(s2.polyline[j].radius <= b.polyline[j].radius * (1 + 1e-9));
            }
            for (int p = 0; p < 200; ++p) {
                const double w1 = 10.0 * u(rng), w2 = 0.3 * u(rng);
                if (classify_state(s1, w1, w2) == Region::inside) CHECK(classify_state(s2, w1, w2) == Region::inside);
                if (classify_state(s2, w1, w2) == Region::inside) CHECK(classify_state(b, w1, w2) == Region::inside);
            }
        }
    }

    TEST_CASE("shrink by one is the identity and ratios compose") {
        std::mt19937 rng(2);
        const RealOscillator o = random_oscillator(rng);
        const BoundaryEstimate b = first_integral_boundary(o, {36, 1e3});
        const auto same = shrink(b, 1.0);
        CHECK(*same.effective_critical() == *b.effective_critical());
        const auto twice = shrink(shrink(b, 0.5), 0.5);
        CHECK(*twice.effective_critical() == doctest::Approx(*shrink(b, 0.25).effective_critical()));
    }
}
