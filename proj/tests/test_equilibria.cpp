#include <doctest.h>

#include <cmath>

#include "lactodyn/dynamics.hpp"
#include "lactodyn/equilibria.hpp"
#include "lactodyn/errors.hpp"
#include "oracles.hpp"

using namespace lactodyn;

namespace {

oracle::P2 to_oracle(const Params2D& p) { return {p.C, p.k, p.kprime, p.L, p.eps, p.eps_prime}; }
oracle::P4 to_oracle(const Params4D& p) {
    return {p.C, p.k, p.kprime, p.L, p.eps, p.eps_prime, p.C1, p.C2, p.Ca, p.kn, p.ka};
}

Params4D random_params(oracle::LogUniform& draw) {
    Params4D p;
    p.C = draw();
    p.k = draw();
    p.kprime = draw();
    p.L = draw();
    p.C1 = draw();
    p.C2 = draw();
    p.Ca = draw();
    p.kn = draw();
    p.ka = draw();
    return p;
}

/// Brackets of the oracle field scaled so that both rows are O(1).
Eigen::VectorXd scaled_2d(const Eigen::VectorXd& z, double J, double F, const oracle::P2& p) {
    const Eigen::Vector2d d = oracle::rhs2d(z[0], z[1], J, F, p);
    return Eigen::Vector2d(d[0] / p.epsp, d[1] * p.eps);
}

Eigen::VectorXd scaled_4d(const Eigen::VectorXd& z, double J0, double J1, double J2, double F, const oracle::P4& p) {
    Eigen::Vector4d d = oracle::rhs4d(Eigen::Vector4d(z), J0, J1, J2, F, p);
    d.head<3>() /= p.epsp;
    d[3] *= p.eps;
    return d;
}

}  // namespace

TEST_CASE("2D closed form hand values") {
    Params2D p;
    const EquilibriumReport a = equilibrium_2d(0.0, 0.7, p);
    CHECK(a.point[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a.point[1] == doctest::Approx(1.0).epsilon(1e-15));

    const EquilibriumReport b = equilibrium_2d(0.25, 1.0, p);
    CHECK(b.point[0] == doctest::Approx(29.0 / 7.0).epsilon(1e-14));
    CHECK(b.point[1] == doctest::Approx(1.25).epsilon(1e-15));

    const EquilibriumReport c = equilibrium_2d(0.2, 0.5, p);
    CHECK(c.point[0] == doctest::Approx(47.0 / 13.0).epsilon(1e-14));
    CHECK(c.point[1] == doctest::Approx(1.4).epsilon(1e-15));
    CHECK(c.feasible);
    CHECK(c.stable);
    CHECK(c.classification == Classification::Node);
}

TEST_CASE("infeasible inputs name the violated inequality") {
    Params2D p;
    try {
        equilibrium_2d(2.0, 0.5, p);
        FAIL("expected infeasibility");
    } catch (const InfeasibleError& e) {
        CHECK(std::string(e.what()).find(">= 1") != std::string::npos);
    }
    try {
        equilibrium_2d(-2.0, 1.0, p);
        FAIL("expected infeasibility");
    } catch (const InfeasibleError& e) {
        CHECK(std::string(e.what()).find("L + J/F <= 0") != std::string::npos);
    }
    CHECK_THROWS_AS(equilibrium_2d(0.2, 0.0, p), InvalidArgument);
    CHECK_THROWS_AS(equilibrium_4d(5.0, 0.0, 0.0, 0.5, Params4D{}), InfeasibleError);
}

TEST_CASE("feasibility agrees with a direct solvability test") {
    // x solves C x/(k+x) = J + C y0/(k'+y0); a positive root exists iff the
    // right side lies in (0, C).
    oracle::LogUniform draw(101);
    int feasible = 0;
    for (int i = 0; i < 2000; ++i) {
        Params4D p = random_params(draw);
        const double J = (i % 3 == 0 ? -1.0 : 1.0) * draw();
        const double F = draw();
        const double y0 = p.L + J / F;
        const double target = J + p.C * y0 / (p.kprime + y0);
        const bool solvable = y0 > 0.0 && target > 0.0 && target < p.C;
        bool reported = true;
        try {
            equilibrium_2d(J, F, p);
        } catch (const InfeasibleError&) {
            reported = false;
        }
        CHECK(reported == solvable);
        feasible += solvable;
    }
    CHECK(feasible > 200);
}

TEST_CASE("2D closed form against an independent Newton solve") {
    oracle::LogUniform draw(7);
    int checked = 0;
    for (int i = 0; i < 500; ++i) {
        Params2D p = random_params(draw);
        const double J = draw(), F = draw();
        EquilibriumReport e;
        try {
            e = equilibrium_2d(J, F, p);
        } catch (const InfeasibleError&) {
            continue;
        }
        const oracle::P2 o = to_oracle(p);
        const auto field = [&](const Eigen::VectorXd& z) { return scaled_2d(z, J, F, o); };
        CHECK(field(e.point).norm() <= 1e-10 * (1.0 + J + F * p.L));
        const Eigen::VectorXd start = e.point.cwiseProduct(Eigen::Vector2d(1.05, 0.97));
        const Eigen::VectorXd z = oracle::fd_newton(field, start);
        if (field(z).norm() < 1e-10) {
            CHECK((z - e.point).cwiseQuotient(e.point).cwiseAbs().maxCoeff() <= 1e-8);
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("node certificate at J_x = 0") {
    oracle::LogUniform draw(19);
    for (int i = 0; i < 500; ++i) {
        Params2D p = random_params(draw);
        p.eps = std::exp(std::log(1e-4) + (std::log(0.5) - std::log(1e-4)) * (i % 17) / 16.0);
        p.eps_prime = std::exp(std::log(1e-4) + (std::log(0.5) - std::log(1e-4)) * (i % 13) / 12.0);
        const double J = draw(), F = draw();
        EquilibriumReport e;
        try {
            e = equilibrium_2d(J, F, p);
        } catch (const InfeasibleError&) {
            continue;
        }
        const double x = e.point[0], y = e.point[1];
        const double A = p.C * p.k / ((p.k + x) * (p.k + x));
        const double B = p.C * p.kprime / ((p.kprime + y) * (p.kprime + y));
        const double disc = node_discriminant(A, B, F, p);
        const double bound = node_discriminant_lower_bound(A, B, F, p);
        CHECK(disc >= bound * (1.0 - 1e-12));
        CHECK(bound >= 0.0);

        // Eigenvalues of the oracle's finite-difference Jacobian.
        const oracle::P2 o = to_oracle(p);
        const Eigen::MatrixXd jac = oracle::fd_jacobian(
            [&](const Eigen::VectorXd& z) -> Eigen::VectorXd { return oracle::rhs2d(z[0], z[1], J, F, o); }, e.point);
        const double tr = jac.trace(), det = jac.determinant();
        CHECK(tr < 0.0);
        CHECK(det > 0.0);
        CHECK(e.stable);
        CHECK(e.classification == Classification::Node);
        for (const auto& l : e.eigenvalues) {
            CHECK(l.imag() == 0.0);
            CHECK(l.real() < 0.0);
        }
        const double scale = std::abs(tr) * std::abs(tr);
        CHECK(std::abs(tr * tr - 4.0 * det - disc) <= 1e-5 * scale);
    }
}

TEST_CASE("classification of a constructed focus and saddle") {
    CHECK(classify({{-1.0, 2.0}, {-1.0, -2.0}}) == Classification::Focus);
    CHECK(classify({{1.0, 0.0}, {-1.0, 0.0}}) == Classification::Saddle);
    CHECK(classify({{-1.0, 0.0}, {-3.0, 0.0}}) == Classification::Node);
    CHECK(classify({{0.0, 0.0}, {-3.0, 0.0}}) == Classification::Degenerate);

    // Strong positive coupling turns the node into a saddle.
    Params2D p;
    EquilibriumReport e = equilibrium_2d(0.2, 0.5, p);
    CHECK(classify_2d(e, p, 5.0, 0.5) == Classification::Saddle);
    CHECK_FALSE(e.stable);
}

TEST_CASE("4D closed form zeroes every flux") {
    Params4D p;
    const EquilibriumReport e = equilibrium_4d(0.1, 0.05, 0.05, 0.5, p);
    const double x = e.point[0], u = e.point[1], v = e.point[2], y = e.point[3];
    const auto m = [](double a, double k) { return a / (k + a); };
    CHECK(y == doctest::Approx(1.4).epsilon(1e-15));
    CHECK(p.C1 * (m(u, p.kn) - m(x, p.k)) == doctest::Approx(0.05).epsilon(1e-13));
    CHECK(p.C2 * (m(v, p.ka) - m(x, p.k)) + p.Ca * (m(v, p.ka) - m(y, p.kprime)) ==
          doctest::Approx(0.05).epsilon(1e-13));
    CHECK(p.C * (m(x, p.k) - m(y, p.kprime)) + p.Ca * (m(v, p.ka) - m(y, p.kprime)) ==
          doctest::Approx(0.2).epsilon(1e-13));
    CHECK(e.stable);
}

TEST_CASE("4D closed form against an independent Newton solve") {
    oracle::LogUniform draw(23);
    int checked = 0;
    for (int i = 0; i < 500; ++i) {
        const Params4D p = random_params(draw);
        const double J0 = draw(), J1 = draw(), J2 = draw(), F = draw();
        EquilibriumReport e;
        try {
            e = equilibrium_4d(J0, J1, J2, F, p);
        } catch (const InfeasibleError&) {
            continue;
        }
        const oracle::P4 o = to_oracle(p);
        const auto field = [&](const Eigen::VectorXd& z) { return scaled_4d(z, J0, J1, J2, F, o); };
        const double scale = 1.0 + J0 + J1 + J2 + F * p.L;
        CHECK(field(e.point).norm() <= 1e-10 * scale);
        const Eigen::VectorXd start = e.point.cwiseProduct(Eigen::Vector4d(1.03, 0.98, 1.02, 0.99));
        const Eigen::VectorXd z = oracle::fd_newton(field, start);
        if (field(z).norm() < 1e-10 * scale) {
            CHECK((z - e.point).cwiseQuotient(e.point).cwiseAbs().maxCoeff() <= 1e-8);
            ++checked;
        }
        const Eigen::MatrixXd jac = oracle::fd_jacobian(
            [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
                return oracle::rhs4d(Eigen::Vector4d(z), J0, J1, J2, F, o);
            },
            e.point);
        const Eigen::VectorXcd ev = jac.eigenvalues();
        bool oracle_stable = true;
        for (Eigen::Index j = 0; j < ev.size(); ++j) oracle_stable = oracle_stable && ev[j].real() < 0.0;
        CHECK(e.stable == oracle_stable);
    }
    CHECK(checked > 20);
}

TEST_CASE("library Newton solvers reproduce the closed forms") {
    Params4D p;
    const EquilibriumReport e2 = equilibrium_2d(0.2, 0.5, p);
    const NewtonResult n2 = newton_equilibrium_2d(0.2, 0.5, p, {1.0, 1.0});
    CHECK((n2.point - e2.point).norm() <= 1e-10);

    const EquilibriumReport e4 = equilibrium_4d(0.1, 0.05, 0.05, 0.5, p);
    const NewtonResult n4 = newton_equilibrium_4d({0.1, 0.05, 0.05}, 0.5, p, {1.0, 1.0, 1.0, 1.0});
    CHECK((n4.point - e4.point).norm() <= 1e-10);
    CHECK(n4.residual_norm <= 1e-12);

    CHECK_THROWS_AS(newton_equilibrium_2d(0.2, 0.5, p, {1.0, 1.0}, {1e-12, 0}), ConvergenceError);
}

TEST_CASE("u0 increases with J1 and y0 with the total load") {
    Params4D p;
    double previous_u = 0.0, previous_y = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double J1 = 0.002 * i;
        const EquilibriumReport e = equilibrium_4d(0.1, J1, 0.05, 0.5, p);
        if (i > 0) {
            CHECK(e.point[1] > previous_u);
            CHECK(e.point[3] > previous_y);
        }
        previous_u = e.point[1];
        previous_y = e.point[3];
    }
}

TEST_CASE("eigenvalues match the characteristic polynomial") {
    oracle::LogUniform draw(29);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const Params2D p = random_params(draw);
        const double J = draw(), F = draw();
        EquilibriumReport e;
        try {
            e = equilibrium_2d(J, F, p);
        } catch (const InfeasibleError&) {
            continue;
        }
        const double x = e.point[0], y = e.point[1];
        const double A = p.C * p.k / ((p.k + x) * (p.k + x));
        const double B = p.C * p.kprime / ((p.kprime + y) * (p.kprime + y));
        // Jacobian [[-e'A, e'B], [A/e, -(B+F)/e]].
        const double tr = -p.eps_prime * A - (B + F) / p.eps;
        const double det = p.eps_prime * A * F / p.eps;
        const double disc = tr * tr - 4.0 * det;
        REQUIRE(disc > 0.0);
        // Cancellation-free quadratic formula.
        const double q = 0.5 * (tr - std::sqrt(disc));
        const double r1 = q, r2 = det / q;
        const double hi = std::max(e.eigenvalues[0].real(), e.eigenvalues[1].real());
        const double lo = std::min(e.eigenvalues[0].real(), e.eigenvalues[1].real());
        CHECK(std::abs(hi - std::max(r1, r2)) <= 1e-10 * std::abs(std::max(r1, r2)));
        CHECK(std::abs(lo - std::min(r1, r2)) <= 1e-10 * std::abs(std::min(r1, r2)));
        ++checked;
    }
    CHECK(checked > 200);
}

TEST_CASE("4D zero-load fixed point") {
    oracle::LogUniform draw(47);
    for (int i = 0; i < 200; ++i) {
        const Params4D p = random_params(draw);
        const double F = draw();
        EquilibriumReport e;
        try {
            e = equilibrium_4d(0.0, 0.0, 0.0, F, p);
        } catch (const InfeasibleError&) {
            FAIL("zero load is always feasible");
        }
        const double ratio = p.L / p.kprime;
        CHECK(e.point[3] == doctest::Approx(p.L).epsilon(1e-14));
        CHECK(e.point[0] == doctest::Approx(p.k * ratio).epsilon(1e-10));
        CHECK(e.point[1] == doctest::Approx(p.kn * ratio).epsilon(1e-10));
        CHECK(e.point[2] == doctest::Approx(p.ka * ratio).epsilon(1e-10));
    }
}

TEST_CASE("4D closed form is the best of 20 random Newton starts") {
    oracle::LogUniform draw(59);
    int checked = 0;
    for (int i = 0; i < 150; ++i) {
        const Params4D p = random_params(draw);
        const double J0 = 0.1 * draw(), J1 = 0.1 * draw(), J2 = 0.1 * draw(), F = draw();
        EquilibriumReport e;
        try {
            e = equilibrium_4d(J0, J1, J2, F, p);
        } catch (const InfeasibleError&) {
            continue;
        }
        const oracle::P4 o = to_oracle(p);
        const auto field = [&](const Eigen::VectorXd& z) { return scaled_4d(z, J0, J1, J2, F, o); };
        oracle::LogUniform start(1000 + i, 1e-2, 1e2);
        Eigen::VectorXd best;
        double best_res = INFINITY;
        for (int s = 0; s < 20; ++s) {
            Eigen::VectorXd z(4);
            for (int j = 0; j < 4; ++j) z[j] = start();
            try {
                z = oracle::fd_newton(field, z);
            } catch (...) {
                continue;
            }
            if ((z.array() <= 0.0).any() || !z.allFinite()) continue;
            const double res = field(z).norm();
            if (res < best_res) {
                best_res = res;
                best = z;
            }
        }
        if (!(best_res < 1e-11)) continue;
        CHECK((best - e.point).cwiseQuotient(e.point).cwiseAbs().maxCoeff() <= 1e-10);
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("Newton solver contract") {
    Params2D p;
    const EquilibriumReport e = equilibrium_2d(0.25, 1.0, p);
    const State2D at{e.point[0], e.point[1]};
    const NewtonResult same = newton_equilibrium_2d(0.25, 1.0, p, at);
    CHECK(same.iterations == 0);
    CHECK(same.point == e.point);

    const NewtonResult moved = newton_equilibrium_2d(0.25, 1.0, p, {1.1 * at.x, 1.1 * at.y});
    CHECK((moved.point - e.point).norm() <= 1e-10);

    // Infeasible inputs: an error, or else a point that truly satisfies the tolerance.
    for (const State2D& seed : {State2D{1.0, 1.0}, State2D{50.0, 3.0}, State2D{0.1, 0.1}}) {
        try {
            const NewtonResult r = newton_equilibrium_2d(2.0, 0.5, p, seed);
            CHECK(r.residual_norm <= 1e-12);
            CHECK(stationarity_2d(State2D::from(r.point), p, 2.0, 0.5).norm() <= 1e-12);
        } catch (const ConvergenceError&) {
        } catch (const DomainError&) {
        }
    }
}

TEST_CASE("stiff node keeps an accurate slow eigenvalue") {
    // F/B near 1e-16 and slow/fast eigenvalue ratio near 1e-20: the generic
    // 2x2 determinant cancels completely here.
    Params2D p;
    p.C = 1e12;
    const double J = 0.0, F = 1e-5;
    const EquilibriumReport e = equilibrium_2d(J, F, p);
    const double x = e.point[0], y = e.point[1];
    const double A = p.C * p.k / ((p.k + x) * (p.k + x));
    const double B = p.C * p.kprime / ((p.kprime + y) * (p.kprime + y));
    const double fast = -(p.eps_prime * A + (B + F) / p.eps);
    const double slow = (p.eps_prime * A * F / p.eps) / fast;  // det / trace leading order
    REQUIRE(std::abs(slow / fast) < 1e-12);
    CHECK(e.classification == Classification::Node);
    CHECK(e.stable);
    const double lo = std::min(e.eigenvalues[0].real(), e.eigenvalues[1].real());
    const double hi = std::max(e.eigenvalues[0].real(), e.eigenvalues[1].real());
    CHECK(hi == doctest::Approx(slow).epsilon(1e-9));
    CHECK(lo == doctest::Approx(fast).epsilon(1e-9));
}
