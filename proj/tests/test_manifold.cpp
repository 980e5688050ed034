#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lactodyn/equilibria.hpp"
#include "lactodyn/errors.hpp"
#include "lactodyn/manifold.hpp"
#include "lactodyn/model.hpp"
#include "lactodyn/scenarios.hpp"
#include "oracles.hpp"

using namespace lactodyn;

namespace {

/// Fast bracket of the oracle field, g = eps * dy/dt.
double oracle_g2(double x, double y, double F, const Params2D& p) {
    const oracle::P2 o{p.C, p.k, p.kprime, p.L, p.eps, p.eps_prime};
    return oracle::rhs2d(x, y, 0.0, F, o)[1] * p.eps;
}

double oracle_g4(double x, double v, double y, double F, const Params4D& p) {
    const oracle::P4 o{p.C, p.k, p.kprime, p.L, p.eps, p.eps_prime, p.C1, p.C2, p.Ca, p.kn, p.ka};
    return oracle::rhs4d(Eigen::Vector4d(x, 1.0, v, y), 0.0, 0.0, 0.0, F, o)[3] * p.eps;
}

Params4D random_params(oracle::LogUniform& draw) {
    Params4D p;
    p.C = draw();
    p.k = draw();
    p.kprime = draw();
    p.L = draw();
    p.Ca = draw();
    p.ka = draw();
    return p;
}

double dip_distance(double eps) {
    ScenarioConfig cfg = default_scenario("dip");
    cfg.params.eps = eps;
    cfg.horizon = 500.0;
    const Signal F = cfg.F.build();
    const OdeProblem problem = make_problem_2d(cfg.params, cfg.J.control(), F, 0.0, cfg.horizon);
    const Trajectory tr = integrate(problem, 0.0, cfg.horizon, frozen_equilibrium(cfg, 0.0), cfg.integrator);
    return manifold_distance_2d(tr, F, cfg.params).max_post_transient;
}

}  // namespace

TEST_CASE("phi hand values") {
    Params2D p;
    CHECK(phi_2d(1.0, 0.5, p) == doctest::Approx(1.0).epsilon(1e-15));
    // x = 0: y^2 + (k' - L + C/F) y - k' L = 0 with F = 1 gives y^2 + y - 1 = 0.
    CHECK(phi_2d(0.0, 1.0, p) == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-15));
    const ManifoldPoint m = manifold_point_2d(1.0, 0.5, p);
    CHECK(m.other_root == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(m.discriminant > 0.0);
    CHECK_THROWS_AS(phi_2d(1.0, 0.0, p), InvalidArgument);
}

TEST_CASE("phi zeroes the fast bracket") {
    oracle::LogUniform draw(31);
    for (int i = 0; i < 10000; ++i) {
        const Params4D p = random_params(draw);
        const double x = draw(), v = draw(), F = draw();
        const double y2 = phi_2d(x, F, p);
        CHECK(y2 >= 0.0);
        const double scale2 = F * (p.L + y2) + 2.0 * p.C;
        CHECK(std::abs(oracle_g2(x, y2, F, p)) <= 1e-12 * scale2);
        const double y4 = phi_4d(x, v, F, p);
        CHECK(y4 >= 0.0);
        const double scale4 = F * (p.L + y4) + 2.0 * (p.C + p.Ca);
        CHECK(std::abs(oracle_g4(x, v, y4, F, p)) <= 1e-12 * scale4);
    }
}

TEST_CASE("critical_x inverts phi") {
    oracle::LogUniform draw(37);
    for (int i = 0; i < 2000; ++i) {
        const Params2D p = random_params(draw);
        const double x = draw(), F = draw();
        const double y = phi_2d(x, F, p);
        const CriticalX c = critical_x_2d(y, F, p);
        CHECK(c.feasible);
        CHECK(c.x == doctest::Approx(x).epsilon(1e-7));
    }
    Params2D p;
    CHECK_THROWS_AS(critical_x_2d(100.0, 1e-3, p), InfeasibleError);
    CHECK_FALSE(critical_x_2d(0.1, 10.0, p).feasible);
}

TEST_CASE("attractiveness is the y-derivative of the fast bracket") {
    Params2D p;
    CHECK(attractiveness_2d(0.0, 1.0, p) == -2.0);
    oracle::LogUniform draw(41);
    for (int i = 0; i < 2000; ++i) {
        const Params4D q = random_params(draw);
        const double x = draw(), v = draw(), F = draw();
        const double y = phi_4d(x, v, F, q);
        const double h = 1e-6 * (1.0 + y);
        const double fd = (oracle_g4(x, v, y + h, F, q) - oracle_g4(x, v, y - h, F, q)) / (2.0 * h);
        const double g = attractiveness_4d(y, F, q);
        CHECK(g < 0.0);
        CHECK(g <= -F);
        CHECK(std::abs(fd - g) <= 1e-6 * std::abs(g));
        CHECK(manifold_point_4d(x, v, F, q).gprime_y == doctest::Approx(g).epsilon(1e-14));
    }
}

TEST_CASE("4D manifold reduces to 2D when Ca = 0") {
    oracle::LogUniform draw(43);
    for (int i = 0; i < 1000; ++i) {
        Params4D p = random_params(draw);
        p.Ca = 0.0;
        const double x = draw(), v = draw(), F = draw();
        CHECK(phi_4d(x, v, F, p) == doctest::Approx(phi_2d(x, F, p)).epsilon(1e-14));
        const double y = phi_2d(x, F, p);
        CHECK(attractiveness_4d(y, F, p) == attractiveness_2d(y, F, p));
    }
}

TEST_CASE("mu bound against brute force") {
    const ScenarioConfig cfg = default_scenario("buffer");
    const Signal F = cfg.F.build();
    const MuBound mu = mu_bound_2d(1e-3, 50.0, 0.0, cfg.period, cfg.params, F);
    double brute = INFINITY;
    for (int i = 0; i <= 2000; ++i) {
        const double x = 1e-3 + (50.0 - 1e-3) * i / 2000.0;
        for (int j = 0; j <= 400; ++j) {
            const double t = cfg.period * j / 400.0;
            const double y = phi_2d(x, F(t), cfg.params);
            brute = std::min(brute, -attractiveness_2d(y, F(t), cfg.params));
        }
    }
    CHECK(mu.mu >= mu.analytic_floor);
    CHECK(mu.analytic_floor == doctest::Approx(0.5));
    CHECK(std::abs(mu.mu - brute) <= 1e-3 * brute);
    CHECK(mu.mu >= brute * (1.0 - 1e-3));
}

TEST_CASE("distance to the manifold scales with eps") {
    const double d1 = dip_distance(1e-2);
    const double d2 = dip_distance(5e-3);
    CHECK(d1 > 0.0);
    CHECK(d1 / d2 >= 1.5);
    CHECK(d1 / d2 <= 2.5);
}

TEST_CASE("off-manifold start relaxes at the fast rate") {
    ScenarioConfig cfg = default_scenario("dip");
    const Signal F = cfg.F.build();
    Vec start = frozen_equilibrium(cfg, 0.0);
    start[1] += 0.5;
    const OdeProblem problem = make_problem_2d(cfg.params, cfg.J.control(), F, 0.0, 5.0);
    const Trajectory tr = integrate(problem, 0.0, 5.0, start, cfg.integrator);
    const DistanceSeries d = manifold_distance_2d(tr, F, cfg.params);
    CHECK(d.distance.front() == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(d.t_transient == doctest::Approx(5.0 * cfg.params.eps / d.mu_hat));
    CHECK(d.max_post_transient <= 0.5 * std::exp(-5.0) * 1.1);
    CHECK(tr(1.0)[1] - phi_2d(tr(1.0)[0], F(1.0), cfg.params) <= 1e-8);
}

TEST_CASE("slice CSV") {
    Params4D p;
    std::ostringstream a;
    write_slice_csv_2d(a, {0.5, 1.0}, 0.5, p);
    CHECK(a.str().rfind("x,phi,gprime_y\n", 0) == 0);
    std::ostringstream b;
    write_slice_csv_4d(b, {0.5, 1.0}, {0.1, 0.2, 0.3}, 0.5, p);
    std::istringstream in(b.str());
    std::string line;
    int rows = 0;
    std::getline(in, line);
    CHECK(line == "x,v,phi,gprime_y");
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 6);
}

TEST_CASE("manifold passes through the equilibrium") {
    Params4D p;
    CHECK(phi_2d(1.0, 1.0, p) == doctest::Approx(1.0).epsilon(1e-15));
    const CriticalX c = critical_x_2d(1.0, 1.0, p);
    CHECK(c.B == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c.x == doctest::Approx(1.0).epsilon(1e-15));
    // Zero-flux line: y = L with B = C L/(k'+L) gives x = k L/k'.
    Params2D q;
    q.k = 2.0;
    q.kprime = 0.5;
    q.L = 3.0;
    const CriticalX z = critical_x_2d(q.L, 0.7, q);
    CHECK(z.B == doctest::Approx(q.C * q.L / (q.kprime + q.L)).epsilon(1e-15));
    CHECK(z.x == doctest::Approx(q.k * q.L / q.kprime).epsilon(1e-13));

    const EquilibriumReport e = equilibrium_4d(0.1, 0.05, 0.05, 0.5, p);
    CHECK(phi_4d(e.point[0], e.point[2], 0.5, p) == doctest::Approx(e.point[3]).epsilon(1e-13));
}

TEST_CASE("attractiveness tends to -F for large y") {
    Params2D p;
    CHECK(attractiveness_2d(1e9, 0.7, p) == doctest::Approx(-0.7).epsilon(1e-15));
}

TEST_CASE("discriminant and branch signs") {
    oracle::LogUniform draw(61);
    for (int i = 0; i < 2000; ++i) {
        const Params4D p = random_params(draw);
        const double x = draw(), v = draw(), F = draw();
        const ManifoldPoint m2 = manifold_point_2d(x, F, p);
        CHECK(m2.discriminant > 0.0);
        CHECK(m2.y > 0.0);
        CHECK(m2.other_root < 0.0);
        const ManifoldPoint m4 = manifold_point_4d(x, v, F, p);
        CHECK(m4.discriminant > 0.0);
        CHECK(m4.other_root < 0.0);
        // Above the manifold the fast bracket pushes y down.
        CHECK(oracle_g2(x, m2.y * 1.01 + 1e-6, F, p) < 0.0);
        CHECK(oracle_g2(x, m2.y * 0.99, F, p) > 0.0);
    }
}

TEST_CASE("equilibrium trajectory stays on the manifold") {
    Params2D p;
    const Signal F = Signal::constant(0.5);
    const OdeProblem problem = make_problem_2d(p, Control{Signal::constant(0.2)}, F, 0.0, 50.0);
    const Trajectory tr = integrate(problem, 0.0, 50.0, equilibrium_2d(0.2, 0.5, p).point, {1e-10, 1e-12});
    const DistanceSeries d = manifold_distance_2d(tr, F, p);
    for (double v : d.distance) CHECK(v <= 1e-10);
}

TEST_CASE("on-manifold start stays within K eps") {
    // Run at eps = 1e-3 and measure K; the same K must bound the eps = 1e-2 run.
    const auto measure = [](double eps) {
        ScenarioConfig cfg = default_scenario("dip");
        cfg.params.eps = eps;
        cfg.horizon = 500.0;
        const Signal F = cfg.F.build();
        const Vec start = frozen_equilibrium(cfg, 0.0);
        const OdeProblem problem = make_problem_2d(cfg.params, cfg.J.control(), F, 0.0, cfg.horizon);
        const Trajectory tr = integrate(problem, 0.0, cfg.horizon, start, cfg.integrator);
        const DistanceSeries d = manifold_distance_2d(tr, F, cfg.params, 0.0);
        return *std::max_element(d.distance.begin(), d.distance.end());
    };
    const double K = measure(1e-3) / 1e-3;
    CHECK(K > 0.0);
    CHECK(measure(1e-2) <= 1.5 * K * 1e-2);
    CHECK(measure(5e-3) / measure(1e-2) >= 0.3);
    CHECK(measure(5e-3) / measure(1e-2) <= 0.8);
}
