#include <doctest.h>

#include <cmath>
#include <vector>

#include "lactodyn/errors.hpp"
#include "lactodyn/signal.hpp"
#include "oracles.hpp"

using namespace lactodyn;

namespace {

// Signals every corpus-wide property is checked against.
std::vector<std::pair<Signal, double>> corpus() {
    std::vector<std::pair<Signal, double>> out;
    out.emplace_back(Signal::constant(0.5), 10.0);
    out.emplace_back(Signal({{0.0, 0.0}, {10.0, 1.0}}), 10.0);
    out.emplace_back(make_trapezoid({0.5, 0.5, 1.0, 2.0, 5.0, 6.0, 10.0}), 10.0);
    out.emplace_back(make_trapezoid({0.5, 0.5, 1.0, 2.0, 6.0, 7.0, 20.0}), 20.0);
    out.emplace_back(make_trapezoid({0.5, 0.5, 10.0, 20.0, 200.0, 210.0, std::nullopt}), 400.0);
    out.emplace_back(make_dip_control({0.2, 0.3, 0.1, 100.0, 110.0, 300.0, 310.0, 400.0, 410.0, std::nullopt}), 500.0);
    out.emplace_back(make_dip_control({0.2, 0.3, 0.1, 1.0, 2.0, 4.0, 5.0, 7.0, 8.0, 10.0}), 10.0);
    out.emplace_back(Signal({{0.0, 1.0}, {2.0, 3.0}, {3.0, 0.5}, {7.0, 2.0}}, 8.0), 8.0);
    return out;
}

}  // namespace

TEST_CASE("eval interpolates, holds and wraps") {
    CHECK(Signal::constant(0.5)(123.4) == 0.5);
    const Signal two({{0.0, 1.0}, {2.0, 3.0}});
    CHECK(two(1.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(two(5.0) == 3.0);
    CHECK(eval(two, 0.0) == 1.0);

    const Signal trap = make_trapezoid({0.5, 0.5, 1.0, 2.0, 5.0, 6.0, std::nullopt});
    CHECK(trap(1.5) == doctest::Approx(0.625).epsilon(1e-15));
    CHECK(trap(3.0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(trap(0.0) == 0.5);
    CHECK(trap(100.0) == 0.5);
    // Dense sampling oracle for the hand value: mean of symmetric neighbours.
    CHECK(0.5 * (trap(1.5 - 1e-6) + trap(1.5 + 1e-6)) == doctest::Approx(0.625).epsilon(1e-12));
}

TEST_CASE("trapezoid plateau and averages") {
    const Signal trap = make_trapezoid({0.5, 0.5, 1.0, 2.0, 5.0, 6.0, 10.0});
    CHECK(trap.max_value() == doctest::Approx(0.75));
    CHECK(trap.min_value() == doctest::Approx(0.5));
    const double dense = oracle::trapezoid([&](double t) { return trap(t); }, 0.0, 10.0, 1'000'000) / 10.0;
    CHECK(dense == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(average(trap, 10.0) == doctest::Approx(0.6).epsilon(1e-14));

    CHECK(average(Signal::constant(0.3), 7.0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(average(Signal({{0.0, 0.0}, {4.0, 1.0}}), 4.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(make_trapezoid({0.5, 0.5, 2.0, 1.0, 5.0, 6.0, std::nullopt}), InvalidArgument);
    CHECK_THROWS_AS(make_trapezoid({0.5, 0.5, 1.0, 2.0, 7.0, 6.0, std::nullopt}), InvalidArgument);
}

TEST_CASE("dip control protocol") {
    const DipControlSpec spec{0.2, 0.3, 0.1, 100.0, 110.0, 300.0, 310.0, 400.0, 410.0, std::nullopt};
    const Signal J = make_dip_control(spec);
    CHECK(J.max_value() == doctest::Approx(0.3));
    CHECK(J.min_value() == doctest::Approx(0.1));
    CHECK(J(105.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(J(0.0) == 0.2);
    CHECK(J(1000.0) == doctest::Approx(0.2));

    // Closed-form area: baseline plus the high and low excursions.
    const double high = 0.1 * (190.0 + 0.5 * 10.0 + 0.5 * 5.0);
    const double low = 0.1 * (90.0 + 0.5 * 5.0 + 0.5 * 10.0);
    const double exact = 0.2 * 500.0 + high - low;
    CHECK(J.integral(0.0, 500.0) == doctest::Approx(exact).epsilon(1e-14));
    const double dense = oracle::trapezoid([&](double t) { return J(t); }, 0.0, 500.0, 1'000'000);
    CHECK(dense == doctest::Approx(exact).epsilon(1e-12));

    DipControlSpec bad = spec;
    bad.J1 = 0.2;
    CHECK_THROWS_AS(make_dip_control(bad), InvalidArgument);
    bad = spec;
    bad.Jm1 = 0.25;
    CHECK_THROWS_AS(make_dip_control(bad), InvalidArgument);
    bad = spec;
    bad.t_fall_start = 105.0;
    CHECK_THROWS_AS(make_dip_control(bad), InvalidArgument);
}

TEST_CASE("average matches dense quadrature for the corpus") {
    for (const auto& [s, T] : corpus()) {
        const double dense = oracle::trapezoid([&](double t) { return s(t); }, 0.0, T, 1'000'000) / T;
        const double exact = average(s, T);
        CHECK(std::abs(exact - dense) <= 1e-12 * std::abs(dense));
    }
}

TEST_CASE("periodic signals repeat exactly") {
    for (const auto& [s, T] : corpus()) {
        if (!s.period()) continue;
        const double P = *s.period();
        for (int i = 0; i < 1024; ++i) {
            const double t = i * P / 1024.0;
            for (int k = 1; k <= 5; ++k) REQUIRE(s(t) == s(t + k * P));
        }
    }
}

TEST_CASE("max_slope is a Lipschitz constant") {
    for (const auto& [s, T] : corpus()) {
        const double lip = s.max_slope();
        const double h = T / 997.0;
        for (int i = 0; i < 997; ++i) {
            const double t = i * h;
            CHECK(std::abs(s(t + h) - s(t)) <= lip * h * (1.0 + 1e-12) + 1e-15);
        }
    }
}

TEST_CASE("corners are reported inside the window") {
    const Signal trap = make_trapezoid({0.5, 0.5, 1.0, 2.0, 6.0, 7.0, 20.0});
    const std::vector<double> c = trap.corners_in(0.0, 40.0);
    for (double expected : {1.0, 2.0, 6.0, 7.0, 20.0, 21.0, 22.0, 26.0, 27.0}) {
        bool found = false;
        for (double v : c) found = found || std::abs(v - expected) < 1e-12;
        CHECK(found);
    }
    CHECK(std::is_sorted(c.begin(), c.end()));
}

TEST_CASE("text form round-trips bit-exactly") {
    for (const auto& [s, T] : corpus()) {
        const Signal back = signal_from_text(to_text(s));
        CHECK(back == s);
    }
    const Signal odd({{0.1, 1.0 / 3.0}, {0.7, 2.0 / 7.0}}, 1.3);
    CHECK(signal_from_text(to_text(odd)) == odd);
    CHECK(to_text(odd).rfind("# period=", 0) == 0);
}

TEST_CASE("text parser reports line numbers") {
    try {
        signal_from_text("# period=none\n0 1\n1 x\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(signal_from_text("0 1\n"), ParseError);
    CHECK_THROWS_AS(signal_from_text("# period=none\n1 1\n0 2\n"), ParseError);
}

TEST_CASE("invalid breakpoints are rejected") {
    CHECK_THROWS_AS(Signal({{0.0, 1.0}, {0.0, 2.0}}), InvalidArgument);
    CHECK_THROWS_AS(Signal({{0.0, 1.0}, {5.0, 2.0}}, 4.0), InvalidArgument);
    CHECK_THROWS_AS(Signal({{0.0, 1.0}, {4.0, 2.0}}, 4.0), InvalidArgument);
}
