#include "lactodyn/scenarios.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "lactodyn/errors.hpp"
#include "lactodyn/manifold.hpp"
#include "lactodyn/model.hpp"

namespace lactodyn {

std::string to_string(Model m) { return m == Model::TwoD ? "2d" : "4d"; }

std::string to_string(SignalSpec::Kind k) {
    switch (k) {
        case SignalSpec::Kind::Constant: return "constant";
        case SignalSpec::Kind::Trapezoid: return "trapezoid";
        case SignalSpec::Kind::Dip: return "dip";
        case SignalSpec::Kind::Points: return "file";
    }
    return "constant";
}

Signal SignalSpec::build() const {
    switch (kind) {
        case Kind::Constant: return Signal::constant(value);
        case Kind::Trapezoid: return make_trapezoid(trapezoid);
        case Kind::Dip: return make_dip_control(dip);
        case Kind::Points: return points;
    }
    return Signal::constant(value);
}

namespace {

double last_transition(const Signal& s) {
    if (s.period() || s.breakpoints().empty()) return 0.0;
    return s.breakpoints().back().time;
}

void require_periodic(const Signal& s, double T, const std::string& name) {
    if (s.is_constant()) return;
    if (!s.period() || std::abs(*s.period() - T) > 1e-12 * T)
        throw InvalidArgument("signal " + name + " must be constant or periodic with period " + format_number(T));
}

Params4D four_d_params(const ScenarioConfig& cfg) { return cfg.params; }

Controls4D controls_4d(const ScenarioConfig& cfg) { return {cfg.J0.control(), cfg.J1.control(), cfg.J2.control()}; }

// Stationary point for frozen control levels j (j[0] only in 2D) and stimulus f,
// with the affine couplings of the configured controls.
Eigen::VectorXd stationary_point(const ScenarioConfig& cfg, const std::array<double, 3>& j, double f) {
    if (cfg.model == Model::TwoD) {
        const Params2D& p = cfg.params;
        const EquilibriumReport closed = equilibrium_2d(j[0], f, p);
        if (cfg.J.coupling == 0.0) return closed.point;
        const double c = cfg.J.coupling;
        const double xr = cfg.J.x_ref;
        Params2D unit = p;
        unit.eps = 1.0;
        unit.eps_prime = 1.0;
        const NewtonResult r = newton_equilibrium(
            [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
                return stationarity_2d(State2D::from(z), p, j[0] + c * (z[0] - xr), f);
            },
            [&](const Eigen::VectorXd& z) -> Eigen::MatrixXd { return jacobian_2d(State2D::from(z), unit, c, f); },
            closed.point);
        return r.point;
    }
    const Params4D p = four_d_params(cfg);
    const EquilibriumReport closed = equilibrium_4d(j[0], j[1], j[2], f, p);
    const Eigen::Vector3d cpl{cfg.J0.coupling, cfg.J1.coupling, cfg.J2.coupling};
    if (cpl.isZero()) return closed.point;
    const Eigen::Vector3d ref{cfg.J0.x_ref, cfg.J1.x_ref, cfg.J2.x_ref};
    Params4D unit = p;
    unit.eps = 1.0;
    unit.eps_prime = 1.0;
    const NewtonResult r = newton_equilibrium(
        [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
            const Eigen::Vector3d J = Eigen::Vector3d(j[0], j[1], j[2]) + cpl.cwiseProduct(Eigen::Vector3d::Constant(z[0]) - ref);
            return stationarity_4d(State4D::from(z), p, J, f);
        },
        [&](const Eigen::VectorXd& z) -> Eigen::MatrixXd { return jacobian_4d(State4D::from(z), unit, cpl, f); },
        closed.point);
    return r.point;
}

OdeProblem problem_for(const ScenarioConfig& cfg, double t0, double t1) {
    if (cfg.model == Model::TwoD) return make_problem_2d(cfg.params, cfg.J.control(), cfg.F.build(), t0, t1);
    return make_problem_4d(four_d_params(cfg), controls_4d(cfg), cfg.F.build(), t0, t1);
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

void ScenarioConfig::validate() const {
    if (model == Model::TwoD)
        static_cast<const Params2D&>(params).validate();
    else
        params.validate();
    integrator.validate();
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("run.horizon must be positive");
    if (!(period > 0.0) || !std::isfinite(period)) throw InvalidArgument("run.period must be positive");
    if (n_periods < 1) throw InvalidArgument("run.n_periods must be at least 1");
    if (!(sensitivity_delta > 0.0)) throw InvalidArgument("run.delta must be positive");
    if (!(detect.dip_fraction > 0.0) || !(detect.return_tol > 0.0) || !(detect.lock_threshold > 0.0) ||
        detect.lock_periods < 1)
        throw InvalidArgument("detection thresholds must be positive");
    if (shooting_max_iterations < 0 || !(shooting_tol > 0.0))
        throw InvalidArgument("shooting.max_iterations must be >= 0 and shooting.tol positive");

    std::vector<std::pair<std::string, Signal>> signals{{"F", F.build()}};
    if (model == Model::TwoD) {
        signals.emplace_back("J", J.build());
    } else {
        signals.emplace_back("J0", J0.build());
        signals.emplace_back("J1", J1.build());
        signals.emplace_back("J2", J2.build());
    }
    if (signals.front().second.min_value() <= 0.0) throw InvalidArgument("stimulus F must stay positive");
    for (const auto& [name, s] : signals)
        if (last_transition(s) > horizon)
            throw InvalidArgument("run.horizon " + format_number(horizon) + " ends before the last transition of " +
                                  name + " at t = " + format_number(last_transition(s)));
}

ScenarioConfig default_scenario(const std::string& name) {
    ScenarioConfig cfg;
    cfg.name = name;
    if (name == "dip") {
        cfg.model = Model::TwoD;
        cfg.F.kind = SignalSpec::Kind::Trapezoid;
        cfg.F.trapezoid = {0.5, 0.5, 10.0, 20.0, 200.0, 210.0, std::nullopt};
        cfg.J.kind = SignalSpec::Kind::Dip;
        cfg.J.dip = {0.2, 0.3, 0.1, 100.0, 110.0, 300.0, 310.0, 400.0, 410.0, std::nullopt};
        cfg.integrator = {1e-9, 1e-12};
        cfg.horizon = 5000.0;
    } else if (name == "buffer") {
        cfg.model = Model::TwoD;
        cfg.period = 20.0;
        cfg.n_periods = 40;
        cfg.F.kind = SignalSpec::Kind::Trapezoid;
        cfg.F.trapezoid = {0.5, 0.5, 1.0, 2.0, 6.0, 7.0, 20.0};
        cfg.J.kind = SignalSpec::Kind::Trapezoid;
        cfg.J.trapezoid = {0.2, 0.5, 1.0, 2.0, 6.0, 7.0, 20.0};
        cfg.J.coupling = -0.5;
        cfg.J.x_ref = 47.0 / 13.0;  // baseline x0 at F = 0.5, J = 0.2
        cfg.integrator = {1e-10, 1e-12};
        cfg.horizon = cfg.period * cfg.n_periods;
    } else if (name == "sensitivity") {
        cfg.model = Model::FourD;
        cfg.F.value = 0.5;
        cfg.J0.value = 0.1;
        cfg.J1.value = 0.05;
        cfg.J2.value = 0.05;
        cfg.sensitivity_delta = 1e-6;
        cfg.horizon = 500.0;
    } else {
        throw InvalidArgument("unknown scenario '" + name + "' (expected dip, buffer or sensitivity)");
    }
    return cfg;
}

Eigen::VectorXd frozen_equilibrium(const ScenarioConfig& cfg, double t) {
    const double f = cfg.F.build()(t);
    if (cfg.model == Model::TwoD) return stationary_point(cfg, {cfg.J.build()(t), 0.0, 0.0}, f);
    return stationary_point(cfg, {cfg.J0.build()(t), cfg.J1.build()(t), cfg.J2.build()(t)}, f);
}

Eigen::VectorXd mean_input_equilibrium(const ScenarioConfig& cfg) {
    const double T = cfg.period;
    const double f = average(cfg.F.build(), T);
    if (cfg.model == Model::TwoD) return stationary_point(cfg, {average(cfg.J.build(), T), 0.0, 0.0}, f);
    return stationary_point(cfg, {average(cfg.J0.build(), T), average(cfg.J1.build(), T), average(cfg.J2.build(), T)},
                            f);
}

DipResult run_dip(const ScenarioConfig& cfg) {
    if (cfg.model != Model::TwoD) throw InvalidArgument("the dip experiment uses the 2D model");
    cfg.validate();
    const Params2D& p = cfg.params;
    const Signal F = cfg.F.build();
    const Signal Jsig = cfg.J.build();

    DipResult out;
    DipReport& r = out.report;
    const Eigen::VectorXd start = frozen_equilibrium(cfg, 0.0);
    r.baseline_x = start[0];

    const OdeProblem problem = problem_for(cfg, 0.0, cfg.horizon);
    out.trajectory = integrate(problem, 0.0, cfg.horizon, start, cfg.integrator);
    const Trajectory& traj = out.trajectory;

    const EventPredicate xdot = [&](double t, const Vec& s) { return problem.rhs(t, s)[0]; };

    // Dip: first local minimum of x after the inputs start moving, i.e. the
    // first rising zero of dx/dt. Before the onset dx/dt is rounding noise.
    double onset = cfg.horizon;
    for (const Signal* s : {&F, &Jsig})
        if (!s->is_constant()) onset = std::min(onset, s->breakpoints().front().time);
    bool have_min = false;
    if (onset < cfg.horizon) {
        try {
            r.t_min = find_event(traj, xdot, {.t_from = onset, .direction = Crossing::Rising});
            have_min = true;
        } catch (const ConvergenceError&) {
        }
    }
    if (have_min) {
        r.min_x = traj(r.t_min)[0];
    } else {
        r.min_x = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < traj.size(); ++i) {
            if (traj.states()[i][0] < r.min_x) {
                r.min_x = traj.states()[i][0];
                r.t_min = traj.times()[i];
            }
        }
    }
    r.dip_depth = r.baseline_x - r.min_x;
    r.dip_detected = have_min && r.dip_depth >= cfg.detect.dip_fraction * r.baseline_x;

    if (have_min) {
        try {
            r.t_overshoot = find_event(traj, xdot, {.t_from = r.t_min + 1e-9 * (1.0 + r.t_min),
                                                    .direction = Crossing::Falling});
            r.overshoot_max = traj(r.t_overshoot)[0];
            r.overshoot_detected = r.overshoot_max > r.baseline_x;
        } catch (const ConvergenceError&) {
        }
    }

    r.final_x = traj.back()[0];
    r.returned_to_baseline = std::abs(r.final_x - r.baseline_x) <= cfg.detect.return_tol;

    r.t_transient = manifold_distance_2d(traj, F, p).t_transient;
    const int n = 10001;
    std::size_t counted = 0, agreed = 0;
    for (int i = 0; i < n; ++i) {
        const double t = cfg.horizon * i / (n - 1);
        double target = std::numeric_limits<double>::quiet_NaN();
        try {
            target = stationary_point(cfg, {Jsig(t), 0.0, 0.0}, F(t))[0];
        } catch (const Error&) {
        }
        out.grid.push_back(t);
        out.target_x0.push_back(target);
        if (t < r.t_transient || !std::isfinite(target)) continue;
        const Vec s = traj(t);
        const double gap = target - s[0];
        ++counted;
        if (std::abs(gap) <= 1e-9 * (1.0 + std::abs(target)) || sign_of(problem.rhs(t, s)[0]) == sign_of(gap))
            ++agreed;
    }
    r.chase_fraction = counted ? static_cast<double>(agreed) / static_cast<double>(counted) : 0.0;
    return out;
}

BufferingResult run_buffering(const ScenarioConfig& cfg, int n_periods) {
    if (cfg.model != Model::TwoD) throw InvalidArgument("the buffering experiment uses the 2D model");
    if (n_periods < 1) throw InvalidArgument("n_periods must be at least 1");
    ScenarioConfig run = cfg;
    run.n_periods = n_periods;
    run.horizon = std::max(cfg.horizon, cfg.period * n_periods);
    run.validate();
    const double T = run.period;
    const Signal F = run.F.build();
    const Control J = run.J.control();
    require_periodic(F, T, "F");
    require_periodic(J.signal, T, "J");

    BufferingResult out;
    BufferingReport& r = out.report;
    r.period = T;
    r.n_periods = n_periods;

    const Eigen::VectorXd start = mean_input_equilibrium(run);
    const OdeProblem problem = problem_for(run, 0.0, T * n_periods);
    out.trajectory = integrate(problem, 0.0, T * n_periods, start, run.integrator);
    const Trajectory& traj = out.trajectory;

    for (int k = 0; k <= n_periods; ++k) r.section.push_back(k == 0 ? start : traj(k * T));
    for (int k = 0; k < n_periods; ++k) {
        r.displacement.push_back((r.section[k + 1] - r.section[k]).norm());
        double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
        auto visit = [&](const Vec& s) {
            xlo = std::min(xlo, s[0]);
            xhi = std::max(xhi, s[0]);
            ylo = std::min(ylo, s[1]);
            yhi = std::max(yhi, s[1]);
        };
        for (std::size_t i = 0; i < traj.size(); ++i)
            if (traj.times()[i] >= k * T && traj.times()[i] <= (k + 1) * T) visit(traj.states()[i]);
        for (int j = 0; j <= 64; ++j) visit(traj(k * T + T * j / 64.0));
        r.x_min.push_back(xlo);
        r.x_max.push_back(xhi);
        r.y_min.push_back(ylo);
        r.y_max.push_back(yhi);
    }

    const int need = run.detect.lock_periods;
    for (int k = 0; k + need <= n_periods && r.lock_period < 0; ++k) {
        bool all = true;
        for (int j = 0; j < need; ++j) all = all && r.displacement[k + j] <= run.detect.lock_threshold;
        if (all) r.lock_period = k + 1;
    }

    // Contraction: median ratio of successive displacements above the noise floor.
    std::vector<double> ratios;
    for (int k = 0; k + 1 < n_periods; ++k)
        if (r.displacement[k] > 1e-9 && r.displacement[k + 1] > 1e-11)
            ratios.push_back(r.displacement[k + 1] / r.displacement[k]);
    if (!ratios.empty()) {
        std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
        r.contraction_ratio = ratios[ratios.size() / 2];
    }
    r.locked = r.lock_period > 0 && r.contraction_ratio < 1.0;

    r.monotone_after_3 = true;
    for (int k = 3; k + 1 < n_periods; ++k) {
        if (r.displacement[k] <= 1e-10) break;
        if (r.displacement[k + 1] > r.displacement[k]) r.monotone_after_3 = false;
    }
    r.final_displacement = r.displacement.back();

    AveragingOptions aopt;
    aopt.integrator = run.integrator;
    out.averaging = predict_periodic_orbit(T, run.params, F, J, aopt);
    ShootingOptions sopt;
    sopt.integrator = run.integrator;
    sopt.max_iterations = run.shooting_max_iterations;
    sopt.tol = run.shooting_tol;
    out.orbit = refine_periodic_orbit(problem_for(run, 0.0, T), T, out.averaging.predicted_initial, sopt);
    r.shooting_agreement = (r.section.back() - out.orbit.fixed_point).lpNorm<Eigen::Infinity>();
    return out;
}

SensitivityTable run_sensitivity_4d(const ScenarioConfig& cfg, double delta) {
    if (cfg.model != Model::FourD) throw InvalidArgument("the sensitivity table uses the 4D model");
    if (!(delta > 0.0)) throw InvalidArgument("sensitivity delta must be positive");
    cfg.validate();
    const Params4D p = four_d_params(cfg);
    const double f = cfg.F.build()(0.0);
    const std::array<double, 3> J{cfg.J0.build()(0.0), cfg.J1.build()(0.0), cfg.J2.build()(0.0)};
    const double D = p.C * p.C2 + p.C * p.Ca + p.C2 * p.Ca;

    SensitivityTable table;
    table.base = equilibrium_4d(J[0], J[1], J[2], f, p);

    // Control combinations the claims are phrased in.
    auto P = [&](const std::array<double, 3>& j) {
        const double S = j[0] + j[1] + j[2];
        return (p.Ca * j[2] - (p.C2 + p.Ca) * S) / D;
    };
    auto Q = [&](const std::array<double, 3>& j) {
        const double S = j[0] + j[1] + j[2];
        return (p.C * j[2] + p.C2 * S) / D;
    };
    auto Ssum = [](const std::array<double, 3>& j) { return j[0] + j[1] + j[2]; };
    auto J1of = [](const std::array<double, 3>& j) { return j[1]; };

    struct Spec {
        std::string claim, response, driver, perturbation;
        int index;
        std::array<double, 3> step;
        std::function<double(const std::array<double, 3>&)> driver_fn;
        int claimed;
    };
    const std::vector<Spec> specs{
        {"decreasing J0+J1+J2 lowers y0", "y0", "J0+J1+J2", "J0 -= delta", 3, {-delta, 0.0, 0.0}, Ssum, +1},
        {"decreasing P lowers x0", "x0", "P", "J2 -= delta, J0 += delta", 0, {delta, 0.0, -delta}, P, +1},
        {"increasing J1 raises u0", "u0", "J1", "J1 += delta", 1, {0.0, delta, 0.0}, J1of, +1},
        {"increasing Q lowers v0", "v0", "Q", "J2 += delta, J0 -= delta", 2, {-delta, 0.0, delta}, Q, -1},
    };

    table.all_match = true;
    for (const Spec& s : specs) {
        SensitivityRow row;
        row.claim = s.claim;
        row.response = s.response;
        row.driver = s.driver;
        row.perturbation = s.perturbation;
        row.claimed_relation = s.claimed;
        std::array<double, 3> moved = J;
        for (int i = 0; i < 3; ++i) moved[i] += s.step[i];
        row.driver_change = s.driver_fn(moved) - s.driver_fn(J);
        try {
            const EquilibriumReport pert = equilibrium_4d(moved[0], moved[1], moved[2], f, p);
            row.response_change = pert.point[s.index] - table.base.point[s.index];
            row.testable = std::abs(row.driver_change) > 0.0 && row.response_change != 0.0;
        } catch (const InfeasibleError&) {
            row.testable = false;
        }
        if (row.testable) {
            row.observed_relation = sign_of(row.response_change) * sign_of(row.driver_change);
            row.matches = row.observed_relation == row.claimed_relation;
        }
        table.all_match = table.all_match && row.testable && row.matches;
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace lactodyn
