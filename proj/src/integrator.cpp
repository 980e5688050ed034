#include "lactodyn/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lactodyn/errors.hpp"
#include "lactodyn/signal.hpp"

namespace lactodyn {

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw InvalidArgument("integrator tolerances must be positive");
    if (!(max_step > 0.0)) throw InvalidArgument("integrator max_step must be positive");
    if (max_steps == 0) throw InvalidArgument("integrator max_steps must be positive");
}

Trajectory::Trajectory(std::vector<double> times, std::vector<Vec> states, std::vector<Vec> derivatives,
                       IntegratorStats stats, std::vector<std::string> names)
    : times_(std::move(times)),
      states_(std::move(states)),
      derivatives_(std::move(derivatives)),
      stats_(std::move(stats)),
      names_(std::move(names)) {}

Vec Trajectory::operator()(double t) const {
    if (times_.empty() || t < times_.front() || t > times_.back())
        throw InvalidArgument("dense query at t = " + format_number(t) + " outside trajectory span");
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    const auto i = static_cast<std::size_t>(it - times_.begin());
    if (*it == t) return states_[i];
    const double ta = times_[i - 1];
    const double h = times_[i] - ta;
    const double s = (t - ta) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * states_[i - 1] + (h10 * h) * derivatives_[i - 1] + h01 * states_[i] + (h11 * h) * derivatives_[i];
}

Vec dense_eval(const Trajectory& traj, double t) { return traj(t); }

namespace {

struct Weights {
    double rel_tol;
    double abs_tol;

    double norm(const Vec& e, const Vec& ya, const Vec& yb) const {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < e.size(); ++i) {
            const double scale = abs_tol + rel_tol * std::max(std::abs(ya[i]), std::abs(yb[i]));
            const double r = e[i] / scale;
            acc += r * r;
        }
        return std::sqrt(acc / static_cast<double>(e.size()));
    }
};

struct StepOutcome {
    bool converged = false;
    bool pole = false;
    Vec y;
    Vec f_end;  // derivative at the new point, when the method provides it
    double error = 0.0;
};

// Hairer & Wanner SDIRK4 (L-stable, stiffly accurate), embedded order 3.
constexpr double kGamma = 0.25;
constexpr int kStages = 5;
constexpr std::array<std::array<double, kStages>, kStages> kA{{
    {0.25, 0.0, 0.0, 0.0, 0.0},
    {0.5, 0.25, 0.0, 0.0, 0.0},
    {17.0 / 50.0, -1.0 / 25.0, 0.25, 0.0, 0.0},
    {371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25, 0.0},
    {25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25},
}};
constexpr std::array<double, kStages> kC{0.25, 0.75, 11.0 / 20.0, 0.5, 1.0};
constexpr std::array<double, kStages> kBhat{59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0};

class Sdirk4 {
public:
    Sdirk4(const OdeProblem& problem, const Weights& w, IntegratorStats& stats)
        : problem_(problem), w_(w), stats_(stats) {}

    StepOutcome step(double t, const Vec& y, const Vec& f0, double h) {
        StepOutcome out;
        const auto n = static_cast<Eigen::Index>(problem_.dim);
        const Mat jac = problem_.jacobian(t, y);
        ++stats_.jacobian_evals;
        const Mat iteration = Mat::Identity(n, n) - (h * kGamma) * jac;
        const Eigen::PartialPivLU<Mat> lu(iteration);

        std::array<Vec, kStages> K;
        Vec guess_slope = f0;
        try {
            for (int i = 0; i < kStages; ++i) {
                Vec base = y;
                for (int j = 0; j < i; ++j) base += (h * kA[i][j]) * K[j];
                const double ti = t + kC[i] * h;
                Vec Y = base + (h * kGamma) * guess_slope;
                if (!solve_stage(ti, base, h, lu, Y)) {
                    ++stats_.newton_failures;
                    return out;
                }
                K[i] = (Y - base) / (h * kGamma);
                guess_slope = K[i];
                if (i == kStages - 1) out.y = std::move(Y);
            }
        } catch (const DomainError&) {
            out.pole = true;
            return out;
        }
        Vec err = Vec::Zero(n);
        for (int i = 0; i < kStages; ++i) err += (h * (kA[kStages - 1][i] - kBhat[i])) * K[i];
        // Filtered estimate keeps the error of stiff components bounded.
        err = lu.solve(err);
        out.error = w_.norm(err, y, out.y);
        out.converged = true;
        return out;
    }

private:
    bool solve_stage(double ti, const Vec& base, double h, const Eigen::PartialPivLU<Mat>& lu, Vec& Y) {
        auto residual = [&](const Vec& z) {
            ++stats_.rhs_evals;
            return Vec(z - base - (h * kGamma) * problem_.rhs(ti, z));
        };
        Vec G = residual(Y);
        double previous = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < 10; ++iter) {
            const Vec delta = -lu.solve(G);
            const double dnorm = w_.norm(delta, Y, Y);
            if (!std::isfinite(dnorm)) return false;
            if (dnorm <= kNewtonTol) {
                Y += delta;
                return true;
            }
            if (iter > 0 && dnorm > previous) return false;
            previous = dnorm;
            // Damped update: backtrack while the residual grows.
            const double gnorm = w_.norm(G, Y, Y);
            double lambda = 1.0;
            Vec trial = Y + delta;
            Vec Gtrial = residual(trial);
            while (w_.norm(Gtrial, trial, trial) > gnorm && lambda > 1.0 / 16.0) {
                lambda *= 0.5;
                trial = Y + lambda * delta;
                Gtrial = residual(trial);
            }
            Y = std::move(trial);
            G = std::move(Gtrial);
        }
        return false;
    }

    static constexpr double kNewtonTol = 1e-2;
    const OdeProblem& problem_;
    Weights w_;
    IntegratorStats& stats_;
};

class DormandPrince {
public:
    DormandPrince(const OdeProblem& problem, const Weights& w, IntegratorStats& stats)
        : problem_(problem), w_(w), stats_(stats) {}

    StepOutcome step(double t, const Vec& y, const Vec& f0, double h) {
        static constexpr double a21 = 1.0 / 5.0;
        static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                                a54 = -212.0 / 729.0;
        static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                                a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
        static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                                b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
        static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                                e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
        StepOutcome out;
        try {
            auto f = [&](double tt, const Vec& z) {
                ++stats_.rhs_evals;
                return problem_.rhs(tt, z);
            };
            const Vec& k1 = f0;
            const Vec k2 = f(t + h / 5.0, y + h * a21 * k1);
            const Vec k3 = f(t + 3.0 * h / 10.0, y + h * (a31 * k1 + a32 * k2));
            const Vec k4 = f(t + 4.0 * h / 5.0, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
            const Vec k5 = f(t + 8.0 * h / 9.0, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            const Vec k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            out.y = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            Vec k7 = f(t + h, out.y);
            const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            out.error = w_.norm(err, y, out.y);
            out.f_end = std::move(k7);
        } catch (const DomainError&) {
            out.pole = true;
            return out;
        }
        out.converged = std::isfinite(out.error);
        return out;
    }

private:
    const OdeProblem& problem_;
    Weights w_;
    IntegratorStats& stats_;
};

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

template <class Stepper>
Trajectory drive(const OdeProblem& problem, double t0, double t1, const Vec& s0, const IntegratorConfig& cfg,
                 int error_order) {
    IntegratorStats stats;
    const Weights w{cfg.rel_tol, cfg.abs_tol};
    Stepper stepper(problem, w, stats);

    std::vector<double> stops;
    for (double b : problem.breakpoints)
        if (b > t0 && b < t1) stops.push_back(b);
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
    stops.push_back(t1);

    std::vector<double> times{t0};
    std::vector<Vec> states{s0};
    Vec f0;
    try {
        f0 = problem.rhs(t0, s0);
    } catch (const DomainError& e) {
        throw IntegrationError(std::string("initial state at pole: ") + e.what(), t0, to_std(s0));
    }
    ++stats.rhs_evals;
    std::vector<Vec> derivs{f0};

    double h;
    {
        const double d0 = w.norm(s0, s0, s0);
        const double d1 = w.norm(f0, s0, s0);
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min({h, cfg.max_step, t1 - t0});
    }

    const double exponent = 1.0 / static_cast<double>(error_order + 1);
    double t = t0;
    Vec y = s0;
    std::size_t steps = 0;
    bool last_failure_pole = false;
    for (double stop : stops) {
        while (t < stop) {
            if (++steps > cfg.max_steps)
                throw IntegrationError("step budget exhausted at t = " + format_number(t), t, to_std(y));
            double h_try = std::min(h, cfg.max_step);
            bool reaches_stop = false;
            if (t + 1.05 * h_try >= stop) {
                h_try = stop - t;
                reaches_stop = true;
            }
            if (h_try <= 1e-14 * std::max(1.0, std::abs(t))) {
                throw IntegrationError(
                    (last_failure_pole ? "pole exit near t = " : "step size underflow at t = ") + format_number(t),
                    t, to_std(y));
            }
            StepOutcome r = stepper.step(t, y, f0, h_try);
            if (!r.converged) {
                ++stats.rejected;
                last_failure_pole = r.pole;
                h = 0.25 * h_try;
                continue;
            }
            if (r.error > 1.0) {
                ++stats.rejected;
                last_failure_pole = false;
                h = h_try * std::max(0.2, 0.9 * std::pow(r.error, -exponent));
                continue;
            }
            const double t_new = reaches_stop ? stop : t + h_try;
            Vec f_new;
            if (r.f_end.size() == y.size()) {
                f_new = std::move(r.f_end);
            } else {
                try {
                    f_new = problem.rhs(t_new, r.y);
                    ++stats.rhs_evals;
                } catch (const DomainError&) {
                    ++stats.rejected;
                    last_failure_pole = true;
                    h = 0.25 * h_try;
                    continue;
                }
            }
            ++stats.accepted;
            last_failure_pole = false;
            t = t_new;
            y = std::move(r.y);
            f0 = f_new;
            if (!stats.quadrant_exit_time && (y.array() < 0.0).any()) stats.quadrant_exit_time = t;
            times.push_back(t);
            states.push_back(y);
            derivs.push_back(std::move(f_new));
            const double factor = r.error == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(r.error, -exponent)));
            h = h_try * factor;
        }
    }
    return Trajectory(std::move(times), std::move(states), std::move(derivs), stats, problem.names);
}

}  // namespace

Trajectory integrate(const OdeProblem& problem, double t0, double t1, const Vec& s0, const IntegratorConfig& cfg) {
    cfg.validate();
    if (!(t1 > t0)) throw InvalidArgument("integration requires t0 < t1");
    if (static_cast<std::size_t>(s0.size()) != problem.dim) throw InvalidArgument("initial state dimension mismatch");
    if (!problem.rhs) throw InvalidArgument("ODE problem has no right-hand side");
    if (cfg.mode == StiffnessMode::Implicit) {
        if (!problem.jacobian) throw InvalidArgument("implicit integration needs a Jacobian");
        return drive<Sdirk4>(problem, t0, t1, s0, cfg, 3);
    }
    return drive<DormandPrince>(problem, t0, t1, s0, cfg, 4);
}

double find_event(const Trajectory& traj, const EventPredicate& predicate, const EventOptions& options) {
    const double lo = std::max(options.t_from, traj.t_begin());
    const double hi = std::min(options.t_to, traj.t_end());
    if (!(hi > lo)) throw InvalidArgument("event window does not intersect the trajectory");

    auto crosses = [&](double a, double b) {
        switch (options.direction) {
            case Crossing::Rising: return a < 0.0 && b >= 0.0;
            case Crossing::Falling: return a > 0.0 && b <= 0.0;
            case Crossing::Any: break;
        }
        return (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0);
    };
    auto value_at = [&](double t) { return predicate(t, traj(t)); };

    const auto& times = traj.times();
    double t_prev = lo;
    double v_prev = value_at(lo);
    const auto first = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), lo) - times.begin());
    for (std::size_t i = first; i <= times.size(); ++i) {
        const double seg_end = (i == times.size() || times[i] > hi) ? hi : times[i];
        const int n = std::max(1, options.samples_per_step);
        const double seg_start = t_prev;
        for (int j = 1; j <= n; ++j) {
            const double t = (j == n) ? seg_end : seg_start + (seg_end - seg_start) * j / n;
            if (!(t > t_prev)) continue;
            const double v = value_at(t);
            if (crosses(v_prev, v)) {
                double a = t_prev, b = t;
                double va = v_prev;
                while (b - a > options.time_tol) {
                    const double m = 0.5 * (a + b);
                    if (m <= a || m >= b) break;
                    const double vm = value_at(m);
                    if ((va < 0.0) == (vm < 0.0) && vm != 0.0) {
                        a = m;
                        va = vm;
                    } else {
                        b = m;
                    }
                }
                return 0.5 * (a + b);
            }
            t_prev = t;
            v_prev = v;
        }
        if (seg_end >= hi) break;
    }
    throw ConvergenceError("event predicate has no sign change in [" + format_number(lo) + ", " +
                           format_number(hi) + "]");
}

void write_csv(std::ostream& out, const Trajectory& traj) {
    out << 't';
    for (const auto& n : traj.names()) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out << format_number(traj.times()[i]);
        for (Eigen::Index j = 0; j < traj.states()[i].size(); ++j) out << ',' << format_number(traj.states()[i][j]);
        out << '\n';
    }
}

}  // namespace lactodyn
