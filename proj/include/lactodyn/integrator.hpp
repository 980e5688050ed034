#pragma once

// Adaptive integration of (possibly stiff) ODE systems.
//
// Two independent steppers are provided:
//   - Implicit: 5-stage, L-stable SDIRK of order 4 with an embedded order-3
//     solution, stages solved by damped Newton with the analytic Jacobian.
//   - ExplicitAdaptive: Dormand-Prince 5(4).
// Both produce cubic Hermite dense output on (state, derivative) at step ends.
// Signal corners are never stepped across: every time in
// OdeProblem::breakpoints becomes a step boundary.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lactodyn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class StiffnessMode { ExplicitAdaptive, Implicit };

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    StiffnessMode mode = StiffnessMode::Implicit;
    std::size_t max_steps = 5'000'000;

    void validate() const;
    bool operator==(const IntegratorConfig&) const = default;
};

struct OdeProblem {
    std::size_t dim = 0;
    std::function<Vec(double, const Vec&)> rhs;
    /// Required in implicit mode.
    std::function<Mat(double, const Vec&)> jacobian;
    /// Corner times of the inputs; each one inside the integration span is
    /// hit exactly by a step boundary.
    std::vector<double> breakpoints;
    /// Names for CSV export, e.g. {"x", "y"}.
    std::vector<std::string> names;
};

struct IntegratorStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
    std::size_t jacobian_evals = 0;
    std::size_t newton_failures = 0;
    /// First accepted time at which some component became negative.
    std::optional<double> quadrant_exit_time;
};

class Trajectory {
public:
    Trajectory() = default;
    Trajectory(std::vector<double> times, std::vector<Vec> states, std::vector<Vec> derivatives,
               IntegratorStats stats, std::vector<std::string> names);

    std::size_t size() const noexcept { return times_.size(); }
    std::size_t dim() const noexcept { return states_.empty() ? 0 : static_cast<std::size_t>(states_.front().size()); }
    double t_begin() const { return times_.front(); }
    double t_end() const { return times_.back(); }
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<Vec>& states() const noexcept { return states_; }
    const std::vector<Vec>& derivatives() const noexcept { return derivatives_; }
    const Vec& back() const { return states_.back(); }
    const IntegratorStats& stats() const noexcept { return stats_; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    /// Hermite interpolation inside the accepted step containing t.
    Vec operator()(double t) const;

private:
    std::vector<double> times_;
    std::vector<Vec> states_;
    std::vector<Vec> derivatives_;
    IntegratorStats stats_;
    std::vector<std::string> names_;
};

/// Throws IntegrationError on step-size underflow, step budget exhaustion or
/// a pole encountered that cannot be avoided by shrinking the step.
Trajectory integrate(const OdeProblem& problem, double t0, double t1, const Vec& s0,
                     const IntegratorConfig& cfg);

/// Throws InvalidArgument outside the trajectory span.
Vec dense_eval(const Trajectory& traj, double t);

enum class Crossing { Any, Rising, Falling };

struct EventOptions {
    double t_from = -std::numeric_limits<double>::infinity();
    double t_to = std::numeric_limits<double>::infinity();
    Crossing direction = Crossing::Any;
    /// Predicate samples per accepted step when scanning for the bracket.
    int samples_per_step = 8;
    double time_tol = 1e-10;
};

using EventPredicate = std::function<double(double, const Vec&)>;

/// First root of predicate(t, state(t)) in the window, located by bisection
/// on the dense output. Throws ConvergenceError when there is no sign change.
double find_event(const Trajectory& traj, const EventPredicate& predicate, const EventOptions& options = {});

/// CSV with header `t,<names...>` and 17 significant digits.
void write_csv(std::ostream& out, const Trajectory& traj);

}  // namespace lactodyn
