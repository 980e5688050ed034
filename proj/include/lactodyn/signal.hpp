#pragma once

// Piecewise-linear, optionally periodic scalar signals of time.
//
// A Signal serves both the stimulus F(t) and every control J(t). Between
// breakpoints values are linearly interpolated; outside the breakpoint range
// a non-periodic signal holds its first/last value, while a periodic signal
// wraps around with a closing segment from the last breakpoint back to the
// first one shifted by one period.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lactodyn {

struct Breakpoint {
    double time;
    double value;
    bool operator==(const Breakpoint&) const = default;
};

class Signal {
public:
    /// Constant zero signal.
    Signal();
    /// Breakpoint times must be strictly increasing. For periodic signals all
    /// times lie in [0, period]; if both 0 and period are present, their
    /// values must agree.
    explicit Signal(std::vector<Breakpoint> breakpoints, std::optional<double> period = std::nullopt);

    static Signal constant(double value);

    double operator()(double t) const;

    /// Exact integral over [a, b] (piecewise trapezoid areas).
    double integral(double a, double b) const;

    /// Largest absolute segment slope; a Lipschitz constant for the signal.
    double max_slope() const;

    double min_value() const;
    double max_value() const;

    /// Corner times strictly inside (t0, t1), sorted. Periodic signals also
    /// report every multiple of the period.
    std::vector<double> corners_in(double t0, double t1) const;

    const std::vector<Breakpoint>& breakpoints() const noexcept { return points_; }
    const std::optional<double>& period() const noexcept { return period_; }
    bool is_constant() const;

    bool operator==(const Signal&) const = default;

private:
    double eval_cycle(double tau) const;
    double primitive(double t) const;
    double primitive_cycle(double tau) const;
    std::vector<Breakpoint> points_;
    std::optional<double> period_;
    // Periodic: points covering [0, period] including the wrap-around
    // segment. Otherwise identical to points_.
    std::vector<Breakpoint> cycle_;
};

double eval(const Signal& signal, double t);

/// (1/T) * integral of the signal over [0, T], in closed form.
double average(const Signal& signal, double T);

/// Stimulus with linear rise, plateau at (1 + boost_fraction) * base, linear fall.
struct TrapezoidSpec {
    double base = 0.5;
    double boost_fraction = 0.5;
    double t_start = 0.0;
    double t_rise_end = 1.0;
    double t_fall_start = 2.0;
    double t_end = 3.0;
    std::optional<double> period;
    bool operator==(const TrapezoidSpec&) const = default;
};

Signal make_trapezoid(const TrapezoidSpec& spec);

/// Control protocol J0 -> J1 -> Jm1 -> J0 with linear transitions.
struct DipControlSpec {
    double J0 = 0.2;
    double J1 = 0.3;
    double Jm1 = 0.1;
    double t_rise_start = 0.0;
    double t_rise_end = 1.0;
    double t_fall_start = 2.0;
    double t_fall_end = 3.0;
    double t_recover_start = 4.0;
    double t_recover_end = 5.0;
    std::optional<double> period;
    bool operator==(const DipControlSpec&) const = default;
};

Signal make_dip_control(const DipControlSpec& spec);

/// Control with optional affine state coupling: J(t, x) = J(t) + coupling * (x - x_ref).
struct Control {
    Signal signal;
    double coupling = 0.0;
    double x_ref = 0.0;

    double operator()(double t, double x) const { return signal(t) + coupling * (x - x_ref); }
    bool operator==(const Control&) const = default;
};

/// Text form: header `# period=<T|none>` then one `t value` pair per line, 17 significant digits.
std::string to_text(const Signal& signal);
Signal signal_from_text(std::string_view text);

/// `%.17g` decimal form; parses back to the identical double.
std::string format_number(double value);

}  // namespace lactodyn
