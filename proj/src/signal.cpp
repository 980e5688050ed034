#include "lactodyn/signal.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "lactodyn/errors.hpp"

namespace lactodyn {

namespace {

double interpolate(const std::vector<Breakpoint>& pts, double t) {
    if (t <= pts.front().time) return pts.front().value;
    if (t >= pts.back().time) return pts.back().value;
    auto hi = std::upper_bound(pts.begin(), pts.end(), t,
                               [](double v, const Breakpoint& b) { return v < b.time; });
    auto lo = hi - 1;
    const double w = (t - lo->time) / (hi->time - lo->time);
    return lo->value + w * (hi->value - lo->value);
}

// Integral of the held/interpolated polyline from pts.front().time to t.
double polyline_primitive(const std::vector<Breakpoint>& pts, double t) {
    const double t0 = pts.front().time;
    if (t <= t0) return pts.front().value * (t - t0);
    double acc = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const auto& a = pts[i - 1];
        const auto& b = pts[i];
        if (t <= b.time) {
            const double vt = a.value + (t - a.time) / (b.time - a.time) * (b.value - a.value);
            return acc + 0.5 * (a.value + vt) * (t - a.time);
        }
        acc += 0.5 * (a.value + b.value) * (b.time - a.time);
    }
    return acc + pts.back().value * (t - pts.back().time);
}

double parse_double(std::string_view token, int line) {
    std::string s(token);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        throw ParseError("invalid number '" + s + "'", line);
    return v;
}

}  // namespace

Signal::Signal() : Signal({{0.0, 0.0}}) {}

Signal::Signal(std::vector<Breakpoint> breakpoints, std::optional<double> period)
    : points_(std::move(breakpoints)), period_(period) {
    if (points_.empty()) throw InvalidArgument("signal needs at least one breakpoint");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!std::isfinite(points_[i].time) || !std::isfinite(points_[i].value))
            throw InvalidArgument("signal breakpoints must be finite");
        if (i > 0 && !(points_[i].time > points_[i - 1].time))
            throw InvalidArgument("signal breakpoint times must be strictly increasing");
    }
    if (!period_) {
        cycle_ = points_;
        return;
    }
    const double P = *period_;
    if (!(P > 0.0) || !std::isfinite(P)) throw InvalidArgument("signal period must be positive");
    if (points_.front().time < 0.0 || points_.back().time > P)
        throw InvalidArgument("periodic signal breakpoints must lie in [0, period]");
    if (points_.front().time == 0.0 && points_.back().time == P &&
        points_.front().value != points_.back().value)
        throw InvalidArgument("periodic signal is discontinuous at the period boundary");

    // Wrap-around segment joins (last, value) to (first + P, value).
    const Breakpoint& first = points_.front();
    const Breakpoint& last = points_.back();
    double v0 = first.value;
    if (first.time > 0.0 && last.time < P) {
        const double span = first.time + (P - last.time);
        v0 = last.value + (P - last.time) / span * (first.value - last.value);
    } else if (first.time > 0.0) {
        v0 = last.value;
    }
    if (first.time > 0.0) cycle_.push_back({0.0, v0});
    cycle_.insert(cycle_.end(), points_.begin(), points_.end());
    if (last.time < P) cycle_.push_back({P, v0});
}

Signal Signal::constant(double value) { return Signal({{0.0, value}}); }

double Signal::eval_cycle(double tau) const { return interpolate(cycle_, tau); }

double Signal::operator()(double t) const {
    if (!period_) return eval_cycle(t);
    double tau = std::fmod(t, *period_);
    if (tau < 0.0) tau += *period_;
    return eval_cycle(tau);
}

double Signal::primitive_cycle(double tau) const { return polyline_primitive(cycle_, tau); }

double Signal::primitive(double t) const {
    if (!period_) return primitive_cycle(t);
    const double P = *period_;
    const double n = std::floor(t / P);
    const double tau = t - n * P;
    return n * primitive_cycle(P) + primitive_cycle(tau);
}

double Signal::integral(double a, double b) const { return primitive(b) - primitive(a); }

double Signal::max_slope() const {
    double m = 0.0;
    for (std::size_t i = 1; i < cycle_.size(); ++i) {
        const double s = std::abs(cycle_[i].value - cycle_[i - 1].value) /
                         (cycle_[i].time - cycle_[i - 1].time);
        m = std::max(m, s);
    }
    return m;
}

double Signal::min_value() const {
    return std::min_element(cycle_.begin(), cycle_.end(),
                            [](const Breakpoint& a, const Breakpoint& b) { return a.value < b.value; })
        ->value;
}

double Signal::max_value() const {
    return std::max_element(cycle_.begin(), cycle_.end(),
                            [](const Breakpoint& a, const Breakpoint& b) { return a.value < b.value; })
        ->value;
}

bool Signal::is_constant() const { return min_value() == max_value(); }

std::vector<double> Signal::corners_in(double t0, double t1) const {
    std::vector<double> out;
    if (!period_) {
        for (const auto& b : points_)
            if (b.time > t0 && b.time < t1) out.push_back(b.time);
        return out;
    }
    const double P = *period_;
    const auto k0 = static_cast<long long>(std::floor(t0 / P));
    const auto k1 = static_cast<long long>(std::ceil(t1 / P));
    for (long long k = k0; k <= k1; ++k) {
        const double shift = static_cast<double>(k) * P;
        for (const auto& b : cycle_) {
            const double t = shift + b.time;
            if (t > t0 && t < t1) out.push_back(t);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double eval(const Signal& signal, double t) { return signal(t); }

double average(const Signal& signal, double T) {
    if (!(T > 0.0)) throw InvalidArgument("averaging window must be positive");
    return signal.integral(0.0, T) / T;
}

Signal make_trapezoid(const TrapezoidSpec& spec) {
    if (!(spec.base > 0.0)) throw InvalidArgument("trapezoid base must be positive");
    if (!(spec.boost_fraction >= 0.0)) throw InvalidArgument("trapezoid boost fraction must be >= 0");
    if (!(spec.t_start < spec.t_rise_end && spec.t_rise_end <= spec.t_fall_start &&
          spec.t_fall_start < spec.t_end))
        throw InvalidArgument("trapezoid times must satisfy t_start < t_rise_end <= t_fall_start < t_end");
    if (spec.period && (spec.t_start < 0.0 || spec.t_end > *spec.period))
        throw InvalidArgument("periodic trapezoid must fit inside one period");
    if (spec.boost_fraction == 0.0) return Signal({{0.0, spec.base}}, spec.period);

    const double peak = (1.0 + spec.boost_fraction) * spec.base;
    std::vector<Breakpoint> pts{{spec.t_start, spec.base}, {spec.t_rise_end, peak}};
    if (spec.t_fall_start > spec.t_rise_end) pts.push_back({spec.t_fall_start, peak});
    pts.push_back({spec.t_end, spec.base});
    return Signal(std::move(pts), spec.period);
}

Signal make_dip_control(const DipControlSpec& spec) {
    if (!(spec.J1 > spec.J0)) throw InvalidArgument("dip control requires J1 > J0");
    if (!(spec.Jm1 < spec.J0)) throw InvalidArgument("dip control requires Jm1 < J0");
    const double times[] = {spec.t_rise_start, spec.t_rise_end, spec.t_fall_start,
                            spec.t_fall_end, spec.t_recover_start, spec.t_recover_end};
    for (int i = 1; i < 6; ++i)
        if (!(times[i] > times[i - 1]))
            throw InvalidArgument("dip control transition times must be strictly increasing");
    if (spec.period && (times[0] < 0.0 || times[5] > *spec.period))
        throw InvalidArgument("periodic dip control must fit inside one period");
    return Signal({{times[0], spec.J0},
                   {times[1], spec.J1},
                   {times[2], spec.J1},
                   {times[3], spec.Jm1},
                   {times[4], spec.Jm1},
                   {times[5], spec.J0}},
                  spec.period);
}

std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string to_text(const Signal& signal) {
    std::string out = "# period=";
    out += signal.period() ? format_number(*signal.period()) : std::string("none");
    out += '\n';
    for (const auto& b : signal.breakpoints()) {
        out += format_number(b.time);
        out += ' ';
        out += format_number(b.value);
        out += '\n';
    }
    return out;
}

Signal signal_from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    bool have_header = false;
    std::optional<double> period;
    std::vector<Breakpoint> pts;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (!have_header) {
            const std::string prefix = "# period=";
            if (line.rfind(prefix, 0) != 0) throw ParseError("expected '# period=<T|none>' header", lineno);
            const std::string value = line.substr(prefix.size());
            if (value != "none") period = parse_double(value, lineno);
            have_header = true;
            continue;
        }
        std::istringstream fields(line);
        std::string ts, vs, extra;
        if (!(fields >> ts >> vs) || (fields >> extra))
            throw ParseError("expected 't value' pair", lineno);
        pts.push_back({parse_double(ts, lineno), parse_double(vs, lineno)});
    }
    if (!have_header) throw ParseError("missing '# period=' header");
    try {
        return Signal(std::move(pts), period);
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
}

}  // namespace lactodyn
