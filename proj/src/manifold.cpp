#include "lactodyn/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lactodyn/errors.hpp"

namespace lactodyn {

namespace {

// Roots of y^2 + b y - q = 0 with q > 0: one positive, one negative.
ManifoldPoint solve_branch(double b, double q) {
    ManifoldPoint m;
    m.discriminant = b * b + 4.0 * q;
    const double sq = std::sqrt(m.discriminant);
    if (b > 0.0) {
        m.y = 2.0 * q / (b + sq);
        m.other_root = -0.5 * (b + sq);
    } else {
        m.y = 0.5 * (-b + sq);
        m.other_root = -2.0 * q / (-b + sq);
    }
    return m;
}

void require_stimulus(double F) {
    if (!(F > 0.0)) throw InvalidArgument("critical manifold requires F > 0, got " + format_number(F));
}

}  // namespace

ManifoldPoint manifold_point_2d(double x, double F, const Params2D& p) {
    require_stimulus(F);
    const double S = p.C * michaelis(x, p.k);
    ManifoldPoint m = solve_branch(p.kprime - p.L + (p.C - S) / F, p.kprime * (p.L + S / F));
    m.x = x;
    m.gprime_y = attractiveness_2d(m.y, F, p);
    return m;
}

ManifoldPoint manifold_point_4d(double x, double v, double F, const Params4D& p) {
    require_stimulus(F);
    const double S = p.C * michaelis(x, p.k) + p.Ca * michaelis(v, p.ka);
    ManifoldPoint m = solve_branch(p.kprime - p.L + (p.C + p.Ca - S) / F, p.kprime * (p.L + S / F));
    m.x = x;
    m.v = v;
    m.gprime_y = attractiveness_4d(m.y, F, p);
    return m;
}

double phi_2d(double x, double F, const Params2D& p) { return manifold_point_2d(x, F, p).y; }
double phi_2d(double x, double t, const Params2D& p, const Signal& F) { return phi_2d(x, F(t), p); }
double phi_4d(double x, double v, double F, const Params4D& p) { return manifold_point_4d(x, v, F, p).y; }
double phi_4d(double x, double v, double t, const Params4D& p, const Signal& F) { return phi_4d(x, v, F(t), p); }

CriticalX critical_x_2d(double y, double F, const Params2D& p) {
    CriticalX c;
    c.B = p.C * michaelis(y, p.kprime) - F * (p.L - y);
    if (!(c.B < p.C)) throw InfeasibleError("no finite intersection: B(y) >= C");
    c.x = p.k * c.B / (p.C - c.B);
    c.feasible = c.B >= 0.0;
    return c;
}

double attractiveness_2d(double y, double F, const Params2D& p) {
    return -F - p.C * michaelis_slope(y, p.kprime);
}

double attractiveness_4d(double y, double F, const Params4D& p) {
    return -F - (p.C + p.Ca) * michaelis_slope(y, p.kprime);
}

MuBound mu_bound_2d(double x_lo, double x_hi, double t0, double t1, const Params2D& p, const Signal& F, int grid) {
    if (grid < 2) throw InvalidArgument("mu grid needs at least 2 points");
    MuBound out;
    out.mu = std::numeric_limits<double>::infinity();
    out.analytic_floor = std::numeric_limits<double>::infinity();
    std::vector<double> ts;
    for (int j = 0; j < grid; ++j) ts.push_back(t0 + (t1 - t0) * j / (grid - 1));
    for (double c : F.corners_in(t0, t1)) ts.push_back(c);
    for (double t : ts) {
        const double f = F(t);
        out.analytic_floor = std::min(out.analytic_floor, f);
        for (int i = 0; i < grid; ++i) {
            const double x = x_lo + (x_hi - x_lo) * i / (grid - 1);
            const double rate = -manifold_point_2d(x, f, p).gprime_y;
            if (rate < out.mu) {
                out.mu = rate;
                out.t_at_min = t;
                out.x_at_min = x;
            }
        }
    }
    return out;
}

MuBound mu_bound_4d(double x_lo, double x_hi, double v_lo, double v_hi, double t0, double t1, const Params4D& p,
                    const Signal& F, int grid) {
    if (grid < 2) throw InvalidArgument("mu grid needs at least 2 points");
    MuBound out;
    out.mu = std::numeric_limits<double>::infinity();
    out.analytic_floor = std::numeric_limits<double>::infinity();
    std::vector<double> ts;
    for (int j = 0; j < grid; ++j) ts.push_back(t0 + (t1 - t0) * j / (grid - 1));
    for (double c : F.corners_in(t0, t1)) ts.push_back(c);
    for (double t : ts) {
        const double f = F(t);
        out.analytic_floor = std::min(out.analytic_floor, f);
        for (int i = 0; i < grid; ++i) {
            const double x = x_lo + (x_hi - x_lo) * i / (grid - 1);
            for (int l = 0; l < grid; ++l) {
                const double v = v_lo + (v_hi - v_lo) * l / (grid - 1);
                const double rate = -manifold_point_4d(x, v, f, p).gprime_y;
                if (rate < out.mu) {
                    out.mu = rate;
                    out.t_at_min = t;
                    out.x_at_min = x;
                }
            }
        }
    }
    return out;
}

namespace {

template <class Projection>
DistanceSeries distance_series(const Trajectory& traj, double eps, std::optional<double> t_transient,
                               Projection&& project) {
    DistanceSeries out;
    out.mu_hat = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double t = traj.times()[i];
        const ManifoldPoint m = project(t, traj.states()[i]);
        const double y = traj.states()[i][traj.states()[i].size() - 1];
        out.times.push_back(t);
        out.distance.push_back(std::abs(y - m.y));
        out.mu_hat = std::min(out.mu_hat, -m.gprime_y);
    }
    out.t_transient = t_transient ? *t_transient : traj.t_begin() + 5.0 * eps / out.mu_hat;
    for (std::size_t i = 0; i < out.times.size(); ++i)
        if (out.times[i] >= out.t_transient) out.max_post_transient = std::max(out.max_post_transient, out.distance[i]);
    return out;
}

}  // namespace

DistanceSeries manifold_distance_2d(const Trajectory& traj, const Signal& F, const Params2D& p,
                                    std::optional<double> t_transient) {
    return distance_series(traj, p.eps, t_transient, [&](double t, const Vec& s) {
        return manifold_point_2d(s[0], F(t), p);
    });
}

DistanceSeries manifold_distance_4d(const Trajectory& traj, const Signal& F, const Params4D& p,
                                    std::optional<double> t_transient) {
    return distance_series(traj, p.eps, t_transient, [&](double t, const Vec& s) {
        return manifold_point_4d(s[0], s[2], F(t), p);
    });
}

void write_slice_csv_2d(std::ostream& out, const std::vector<double>& xs, double F, const Params2D& p) {
    out << "x,phi,gprime_y\n";
    for (double x : xs) {
        const ManifoldPoint m = manifold_point_2d(x, F, p);
        out << format_number(x) << ',' << format_number(m.y) << ',' << format_number(m.gprime_y) << '\n';
    }
}

void write_slice_csv_4d(std::ostream& out, const std::vector<double>& xs, const std::vector<double>& vs, double F,
                        const Params4D& p) {
    out << "x,v,phi,gprime_y\n";
    for (double x : xs) {
        for (double v : vs) {
            const ManifoldPoint m = manifold_point_4d(x, v, F, p);
            out << format_number(x) << ',' << format_number(v) << ',' << format_number(m.y) << ','
                << format_number(m.gprime_y) << '\n';
        }
    }
}

}  // namespace lactodyn
