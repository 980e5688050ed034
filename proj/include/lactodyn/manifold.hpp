#pragma once

// Critical manifold of the fast capillary equation and its attractiveness.
//
// For fixed slow coordinates the fast nullcline g = 0 is a quadratic in y,
//   y^2 + p y - q = 0,   p = k' - L + (C + Ca - S)/F,   q = k' (L + S/F),
// with S = C x/(k+x) (+ Ca v/(ka+v) in 4D, Ca = 0 in 2D). q > 0 makes the
// roots real with opposite signs; phi is the nonnegative one.

#include <optional>
#include <ostream>
#include <vector>

#include "lactodyn/dynamics.hpp"
#include "lactodyn/integrator.hpp"

namespace lactodyn {

struct ManifoldPoint {
    double x = 0.0;
    std::optional<double> v;  ///< astrocyte coordinate, 4D only
    double y = 0.0;           ///< phi(x[, v], t)
    double other_root = 0.0;  ///< discarded (negative) root
    double discriminant = 0.0;
    double gprime_y = 0.0;    ///< dg/dy on the manifold, strictly negative
};

/// Throws InvalidArgument when F <= 0, DomainError at a pole.
ManifoldPoint manifold_point_2d(double x, double F, const Params2D& p);
ManifoldPoint manifold_point_4d(double x, double v, double F, const Params4D& p);

double phi_2d(double x, double F, const Params2D& p);
double phi_2d(double x, double t, const Params2D& p, const Signal& F);
double phi_4d(double x, double v, double F, const Params4D& p);
double phi_4d(double x, double v, double t, const Params4D& p, const Signal& F);

struct CriticalX {
    double x = 0.0;
    double B = 0.0;  ///< C y/(k'+y) - F (L - y)
    bool feasible = false;
};

/// Unique x with g(x, y) = 0: x = k B / (C - B). Throws InfeasibleError when B >= C;
/// B < 0 yields a negative x reported with feasible = false.
CriticalX critical_x_2d(double y, double F, const Params2D& p);

/// -F - C k'/(k'+y)^2.
double attractiveness_2d(double y, double F, const Params2D& p);
/// -F - (C + Ca) k'/(k'+y)^2.
double attractiveness_4d(double y, double F, const Params4D& p);

struct MuBound {
    double mu = 0.0;             ///< min of -g'_y over the sampled window
    double analytic_floor = 0.0; ///< min F(t): guaranteed lower bound for mu
    double t_at_min = 0.0;
    double x_at_min = 0.0;
};

/// Grid minimisation of F(t) + C k'/(k'+phi)^2 over x in [x_lo, x_hi], t in [t0, t1].
MuBound mu_bound_2d(double x_lo, double x_hi, double t0, double t1, const Params2D& p, const Signal& F,
                    int grid = 256);
MuBound mu_bound_4d(double x_lo, double x_hi, double v_lo, double v_hi, double t0, double t1, const Params4D& p,
                    const Signal& F, int grid = 64);

struct DistanceSeries {
    std::vector<double> times;
    std::vector<double> distance;  ///< |y - phi|
    double t_transient = 0.0;
    double mu_hat = 0.0;           ///< min of -g'_y along the trajectory's manifold projection
    double max_post_transient = 0.0;
};

/// Per-sample |y(t) - phi(x(t), t)|. Without an explicit t_transient the
/// transient is 5 eps / mu_hat past the trajectory start.
DistanceSeries manifold_distance_2d(const Trajectory& traj, const Signal& F, const Params2D& p,
                                    std::optional<double> t_transient = std::nullopt);
DistanceSeries manifold_distance_4d(const Trajectory& traj, const Signal& F, const Params4D& p,
                                    std::optional<double> t_transient = std::nullopt);

/// CSV `x,phi,gprime_y` over an x grid at stimulus value F.
void write_slice_csv_2d(std::ostream& out, const std::vector<double>& xs, double F, const Params2D& p);
/// CSV `x,v,phi,gprime_y` over the tensor grid xs x vs.
void write_slice_csv_4d(std::ostream& out, const std::vector<double>& xs, const std::vector<double>& vs, double F,
                        const Params4D& p);

}  // namespace lactodyn
