#pragma once

// Vector fields of the controlled lactate-exchange models.
//
// 2D model (extracellular x, capillary y):
//   dx/dt = eps' [ J(t,x) - T(x,y) ]
//   dy/dt = (1/eps) [ F(t) (L - y) + T(x,y) ]
// with the saturating cotransport T(x,y) = C (x/(k+x) - y/(k'+y)).
//
// 4D model adds intra-neuron u and intra-astrocyte v, exchanging with the
// extracellular space (rates C1, C2) and the astrocyte with the capillary (Ca).
// All right-hand sides are returned in explicit form, the fast row already
// divided by eps.

#include <Eigen/Dense>

#include "lactodyn/signal.hpp"

namespace lactodyn {

struct Params2D {
    double C = 1.0;       ///< max cotransport rate across the barrier, mM/s
    double k = 1.0;       ///< Michaelis constant, extracellular side, mM
    double kprime = 1.0;  ///< Michaelis constant, capillary side, mM
    double L = 1.0;       ///< capillary supply level, mM
    double eps = 1e-2;
    double eps_prime = 1e-1;

    /// Throws InvalidArgument unless every field is finite and positive.
    void validate() const;
    /// True when either time-scale ratio exceeds 0.5 (fast-slow structure questionable).
    bool weak_separation() const { return eps > 0.5 || eps_prime > 0.5; }
    bool operator==(const Params2D&) const = default;
};

struct Params4D : Params2D {
    double C1 = 1.0;  ///< neuron <-> extracellular
    double C2 = 1.0;  ///< astrocyte <-> extracellular
    double Ca = 1.0;  ///< astrocyte <-> capillary
    double kn = 1.0;
    double ka = 1.0;

    void validate() const;
    bool operator==(const Params4D&) const = default;
};

struct State2D {
    double x = 0.0;
    double y = 0.0;

    Eigen::Vector2d vec() const { return {x, y}; }
    static State2D from(const Eigen::Ref<const Eigen::VectorXd>& s) { return {s[0], s[1]}; }
};

struct State4D {
    double x = 0.0;
    double u = 0.0;
    double v = 0.0;
    double y = 0.0;

    Eigen::Vector4d vec() const { return {x, u, v, y}; }
    static State4D from(const Eigen::Ref<const Eigen::VectorXd>& s) { return {s[0], s[1], s[2], s[3]}; }
};

/// Michaelis fraction a/(k+a). Throws DomainError within 1e-12*k of the pole.
double michaelis(double a, double k);

/// d/da of a/(k+a) = k/(k+a)^2.
double michaelis_slope(double a, double k);

/// Cmax * (a/(ka+a) - b/(kb+b)).
double cotransport(double a, double b, double Cmax, double ka, double kb);

Eigen::Vector2d rhs_2d(double t, const State2D& s, const Params2D& p, const Control& J, const Signal& F);

/// Analytic Jacobian of rhs_2d with frozen control coupling J_x and stimulus value F.
Eigen::Matrix2d jacobian_2d(const State2D& s, const Params2D& p, double J_x, double F);

/// F (L - y) + C (x/(k+x) - y/(k'+y)); zero set is the critical manifold.
double fast_nullcline_g_2d(double x, double y, double F, const Params2D& p);
double fast_nullcline_g_2d(double x, double y, double t, const Params2D& p, const Signal& F);

struct Controls4D {
    Control J0;
    Control J1;
    Control J2;
    bool operator==(const Controls4D&) const = default;
};

Eigen::Vector4d rhs_4d(double t, const State4D& s, const Params4D& p, const Controls4D& J, const Signal& F);

/// Jacobian of rhs_4d in (x, u, v, y) order; couplings act on x.
Eigen::Matrix4d jacobian_4d(const State4D& s, const Params4D& p, const Eigen::Vector3d& J_x, double F);

double fast_nullcline_g_4d(double x, double v, double y, double F, const Params4D& p);
double fast_nullcline_g_4d(double x, double v, double y, double t, const Params4D& p, const Signal& F);

/// Stationarity residual in unscaled form: (J - T, F(L-y) + T), i.e. the
/// brackets of the 2D equations without eps factors.
Eigen::Vector2d stationarity_2d(const State2D& s, const Params2D& p, double J, double F);
Eigen::Vector4d stationarity_4d(const State4D& s, const Params4D& p, const Eigen::Vector3d& J, double F);

}  // namespace lactodyn
