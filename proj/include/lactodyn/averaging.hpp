#pragma once

// Averaging on the slow manifold for T-periodic inputs.
//
// Pipeline: (a) uniform attractiveness of the critical manifold,
// (b) the linearised reduced slow equation xi' = A(t) xi has no nonzero
// T-periodic solution, (c) the averaged slow field f_bar has an isolated
// root x0. The predicted periodic orbit starts at (x0, phi(x0, 0)); Newton
// shooting on the true period map then refines it and yields the Floquet
// multipliers.

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "lactodyn/dynamics.hpp"
#include "lactodyn/integrator.hpp"

namespace lactodyn {

/// Quadrature of a smooth-between-corners integrand over [a, b]; the
/// interval is split at `corners` before adaptive Gauss-Kronrod refinement.
double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           std::vector<double> corners, double rel_tol = 1e-10);

/// Reduced slow linearisation along the manifold (scalar in 2D):
///   A(t) = eps' [ J_x - (k C/(k+x)^2) F / (F + k' C/(k'+y)^2) ],  y = phi(x, t).
double A_of_t(double x, double t, const Params2D& p, const Signal& F, double J_x);

struct ConditionB {
    double integral = 0.0;  ///< integral of A over one period
    bool pass = false;      ///< |integral| > 1e-8
};

ConditionB check_condition_b(double x_ref, double T, const Params2D& p, const Signal& F, double J_x);

/// f_bar(x) = J_bar(x) + L F_bar - (1/T) integral_0^T F(t) phi(x, t) dt.
double averaged_rhs(double x, double T, const Params2D& p, const Signal& F, const Control& J);

struct AveragedRoot {
    double x0 = 0.0;
    double isolation_margin = 0.0;  ///< |f_bar'(x0)|
    std::vector<std::pair<double, double>> brackets;
};

/// Scans [lo, hi] on `scan` points for sign changes of f_bar, polishes the
/// single bracket by safeguarded secant to |f_bar| <= 1e-12. Throws
/// ConditionError("c") for no bracket, several brackets, or |f_bar'| < 1e-8.
AveragedRoot find_averaged_root(double T, const Params2D& p, const Signal& F, const Control& J, double lo,
                                double hi, int scan = 256);

struct AveragingReport {
    double period = 0.0;
    double mu_bound = 0.0;        ///< measured min of -g'_y over the window
    double mu_floor = 0.0;        ///< min F(t)
    double condition_b_integral = 0.0;
    double x0_avg = 0.0;
    double isolation_margin = 0.0;
    Eigen::Vector2d predicted_initial = Eigen::Vector2d::Zero();
    /// |P(s0) - s0| of the true period-T flow at the prediction.
    double defect = 0.0;
    Eigen::Vector2d defect_vector = Eigen::Vector2d::Zero();
};

struct AveragingOptions {
    double search_lo = 1e-3;
    double search_hi = 50.0;
    int scan_points = 256;
    int mu_grid = 256;
    IntegratorConfig integrator{1e-10, 1e-12};
};

/// Checks conditions a, b, c and measures the defect of the prediction.
/// Throws ConditionError naming the first failed condition.
AveragingReport predict_periodic_orbit(double T, const Params2D& p, const Signal& F, const Control& J,
                                       const AveragingOptions& options = {});

struct PeriodicOrbitReport {
    Eigen::VectorXd fixed_point;
    double initial_defect = 0.0;  ///< |P(s) - s| at the starting guess
    double final_defect = 0.0;
    std::vector<std::complex<double>> floquet_multipliers;  ///< sorted by decreasing modulus
    int iterations = 0;
    bool stable = false;  ///< max |multiplier| < 1
};

struct ShootingOptions {
    int max_iterations = 50;
    double tol = 1e-10;
    IntegratorConfig integrator{1e-10, 1e-12};
};

/// Time-T flow map from t = 0.
Eigen::VectorXd period_map(const OdeProblem& problem, double T, const Eigen::VectorXd& s,
                           const IntegratorConfig& cfg);

/// Forward-difference monodromy matrix of the period map, step 1e-7 (1 + |s_i|).
Eigen::MatrixXd monodromy_fd(const OdeProblem& problem, double T, const Eigen::VectorXd& s,
                             const Eigen::VectorXd& Ps, const IntegratorConfig& cfg);

/// Newton on P(s) - s. Throws ConvergenceError after max_iterations.
PeriodicOrbitReport refine_periodic_orbit(const OdeProblem& problem, double T, const Eigen::VectorXd& guess,
                                          const ShootingOptions& options = {});

/// 2D convenience: builds the problem over one period.
PeriodicOrbitReport refine_periodic_orbit(const Eigen::Vector2d& guess, double T, const Params2D& p,
                                          const Signal& F, const Control& J, const ShootingOptions& options = {});

/// 4D condition b via the monodromy of the reduced 3x3 slow linearisation
/// about the frozen slow point (x, u, v): passes when no multiplier lies
/// within `threshold` of 1.
struct ConditionB4D {
    std::vector<std::complex<double>> multipliers;
    double distance_to_one = 0.0;
    bool pass = false;
};

ConditionB4D check_condition_b_4d(const Eigen::Vector3d& slow_point, double T, const Params4D& p, const Signal& F,
                                  const Eigen::Vector3d& J_x, double threshold = 1e-6);

/// Reduced slow matrix f_x - f_y g_y^{-1} g_x (including eps') at (x, u, v, phi(x, v, t)).
Eigen::Matrix3d reduced_slow_matrix_4d(const Eigen::Vector3d& slow_point, double t, const Params4D& p,
                                       const Signal& F, const Eigen::Vector3d& J_x);

}  // namespace lactodyn
