#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lactodyn/dynamics.hpp"

namespace lactodyn {

enum class Classification { Node, Focus, Saddle, Degenerate };

std::string to_string(Classification c);

struct EquilibriumReport {
    /// (x, y) for the 2D model, (x, u, v, y) for the 4D model.
    Eigen::VectorXd point;
    /// Euclidean norm of the stationarity brackets (fast row without 1/eps).
    double residual_norm = 0.0;
    std::vector<std::complex<double>> eigenvalues;
    Classification classification = Classification::Degenerate;
    bool stable = false;
    bool feasible = false;
};

/// Frozen-input stationary point of the 2D model:
///   y0 = L + J/F,  x0 = k r / (1 - r),  r = J/C + y0/(k'+y0).
/// Eigenvalues/classification are filled with J_x = 0. Throws InfeasibleError
/// naming the violated inequality.
EquilibriumReport equilibrium_2d(double J, double F, const Params2D& p);

struct Eigenpair2D {
    std::complex<double> lambda_plus;
    std::complex<double> lambda_minus;
    double trace;
    double determinant;
    double discriminant;  ///< trace^2 - 4 det
};

/// Eigenvalues of jacobian_2d at the point by the quadratic formula.
Eigenpair2D eigen_2d(const State2D& s, const Params2D& p, double J_x, double F);

Classification classify(const std::vector<std::complex<double>>& eigenvalues);

/// Classifies a 2D report in place (eigenvalues, class, stability) for the given coupling.
Classification classify_2d(EquilibriumReport& report, const Params2D& p, double J_x, double F);

/// Node-type discriminant of the frozen 2D system with J_x = 0, written with the
/// effective slow rate a = eps' * A:  (a + (B+F)/eps)^2 - 4 a F / eps.
double node_discriminant(double A, double B, double F, const Params2D& p);
/// (a - (B+F)/eps)^2, the lower bound that certifies node_discriminant > 0.
double node_discriminant_lower_bound(double A, double B, double F, const Params2D& p);

/// Frozen-input stationary point of the 4D model. Fractions r_z = z/(k_z+z):
///   y0   = L + S/F,  S = J0+J1+J2,  D = C C2 + C Ca + C2 Ca, b = y0/(k'+y0)
///   r_x  = b + ((C2+Ca) S - Ca J2) / D
///   r_v  = b + (C J2 + C2 S) / D
///   r_u  = r_x + J1 / C1
EquilibriumReport equilibrium_4d(double J0, double J1, double J2, double F, const Params4D& p);

struct NewtonOptions {
    double tol = 1e-12;
    int max_iterations = 200;
};

struct NewtonResult {
    Eigen::VectorXd point;
    double residual_norm = 0.0;
    int iterations = 0;
};

/// Damped Newton on residual(z) = 0. Throws ConvergenceError on
/// non-convergence or a singular Jacobian, DomainError if every damped step
/// lands on a pole.
NewtonResult newton_equilibrium(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                                const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
                                const Eigen::VectorXd& guess, const NewtonOptions& options = {});

/// Newton on the unscaled 2D/4D stationarity system with analytic Jacobian.
NewtonResult newton_equilibrium_2d(double J, double F, const Params2D& p, const State2D& guess,
                                   const NewtonOptions& options = {});
NewtonResult newton_equilibrium_4d(const Eigen::Vector3d& J, double F, const Params4D& p, const State4D& guess,
                                   const NewtonOptions& options = {});

}  // namespace lactodyn
