#include "lactodyn/equilibria.hpp"

#include <algorithm>
#include <cmath>

#include "lactodyn/errors.hpp"

namespace lactodyn {

std::string to_string(Classification c) {
    switch (c) {
        case Classification::Node: return "node";
        case Classification::Focus: return "focus";
        case Classification::Saddle: return "saddle";
        case Classification::Degenerate: return "degenerate";
    }
    return "degenerate";
}

namespace {

Params2D unit_scales(Params2D p) {
    p.eps = 1.0;
    p.eps_prime = 1.0;
    return p;
}

Params4D unit_scales(Params4D p) {
    p.eps = 1.0;
    p.eps_prime = 1.0;
    return p;
}

double fraction_to_concentration(double r, double k) { return k * r / (1.0 - r); }

}  // namespace

Eigenpair2D eigen_2d(const State2D& s, const Params2D& p, double J_x, double F) {
    const Eigen::Matrix2d jac = jacobian_2d(s, p, J_x, F);
    Eigenpair2D e{};
    e.trace = jac.trace();
    // det = eps' [A F - J_x (B + F)] / eps written out: the generic 2x2
    // formula cancels catastrophically when F << B.
    const double A = jac(1, 0) * p.eps;
    const double B = jac(0, 1) / p.eps_prime;
    e.determinant = p.eps_prime * (A * F - J_x * (B + F)) / p.eps;
    e.discriminant = e.trace * e.trace - 4.0 * e.determinant;
    if (e.discriminant >= 0.0) {
        // Avoid cancellation in the small root.
        const double sq = std::sqrt(e.discriminant);
        const double big = 0.5 * (e.trace + (e.trace >= 0.0 ? sq : -sq));
        const double small = big != 0.0 ? e.determinant / big : 0.0;
        e.lambda_plus = std::max(big, small);
        e.lambda_minus = std::min(big, small);
    } else {
        const double im = 0.5 * std::sqrt(-e.discriminant);
        e.lambda_plus = {0.5 * e.trace, im};
        e.lambda_minus = {0.5 * e.trace, -im};
    }
    return e;
}

Classification classify(const std::vector<std::complex<double>>& eigenvalues) {
    double scale = 0.0;
    for (const auto& l : eigenvalues) scale = std::max(scale, std::abs(l));
    if (scale == 0.0) return Classification::Degenerate;
    bool any_complex = false;
    bool any_pos = false;
    bool any_neg = false;
    for (const auto& l : eigenvalues) {
        if (std::abs(l.real()) <= 1e-14 * scale) return Classification::Degenerate;
        if (std::abs(l.imag()) > 1e-14 * scale) any_complex = true;
        (l.real() > 0.0 ? any_pos : any_neg) = true;
    }
    if (any_pos && any_neg) return Classification::Saddle;
    return any_complex ? Classification::Focus : Classification::Node;
}

Classification classify_2d(EquilibriumReport& report, const Params2D& p, double J_x, double F) {
    const State2D s = State2D::from(report.point);
    const Eigenpair2D e = eigen_2d(s, p, J_x, F);
    report.eigenvalues = {e.lambda_plus, e.lambda_minus};
    // Sign structure of (det, discriminant, trace) rather than eigenvalue
    // magnitudes: stiff nodes have |lambda_slow| / |lambda_fast| far below 1e-14.
    if (e.determinant < 0.0) {
        report.classification = Classification::Saddle;
    } else if (e.determinant == 0.0 || std::abs(e.discriminant) <= 1e-14 * e.trace * e.trace) {
        report.classification = Classification::Degenerate;
    } else if (e.discriminant < 0.0) {
        report.classification = e.trace == 0.0 ? Classification::Degenerate : Classification::Focus;
    } else {
        report.classification = Classification::Node;
    }
    report.stable = e.lambda_plus.real() < 0.0 && e.lambda_minus.real() < 0.0;
    return report.classification;
}

double node_discriminant(double A, double B, double F, const Params2D& p) {
    const double a = p.eps_prime * A;
    const double fast = (B + F) / p.eps;
    return (a + fast) * (a + fast) - 4.0 * a * F / p.eps;
}

double node_discriminant_lower_bound(double A, double B, double F, const Params2D& p) {
    const double a = p.eps_prime * A;
    const double fast = (B + F) / p.eps;
    return (a - fast) * (a - fast);
}

EquilibriumReport equilibrium_2d(double J, double F, const Params2D& p) {
    p.validate();
    if (!(F > 0.0)) throw InvalidArgument("equilibrium requires F > 0");
    const double y0 = p.L + J / F;
    if (!(y0 > 0.0)) throw InfeasibleError("no positive equilibrium: L + J/F <= 0");
    const double r = J / p.C + y0 / (p.kprime + y0);
    if (!(r < 1.0)) throw InfeasibleError("no positive equilibrium: J/C + y0/(k'+y0) >= 1");
    if (r < 0.0) throw InfeasibleError("no positive equilibrium: J/C + y0/(k'+y0) < 0");

    EquilibriumReport report;
    report.point = Eigen::Vector2d{fraction_to_concentration(r, p.k), y0};
    report.residual_norm = stationarity_2d(State2D::from(report.point), p, J, F).norm();
    report.feasible = true;
    classify_2d(report, p, 0.0, F);
    return report;
}

EquilibriumReport equilibrium_4d(double J0, double J1, double J2, double F, const Params4D& p) {
    p.validate();
    if (!(F > 0.0)) throw InvalidArgument("equilibrium requires F > 0");
    const double S = J0 + J1 + J2;
    const double y0 = p.L + S / F;
    if (!(y0 > 0.0)) throw InfeasibleError("no positive equilibrium: L + (J0+J1+J2)/F <= 0");
    const double b = y0 / (p.kprime + y0);
    const double D = p.C * p.C2 + p.C * p.Ca + p.C2 * p.Ca;
    const double rx = b + ((p.C2 + p.Ca) * S - p.Ca * J2) / D;
    const double rv = b + (p.C * J2 + p.C2 * S) / D;
    const double ru = rx + J1 / p.C1;
    auto check = [](double r, const char* name) {
        if (!(r > 0.0 && r < 1.0))
            throw InfeasibleError(std::string("no positive equilibrium: 0 < ") + name + " < 1 violated (value " +
                                  format_number(r) + ")");
    };
    check(rx, "x0/(k+x0)");
    check(ru, "u0/(kn+u0)");
    check(rv, "v0/(ka+v0)");

    EquilibriumReport report;
    report.point = Eigen::Vector4d{fraction_to_concentration(rx, p.k), fraction_to_concentration(ru, p.kn),
                                   fraction_to_concentration(rv, p.ka), y0};
    const State4D s = State4D::from(report.point);
    report.residual_norm = stationarity_4d(s, p, {J0, J1, J2}, F).norm();
    report.feasible = true;

    const Eigen::Matrix4d jac = jacobian_4d(s, p, Eigen::Vector3d::Zero(), F);
    const Eigen::EigenSolver<Eigen::Matrix4d> solver(jac, false);
    for (Eigen::Index i = 0; i < 4; ++i) report.eigenvalues.push_back(solver.eigenvalues()[i]);
    std::sort(report.eigenvalues.begin(), report.eigenvalues.end(),
              [](const auto& a, const auto& c) { return a.real() > c.real(); });
    report.classification = classify(report.eigenvalues);
    report.stable = std::all_of(report.eigenvalues.begin(), report.eigenvalues.end(),
                                [](const auto& l) { return l.real() < 0.0; });
    return report;
}

NewtonResult newton_equilibrium(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                                const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
                                const Eigen::VectorXd& guess, const NewtonOptions& options) {
    NewtonResult result;
    result.point = guess;
    Eigen::VectorXd r = residual(result.point);
    double norm = r.norm();
    while (!(norm <= options.tol)) {
        if (!std::isfinite(norm)) throw ConvergenceError("Newton residual is not finite");
        if (result.iterations >= options.max_iterations)
            throw ConvergenceError("Newton did not converge in " + std::to_string(options.max_iterations) +
                                   " iterations (residual " + format_number(norm) + ")");
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(jacobian(result.point));
        if (!lu.isInvertible()) throw ConvergenceError("singular Jacobian in Newton iteration");
        const Eigen::VectorXd delta = -lu.solve(r);

        double lambda = 1.0;
        bool accepted = false;
        bool hit_pole = false;
        for (int halving = 0; halving < 40; ++halving, lambda *= 0.5) {
            const Eigen::VectorXd trial = result.point + lambda * delta;
            Eigen::VectorXd r_trial;
            try {
                r_trial = residual(trial);
            } catch (const DomainError&) {
                hit_pole = true;
                continue;
            }
            const double n_trial = r_trial.norm();
            if (n_trial < (1.0 - 1e-4 * lambda) * norm) {
                result.point = trial;
                r = std::move(r_trial);
                norm = n_trial;
                accepted = true;
                break;
            }
        }
        ++result.iterations;
        if (!accepted) {
            if (hit_pole) throw DomainError("Newton line search blocked by a Michaelis pole");
            throw ConvergenceError("Newton line search stalled at residual " + format_number(norm));
        }
    }
    result.residual_norm = norm;
    return result;
}

NewtonResult newton_equilibrium_2d(double J, double F, const Params2D& p, const State2D& guess,
                                   const NewtonOptions& options) {
    const Params2D unit = unit_scales(p);
    return newton_equilibrium(
        [&](const Eigen::VectorXd& z) -> Eigen::VectorXd { return stationarity_2d(State2D::from(z), p, J, F); },
        [&](const Eigen::VectorXd& z) -> Eigen::MatrixXd { return jacobian_2d(State2D::from(z), unit, 0.0, F); },
        guess.vec(), options);
}

NewtonResult newton_equilibrium_4d(const Eigen::Vector3d& J, double F, const Params4D& p, const State4D& guess,
                                   const NewtonOptions& options) {
    const Params4D unit = unit_scales(p);
    return newton_equilibrium(
        [&](const Eigen::VectorXd& z) -> Eigen::VectorXd { return stationarity_4d(State4D::from(z), p, J, F); },
        [&](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
            return jacobian_4d(State4D::from(z), unit, Eigen::Vector3d::Zero(), F);
        },
        guess.vec(), options);
}

}  // namespace lactodyn
