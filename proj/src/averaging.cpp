#include "lactodyn/averaging.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lactodyn/errors.hpp"
#include "lactodyn/manifold.hpp"
#include "lactodyn/model.hpp"

namespace lactodyn {

double integrate_piecewise(const std::function<double(double)>& f, double a, double b, std::vector<double> corners,
                           double rel_tol) {
    using boost::math::quadrature::gauss_kronrod;
    std::vector<double> cuts{a};
    std::sort(corners.begin(), corners.end());
    for (double c : corners)
        if (c > a && c < b && c > cuts.back()) cuts.push_back(c);
    cuts.push_back(b);
    double total = 0.0;
    for (std::size_t i = 1; i < cuts.size(); ++i)
        total += gauss_kronrod<double, 15>::integrate(f, cuts[i - 1], cuts[i], 15, rel_tol);
    return total;
}

double A_of_t(double x, double t, const Params2D& p, const Signal& F, double J_x) {
    const double f = F(t);
    const double y = phi_2d(x, f, p);
    const double A = p.C * michaelis_slope(x, p.k);
    const double B = p.C * michaelis_slope(y, p.kprime);
    return p.eps_prime * (J_x - A * f / (f + B));
}

ConditionB check_condition_b(double x_ref, double T, const Params2D& p, const Signal& F, double J_x) {
    if (!(T > 0.0)) throw InvalidArgument("period must be positive");
    ConditionB out;
    out.integral = integrate_piecewise([&](double t) { return A_of_t(x_ref, t, p, F, J_x); }, 0.0, T,
                                       F.corners_in(0.0, T));
    if (!std::isfinite(out.integral)) throw ConvergenceError("condition b quadrature failed");
    out.pass = std::abs(out.integral) > 1e-8;
    return out;
}

double averaged_rhs(double x, double T, const Params2D& p, const Signal& F, const Control& J) {
    if (!(T > 0.0)) throw InvalidArgument("period must be positive");
    const double J_bar = average(J.signal, T) + J.coupling * (x - J.x_ref);
    const double F_bar = average(F, T);
    const double flux = integrate_piecewise(
        [&](double t) {
            const double f = F(t);
            return f * phi_2d(x, f, p);
        },
        0.0, T, F.corners_in(0.0, T));
    return J_bar + p.L * F_bar - flux / T;
}

AveragedRoot find_averaged_root(double T, const Params2D& p, const Signal& F, const Control& J, double lo, double hi,
                                int scan) {
    if (!(hi > lo) || scan < 2) throw InvalidArgument("root search needs lo < hi and at least 2 scan points");
    auto fbar = [&](double x) { return averaged_rhs(x, T, p, F, J); };

    AveragedRoot out;
    double x_prev = lo;
    double f_prev = fbar(lo);
    for (int i = 1; i < scan; ++i) {
        const double x = lo + (hi - lo) * i / (scan - 1);
        const double f = fbar(x);
        if (f_prev == 0.0) {
            out.brackets.emplace_back(x_prev, x_prev);
        } else if ((f_prev < 0.0) != (f < 0.0) && f != 0.0) {
            out.brackets.emplace_back(x_prev, x);
        }
        x_prev = x;
        f_prev = f;
    }
    if (f_prev == 0.0) out.brackets.emplace_back(x_prev, x_prev);

    if (out.brackets.empty())
        throw ConditionError("c", "averaged field has no sign change in [" + format_number(lo) + ", " +
                                      format_number(hi) + "]");
    if (out.brackets.size() > 1) {
        std::string list;
        for (const auto& [a, b] : out.brackets) list += " [" + format_number(a) + ", " + format_number(b) + "]";
        throw ConditionError("c", "averaged field has " + std::to_string(out.brackets.size()) + " roots:" + list);
    }

    // Safeguarded secant: keep a sign-changing bracket, bisect when the
    // secant iterate leaves it.
    auto [a, b] = out.brackets.front();
    double fa = fbar(a);
    double fb = fbar(b);
    double x = a;
    double fx = fa;
    if (a != b) {
        double x0 = a, f0 = fa, x1 = b, f1 = fb;
        for (int iter = 0; iter < 200; ++iter) {
            double cand = (f1 != f0) ? x1 - f1 * (x1 - x0) / (f1 - f0) : 0.5 * (a + b);
            if (!(cand > std::min(a, b) && cand < std::max(a, b))) cand = 0.5 * (a + b);
            const double fc = fbar(cand);
            x = cand;
            fx = fc;
            if (std::abs(fc) <= 1e-12 || std::abs(b - a) <= 4e-16 * std::max(1.0, std::abs(cand))) break;
            if ((fa < 0.0) == (fc < 0.0)) {
                a = cand;
                fa = fc;
            } else {
                b = cand;
                fb = fc;
            }
            x0 = x1;
            f0 = f1;
            x1 = cand;
            f1 = fc;
        }
        if (std::abs(fx) > 1e-12 && std::abs(b - a) > 1e-12 * std::max(1.0, std::abs(x)))
            throw ConvergenceError("secant polish of the averaged root did not converge");
    }
    out.x0 = x;
    const double h = 1e-5 * (1.0 + std::abs(x));
    out.isolation_margin = std::abs((fbar(x + h) - fbar(x - h)) / (2.0 * h));
    if (out.isolation_margin < 1e-8)
        throw ConditionError("c", "averaged root is not isolated (|f_bar'| = " + format_number(out.isolation_margin) + ")");
    return out;
}

Eigen::VectorXd period_map(const OdeProblem& problem, double T, const Eigen::VectorXd& s, const IntegratorConfig& cfg) {
    return integrate(problem, 0.0, T, s, cfg).back();
}

Eigen::MatrixXd monodromy_fd(const OdeProblem& problem, double T, const Eigen::VectorXd& s, const Eigen::VectorXd& Ps,
                             const IntegratorConfig& cfg) {
    const auto n = s.size();
    Eigen::MatrixXd M(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::VectorXd shifted = s;
        const double h = 1e-7 * (1.0 + std::abs(s[j]));
        shifted[j] += h;
        M.col(j) = (period_map(problem, T, shifted, cfg) - Ps) / h;
    }
    return M;
}

AveragingReport predict_periodic_orbit(double T, const Params2D& p, const Signal& F, const Control& J,
                                       const AveragingOptions& options) {
    AveragingReport report;
    report.period = T;

    const MuBound mu = mu_bound_2d(options.search_lo, options.search_hi, 0.0, T, p, F, options.mu_grid);
    report.mu_bound = mu.mu;
    report.mu_floor = mu.analytic_floor;
    if (!(mu.mu > 0.0) || !(mu.analytic_floor > 0.0))
        throw ConditionError("a", "critical manifold is not uniformly attractive (mu = " + format_number(mu.mu) + ")");

    const AveragedRoot root = find_averaged_root(T, p, F, J, options.search_lo, options.search_hi, options.scan_points);
    report.x0_avg = root.x0;
    report.isolation_margin = root.isolation_margin;

    const ConditionB b = check_condition_b(root.x0, T, p, F, J.coupling);
    report.condition_b_integral = b.integral;
    if (!b.pass)
        throw ConditionError("b", "integral of A over one period vanishes (" + format_number(b.integral) + ")");

    report.predicted_initial = {root.x0, phi_2d(root.x0, F(0.0), p)};
    const OdeProblem problem = make_problem_2d(p, J, F, 0.0, T);
    const Eigen::VectorXd end = period_map(problem, T, report.predicted_initial, options.integrator);
    report.defect_vector = end - report.predicted_initial;
    report.defect = report.defect_vector.norm();
    return report;
}

PeriodicOrbitReport refine_periodic_orbit(const OdeProblem& problem, double T, const Eigen::VectorXd& guess,
                                          const ShootingOptions& options) {
    PeriodicOrbitReport report;
    Eigen::VectorXd s = guess;
    Eigen::VectorXd Ps = period_map(problem, T, s, options.integrator);
    Eigen::VectorXd r = Ps - s;
    report.initial_defect = r.norm();
    const auto n = s.size();
    Eigen::MatrixXd M;
    for (;;) {
        M = monodromy_fd(problem, T, s, Ps, options.integrator);
        if (r.norm() <= options.tol) break;
        if (report.iterations >= options.max_iterations)
            throw ConvergenceError("shooting did not converge in " + std::to_string(options.max_iterations) +
                                   " iterations (defect " + format_number(r.norm()) + ")");
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(M - Eigen::MatrixXd::Identity(n, n));
        if (!lu.isInvertible()) throw ConvergenceError("monodromy has a unit multiplier; shooting is singular");
        s += lu.solve(-r);
        Ps = period_map(problem, T, s, options.integrator);
        r = Ps - s;
        ++report.iterations;
    }
    report.fixed_point = s;
    report.final_defect = r.norm();
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(M, false);
    for (Eigen::Index i = 0; i < n; ++i) report.floquet_multipliers.push_back(solver.eigenvalues()[i]);
    std::sort(report.floquet_multipliers.begin(), report.floquet_multipliers.end(),
              [](const auto& a, const auto& b) { return std::abs(a) > std::abs(b); });
    report.stable = std::abs(report.floquet_multipliers.front()) < 1.0;
    return report;
}

PeriodicOrbitReport refine_periodic_orbit(const Eigen::Vector2d& guess, double T, const Params2D& p, const Signal& F,
                                          const Control& J, const ShootingOptions& options) {
    return refine_periodic_orbit(make_problem_2d(p, J, F, 0.0, T), T, guess, options);
}

Eigen::Matrix3d reduced_slow_matrix_4d(const Eigen::Vector3d& slow_point, double t, const Params4D& p,
                                       const Signal& F, const Eigen::Vector3d& J_x) {
    const double f = F(t);
    const double y = phi_4d(slow_point[0], slow_point[2], f, p);
    Params4D unit = p;
    unit.eps = 1.0;
    unit.eps_prime = 1.0;
    const Eigen::Matrix4d jac = jacobian_4d({slow_point[0], slow_point[1], slow_point[2], y}, unit, J_x, f);
    const Eigen::Matrix3d reduced =
        jac.topLeftCorner<3, 3>() - jac.topRightCorner<3, 1>() * jac.bottomLeftCorner<1, 3>() / jac(3, 3);
    return p.eps_prime * reduced;
}

ConditionB4D check_condition_b_4d(const Eigen::Vector3d& slow_point, double T, const Params4D& p, const Signal& F,
                                  const Eigen::Vector3d& J_x, double threshold) {
    if (!(T > 0.0)) throw InvalidArgument("period must be positive");
    OdeProblem linear;
    linear.dim = 9;
    linear.rhs = [&](double t, const Vec& z) -> Vec {
        const Eigen::Matrix3d A = reduced_slow_matrix_4d(slow_point, t, p, F, J_x);
        const Eigen::Map<const Eigen::Matrix3d> Phi(z.data());
        Eigen::Matrix3d dPhi = A * Phi;
        return Eigen::Map<const Vec>(dPhi.data(), 9);
    };
    linear.breakpoints = F.corners_in(0.0, T);
    IntegratorConfig cfg{1e-11, 1e-13};
    cfg.mode = StiffnessMode::ExplicitAdaptive;
    const Eigen::Matrix3d eye = Eigen::Matrix3d::Identity();
    const Vec end = integrate(linear, 0.0, T, Eigen::Map<const Vec>(eye.data(), 9), cfg).back();
    const Eigen::Map<const Eigen::Matrix3d> monodromy(end.data());

    ConditionB4D out;
    const Eigen::EigenSolver<Eigen::Matrix3d> solver(monodromy, false);
    out.distance_to_one = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < 3; ++i) {
        out.multipliers.push_back(solver.eigenvalues()[i]);
        out.distance_to_one = std::min(out.distance_to_one, std::abs(solver.eigenvalues()[i] - 1.0));
    }
    out.pass = out.distance_to_one > threshold;
    return out;
}

}  // namespace lactodyn
