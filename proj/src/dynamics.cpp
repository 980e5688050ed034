#include "lactodyn/dynamics.hpp"

#include <cmath>
#include <string>

#include "lactodyn/errors.hpp"

namespace lactodyn {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw InvalidArgument(std::string("parameter ") + name + " must be finite and positive");
}

}  // namespace

void Params2D::validate() const {
    require_positive(C, "C");
    require_positive(k, "k");
    require_positive(kprime, "kprime");
    require_positive(L, "L");
    require_positive(eps, "eps");
    require_positive(eps_prime, "eps_prime");
}

void Params4D::validate() const {
    Params2D::validate();
    require_positive(C1, "C1");
    require_positive(C2, "C2");
    require_positive(Ca, "Ca");
    require_positive(kn, "kn");
    require_positive(ka, "ka");
}

double michaelis(double a, double k) {
    const double denom = k + a;
    if (!(std::abs(denom) >= 1e-12 * k))
        throw DomainError("concentration " + format_number(a) + " at Michaelis pole (k = " +
                          format_number(k) + ")");
    return a / denom;
}

double michaelis_slope(double a, double k) {
    const double denom = k + a;
    if (!(std::abs(denom) >= 1e-12 * k))
        throw DomainError("concentration " + format_number(a) + " at Michaelis pole (k = " +
                          format_number(k) + ")");
    return k / (denom * denom);
}

double cotransport(double a, double b, double Cmax, double ka, double kb) {
    return Cmax * (michaelis(a, ka) - michaelis(b, kb));
}

double fast_nullcline_g_2d(double x, double y, double F, const Params2D& p) {
    return F * (p.L - y) + cotransport(x, y, p.C, p.k, p.kprime);
}

double fast_nullcline_g_2d(double x, double y, double t, const Params2D& p, const Signal& F) {
    return fast_nullcline_g_2d(x, y, F(t), p);
}

Eigen::Vector2d rhs_2d(double t, const State2D& s, const Params2D& p, const Control& J, const Signal& F) {
    const double flux = cotransport(s.x, s.y, p.C, p.k, p.kprime);
    return {p.eps_prime * (J(t, s.x) - flux), (F(t) * (p.L - s.y) + flux) / p.eps};
}

Eigen::Matrix2d jacobian_2d(const State2D& s, const Params2D& p, double J_x, double F) {
    const double A = p.C * michaelis_slope(s.x, p.k);
    const double B = p.C * michaelis_slope(s.y, p.kprime);
    Eigen::Matrix2d jac;
    jac << p.eps_prime * (J_x - A), p.eps_prime * B,
           A / p.eps, -(F + B) / p.eps;
    return jac;
}

double fast_nullcline_g_4d(double x, double v, double y, double F, const Params4D& p) {
    return F * (p.L - y) + cotransport(x, y, p.C, p.k, p.kprime) + cotransport(v, y, p.Ca, p.ka, p.kprime);
}

double fast_nullcline_g_4d(double x, double v, double y, double t, const Params4D& p, const Signal& F) {
    return fast_nullcline_g_4d(x, v, y, F(t), p);
}

Eigen::Vector4d stationarity_4d(const State4D& s, const Params4D& p, const Eigen::Vector3d& J, double F) {
    const double ax = michaelis(s.x, p.k);
    const double au = michaelis(s.u, p.kn);
    const double av = michaelis(s.v, p.ka);
    const double ay = michaelis(s.y, p.kprime);
    const double to_neuron = p.C1 * (au - ax);
    const double to_astro = p.C2 * (av - ax);
    const double barrier = p.C * (ax - ay);
    const double astro_cap = p.Ca * (av - ay);
    return {J[0] + to_neuron + to_astro - barrier,
            J[1] - to_neuron,
            J[2] - to_astro - astro_cap,
            F * (p.L - s.y) + barrier + astro_cap};
}

Eigen::Vector2d stationarity_2d(const State2D& s, const Params2D& p, double J, double F) {
    const double flux = cotransport(s.x, s.y, p.C, p.k, p.kprime);
    return {J - flux, F * (p.L - s.y) + flux};
}

Eigen::Vector4d rhs_4d(double t, const State4D& s, const Params4D& p, const Controls4D& J, const Signal& F) {
    const Eigen::Vector3d controls{J.J0(t, s.x), J.J1(t, s.x), J.J2(t, s.x)};
    Eigen::Vector4d r = stationarity_4d(s, p, controls, F(t));
    r.head<3>() *= p.eps_prime;
    r[3] /= p.eps;
    return r;
}

Eigen::Matrix4d jacobian_4d(const State4D& s, const Params4D& p, const Eigen::Vector3d& J_x, double F) {
    const double dx = michaelis_slope(s.x, p.k);
    const double du = michaelis_slope(s.u, p.kn);
    const double dv = michaelis_slope(s.v, p.ka);
    const double dy = michaelis_slope(s.y, p.kprime);
    Eigen::Matrix4d m;
    // rows: x, u, v, y brackets; columns: x, u, v, y
    m << J_x[0] - (p.C1 + p.C2 + p.C) * dx, p.C1 * du, p.C2 * dv, p.C * dy,
         J_x[1] + p.C1 * dx, -p.C1 * du, 0.0, 0.0,
         J_x[2] + p.C2 * dx, 0.0, -(p.C2 + p.Ca) * dv, p.Ca * dy,
         p.C * dx, 0.0, p.Ca * dv, -F - (p.C + p.Ca) * dy;
    m.topRows<3>() *= p.eps_prime;
    m.row(3) /= p.eps;
    return m;
}

}  // namespace lactodyn
