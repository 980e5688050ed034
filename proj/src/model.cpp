#include "lactodyn/model.hpp"

#include <algorithm>

namespace lactodyn {

namespace {

void merge_corners(std::vector<double>& out, const Signal& s, double t0, double t1) {
    const auto c = s.corners_in(t0, t1);
    out.insert(out.end(), c.begin(), c.end());
}

void normalise(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

OdeProblem make_problem_2d(const Params2D& p, const Control& J, const Signal& F, double t0, double t1) {
    p.validate();
    OdeProblem problem;
    problem.dim = 2;
    problem.names = {"x", "y"};
    problem.rhs = [p, J, F](double t, const Vec& s) -> Vec { return rhs_2d(t, State2D::from(s), p, J, F); };
    problem.jacobian = [p, J, F](double t, const Vec& s) -> Mat {
        return jacobian_2d(State2D::from(s), p, J.coupling, F(t));
    };
    merge_corners(problem.breakpoints, F, t0, t1);
    merge_corners(problem.breakpoints, J.signal, t0, t1);
    normalise(problem.breakpoints);
    return problem;
}

OdeProblem make_problem_4d(const Params4D& p, const Controls4D& J, const Signal& F, double t0, double t1) {
    p.validate();
    OdeProblem problem;
    problem.dim = 4;
    problem.names = {"x", "u", "v", "y"};
    problem.rhs = [p, J, F](double t, const Vec& s) -> Vec { return rhs_4d(t, State4D::from(s), p, J, F); };
    problem.jacobian = [p, J, F](double t, const Vec& s) -> Mat {
        return jacobian_4d(State4D::from(s), p, {J.J0.coupling, J.J1.coupling, J.J2.coupling}, F(t));
    };
    merge_corners(problem.breakpoints, F, t0, t1);
    for (const Control* c : {&J.J0, &J.J1, &J.J2}) merge_corners(problem.breakpoints, c->signal, t0, t1);
    normalise(problem.breakpoints);
    return problem;
}

}  // namespace lactodyn
