#pragma once

// ODE problems for the integrator built from model parameters and inputs.

#include "lactodyn/dynamics.hpp"
#include "lactodyn/integrator.hpp"

namespace lactodyn {

/// State (x, y). Breakpoints are the corners of F and J inside [t0, t1].
OdeProblem make_problem_2d(const Params2D& p, const Control& J, const Signal& F, double t0, double t1);

/// State (x, u, v, y).
OdeProblem make_problem_4d(const Params4D& p, const Controls4D& J, const Signal& F, double t0, double t1);

}  // namespace lactodyn
