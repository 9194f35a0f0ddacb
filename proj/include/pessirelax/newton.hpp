#pragma once

#include <functional>
#include <vector>

#include "pessirelax/expr.hpp"

namespace pessirelax {

struct NewtonOptions {
  int max_iters = 500;
  double residual_tol = 1e-7;
  double stagnation_tol = 1e-9;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double min_step = 1e-12;
  double tikhonov_nu0 = 1e-8;
};

enum class NewtonTermination { Converged, Stagnated, MaxIters, StepTooSmall, EvalFailure };

std::string to_string(NewtonTermination t);

struct NewtonStats {
  int iterations = 0;
  double final_residual_norm = 0.0;
  std::vector<double> residual_history;  // ||Psi|| at z0 and after each accepted step
  NewtonTermination termination = NewtonTermination::MaxIters;
};

using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;

/// Damped Newton for square smooth systems: dense LU steps with a Tikhonov
/// fallback on singular factorizations and Armijo backtracking on
/// 0.5 ||Psi||^2. Residual evaluations that throw EvalDomainError reject the
/// trial step; a failure at the current iterate ends the run.
std::pair<Vector, NewtonStats> newton_solve(const ResidualFn& residual_fn,
                                            const JacobianFn& jacobian_fn, Vector z0,
                                            const NewtonOptions& opts = {});

}  // namespace pessirelax
