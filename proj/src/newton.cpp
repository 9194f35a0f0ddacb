#include "pessirelax/newton.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace pessirelax {

std::string to_string(NewtonTermination t) {
  switch (t) {
    case NewtonTermination::Converged: return "converged";
    case NewtonTermination::Stagnated: return "stagnated";
    case NewtonTermination::MaxIters: return "max_iters";
    case NewtonTermination::StepTooSmall: return "step_too_small";
    case NewtonTermination::EvalFailure: return "eval_failure";
  }
  return "?";
}

std::pair<Vector, NewtonStats> newton_solve(const ResidualFn& residual_fn,
                                            const JacobianFn& jacobian_fn, Vector z,
                                            const NewtonOptions& opts) {
  NewtonStats stats;
  const auto fail = [&](NewtonTermination why) {
    stats.termination = why;
    return std::make_pair(z, stats);
  };

  Vector psi;
  try {
    psi = residual_fn(z);
  } catch (const EvalDomainError&) {
    stats.final_residual_norm = std::numeric_limits<double>::quiet_NaN();
    stats.residual_history.push_back(stats.final_residual_norm);
    return fail(NewtonTermination::EvalFailure);
  }
  const Eigen::Index dim = psi.size();
  if (z.size() != dim)
    throw std::invalid_argument("newton_solve: system is not square");

  double norm = psi.norm();
  stats.residual_history.push_back(norm);
  stats.final_residual_norm = norm;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (norm < opts.residual_tol) return fail(NewtonTermination::Converged);

    Matrix J = jacobian_fn(z);
    Vector step;
    double nu = 0.0;
    for (;;) {
      Matrix Jr = J;
      if (nu > 0.0) Jr.diagonal().array() += nu;
      Eigen::PartialPivLU<Matrix> lu(Jr);
      step = lu.solve(-psi);
      // gradient of the merit 0.5||Psi||^2 is J^T Psi; require real descent
      double slope = psi.dot(J * step);
      if (step.allFinite() && slope < 0.0) break;
      nu = (nu == 0.0) ? opts.tikhonov_nu0 : 2.0 * nu;
      if (nu > 1e12) return fail(NewtonTermination::StepTooSmall);
    }

    const double merit0 = 0.5 * norm * norm;
    const double slope = psi.dot(J * step);
    double stepsize = 1.0;
    Vector z_next;
    Vector psi_next;
    double norm_next = 0.0;
    bool accepted = false;
    while (stepsize >= opts.min_step) {
      z_next = z + stepsize * step;
      bool ok = true;
      try {
        psi_next = residual_fn(z_next);
      } catch (const EvalDomainError&) {
        ok = false;  // treated as sufficient-decrease failure
      }
      if (ok && psi_next.allFinite()) {
        norm_next = psi_next.norm();
        double merit_next = 0.5 * norm_next * norm_next;
        if (merit_next <= merit0 + opts.armijo_c * stepsize * slope) {
          accepted = true;
          break;
        }
      }
      stepsize *= opts.backtrack_factor;
    }
    if (!accepted) return fail(NewtonTermination::StepTooSmall);

    z = z_next;
    psi = psi_next;
    double prev = norm;
    norm = norm_next;
    stats.iterations = iter + 1;
    stats.residual_history.push_back(norm);
    stats.final_residual_norm = norm;
    if (norm < opts.residual_tol) return fail(NewtonTermination::Converged);
    if (std::abs(prev - norm) < opts.stagnation_tol)
      return fail(NewtonTermination::Stagnated);
  }
  return fail(NewtonTermination::MaxIters);
}

}  // namespace pessirelax
