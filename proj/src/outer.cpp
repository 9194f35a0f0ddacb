#include "pessirelax/outer.hpp"

#include <chrono>
#include <cmath>
#include <random>

namespace pessirelax {

std::string to_string(RunTermination t) {
  switch (t) {
    case RunTermination::Converged: return "converged";
    case RunTermination::Stagnated: return "stagnated";
    case RunTermination::OuterCap: return "max_outer";
    case RunTermination::InnerFailure: return "inner_failure";
  }
  return "?";
}

std::vector<double> SolveReport::full_residual_history() const {
  std::vector<double> out;
  for (const StageRecord& st : stages)
    out.insert(out.end(), st.residual_history.begin(), st.residual_history.end());
  return out;
}

namespace {

// Platform-independent uniform double in [lo, hi) from the engine's raw bits.
double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  double u01 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u01;
}

}  // namespace

Vector default_start(const ProblemSpec& spec, Scheme s, uint64_t seed) {
  IterateLayout l = IterateLayout::make(s, spec);
  Vector zeta = Vector::Ones(l.size);
  std::mt19937_64 rng(seed);
  for (int a = 0; a < spec.n; ++a)
    zeta(l.x_off + a) = uniform_in(rng, spec.start_box_x[a].lo, spec.start_box_x[a].hi);
  for (int b = 0; b < spec.m; ++b)
    zeta(l.y_off + b) = uniform_in(rng, spec.start_box_y[b].lo, spec.start_box_y[b].hi);
  return zeta;
}

SolveReport run(const ProblemSpec& spec, Scheme s, const Vector& zeta0,
                const SolveOptions& opts) {
  const IterateLayout layout = IterateLayout::make(s, spec);
  if (zeta0.size() != layout.size)
    throw std::invalid_argument("run: start iterate does not match the scheme layout");

  const auto t_start = std::chrono::steady_clock::now();
  SolveReport report;
  report.layout = layout;
  report.zeta = zeta0;
  report.termination = RunTermination::OuterCap;

  double t = opts.t0;
  double prev_stage_norm = std::numeric_limits<double>::quiet_NaN();

  for (int k = 0; k < opts.outer_cap; ++k) {
    double eps = opts.eps_schedule ? std::max(opts.eps_min, opts.eps_scale * t) : opts.eps;
    ResidualFn res = [&, t, eps](const Vector& z) {
      return residual(s, t, eps, spec, z);
    };
    JacobianFn jac = [&, t, eps](const Vector& z) {
      return jacobian(s, t, eps, spec, z);
    };

    auto [z_next, stats] = newton_solve(res, jac, report.zeta, opts.newton);

    StageRecord stage;
    stage.t = t;
    stage.eps = eps;
    stage.initial_residual = stats.residual_history.front();
    stage.final_residual = stats.final_residual_norm;
    stage.inner_iterations = stats.iterations;
    stage.termination = stats.termination;
    stage.residual_history = stats.residual_history;
    report.stages.push_back(std::move(stage));
    report.outer_iterations = k + 1;
    report.total_inner_iterations += stats.iterations;

    if (stats.termination == NewtonTermination::EvalFailure) {
      report.final_residual_norm = stats.final_residual_norm;
      report.termination = RunTermination::InnerFailure;
      break;
    }

    report.zeta = z_next;
    report.final_residual_norm = stats.final_residual_norm;

    if (stats.final_residual_norm < opts.newton.residual_tol) {
      report.termination = RunTermination::Converged;
      break;
    }
    if (k >= 1 &&
        std::abs(prev_stage_norm - stats.final_residual_norm) < opts.newton.stagnation_tol) {
      report.termination = RunTermination::Stagnated;
      break;
    }
    prev_stage_norm = stats.final_residual_norm;
    t *= opts.theta_red;
  }

  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace pessirelax
