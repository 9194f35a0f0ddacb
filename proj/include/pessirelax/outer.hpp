#pragma once

#include "pessirelax/fbsys.hpp"
#include "pessirelax/newton.hpp"

namespace pessirelax {

struct SolveOptions {
  double t0 = 1e-3;         // initial relaxation parameter
  double theta_red = 0.05;  // t_{k+1} = theta_red * t_k
  double eps = 1e-3;        // FB smoothing, held fixed by default
  int outer_cap = 50;
  NewtonOptions newton;
  uint64_t seed = 0;
  // optional schedule eps_k = max(eps_min, eps_scale * t_k); off by default
  bool eps_schedule = false;
  double eps_min = 1e-9;
  double eps_scale = 1.0;
};

enum class RunTermination { Converged, Stagnated, OuterCap, InnerFailure };

std::string to_string(RunTermination t);

struct StageRecord {
  double t = 0.0;
  double eps = 0.0;
  double initial_residual = 0.0;  // ||Psi|| at the warm start under this (t, eps)
  double final_residual = 0.0;
  int inner_iterations = 0;
  NewtonTermination termination = NewtonTermination::MaxIters;
  std::vector<double> residual_history;
};

struct SolveReport {
  Vector zeta;  // final iterate
  IterateLayout layout;
  int outer_iterations = 0;
  long total_inner_iterations = 0;
  double wall_time_s = 0.0;
  double final_residual_norm = 0.0;
  std::vector<StageRecord> stages;
  RunTermination termination = RunTermination::OuterCap;

  /// Inner residual norms of all stages concatenated in order.
  std::vector<double> full_residual_history() const;
};

/// Seeded start: x0, y0 uniform in the start box, every multiplier
/// segment set to ones.
Vector default_start(const ProblemSpec& spec, Scheme s, uint64_t seed);

/// The relaxation loop: solve the smoothed stationarity system at t = t_k,
/// warm-starting each stage from the previous solution, with
/// t_{k+1} = theta_red * t_k until the residual or stagnation test fires.
SolveReport run(const ProblemSpec& spec, Scheme s, const Vector& zeta0,
                const SolveOptions& opts);

}  // namespace pessirelax
