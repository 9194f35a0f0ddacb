#pragma once

#include "pessirelax/verify.hpp"

namespace pessirelax {

struct RunRecord {
  std::string problem;
  Scheme scheme = Scheme::S;
  uint64_t seed = 0;
  int outer_iters = 0;
  long inner_iters = 0;
  double wall_time_s = 0.0;
  double final_residual = 0.0;
  bool feasible = false;
  Flavor flavor = Flavor::None;
  std::optional<double> accuracy;
  std::optional<double> eoc;
  std::string termination;
};

struct BenchOptions {
  SolveOptions solve;  // per-run options; the seed field is overridden
  int jobs = 1;
};

/// One run per (problem, scheme, seed), in that deterministic order.
/// Individual run failures are recorded, never propagated.
std::vector<RunRecord> run_suite(const std::vector<ProblemSpec>& problems,
                                 const std::vector<Scheme>& schemes,
                                 const std::vector<uint64_t>& seeds,
                                 const BenchOptions& opts = {});

enum class Measure { Time, OuterIters, InnerIters };
std::optional<Measure> parse_measure(const std::string& name);

struct ProfileCurve {
  std::string solver;
  std::vector<std::pair<double, double>> points;  // (T, rho_s(T))
};

/// Dolan-More performance profiles over instances (problem, seed). Runs
/// that did not reach feasibility count as unsolved (ratio +infinity).
/// The T grid is 64 log-spaced points in [1, 100].
std::vector<ProfileCurve> perf_profile(const std::vector<RunRecord>& records,
                                       Measure measure);

/// rho_s(T) for one solver at an arbitrary T >= 1 (same conventions).
double profile_rho(const std::vector<RunRecord>& records, Measure measure, Scheme s,
                   double T);

/// Markdown summary table, one row block per scheme: average outer/inner
/// iterations, time, accuracy, C-stationarity count, feasibility percentage,
/// and the EOC <= 1 / > 1 buckets.
std::string summary_markdown(const std::vector<RunRecord>& records);

std::string records_to_csv(const std::vector<RunRecord>& records);
std::vector<RunRecord> records_from_csv(const std::string& text);
std::string profiles_to_csv(const std::vector<ProfileCurve>& curves);

}  // namespace pessirelax
