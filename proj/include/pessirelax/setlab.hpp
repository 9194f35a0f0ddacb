#pragma once

#include "pessirelax/relax.hpp"

namespace pessirelax {

/// Regular grid over the (y, u) space at a common step.
struct GridSpec {
  std::vector<Interval> y_box;  // m intervals
  std::vector<Interval> u_box;  // q intervals
  double step = 1e-2;
};

/// Grid points passing a membership predicate, in deterministic
/// lexicographic order (y-major, then u).
struct SampledSet {
  std::vector<Vector> points;  // each of dimension m + q, ordered (y, u)
  GridSpec grid;
  std::string predicate_id;
  double tol = 0.0;
};

SampledSet sample_D(const ProblemSpec& spec, const Vector& x, const GridSpec& grid,
                    double tol);
SampledSet sample_Dt(Scheme s, double t, const ProblemSpec& spec, const Vector& x,
                     const GridSpec& grid, double tol);

/// One-sided set distance sup_{a in A} dist(a, B) with the conventions
/// e(empty, B) = 0 and e(A, empty) = +infinity for nonempty A.
double excess(const SampledSet& A, const SampledSet& B);

/// Sampled inner maximum of F(x, y) over the member points; a lower bound
/// of the true value. box_truncated flags an argmax y on the grid boundary.
struct PsiApprox {
  std::optional<double> value;
  bool box_truncated = false;
  Vector arg;  // (y, u) attaining the max, when value is set
};
PsiApprox psi_p_approx(const ProblemSpec& spec, const Vector& x, const GridSpec& grid,
                       double tol);
PsiApprox psi_R_approx(Scheme s, double t, const ProblemSpec& spec, const Vector& x,
                       const GridSpec& grid, double tol);

/// CSV export, one point per row with header y1..ym,u1..uq.
std::string sampled_set_csv(const SampledSet& set);

/// Closed-form answers for the two built-in examples, valid on the stated
/// parameter ranges; out-of-range queries throw std::domain_error.
namespace oracle {

// ex_toy: lower level min x*y over y in [0, 1]
bool toy_member_D(double x, double y, double u1, double u2);
// requires 0 < t < x/2 when x != 0, or 0 < t <= 1/2 at x = 0
bool toy_member_Dt_kdb(double t, double x, double y, double u1, double u2);
double toy_psi_p(double x);

// ex_linear: lower level min -x*y over y <= 1
bool lin_member_D(double x, double y, double u1);
// requires 0 < t < x when x != 0, or 0 < t <= 1/2 at x = 0
bool lin_member_Dt_kdb(double t, double x, double y, double u1);
double lin_psi_p(double x);
// x + 1 + t on (0, 1] (requires t < x); 1 - t at x = 0
double lin_psi_kdb(double t, double x);

}  // namespace oracle

}  // namespace pessirelax
