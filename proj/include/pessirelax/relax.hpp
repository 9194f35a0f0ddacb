#pragma once

#include "pessirelax/problem.hpp"

namespace pessirelax {

/// The five relaxations of the lower-level complementarity system.
enum class Scheme { S, LF, KDB, SU, KS };

constexpr Scheme kAllSchemes[] = {Scheme::S, Scheme::LF, Scheme::KDB, Scheme::SU,
                                  Scheme::KS};

/// Number of relaxed inequality rows per lower-level constraint index.
int families(Scheme s);
/// LF has no multiplier for a separate u-row.
bool has_mu(Scheme s);

std::string scheme_tag(Scheme s);                  // "s", "lf", "kdb", "su", "ks"
std::string scheme_name(Scheme s);                 // "Scholtes", "LF", ...
std::optional<Scheme> parse_scheme(const std::string& tag);

/// Quartic regularization used by the SU scheme: value 1 and slope +-1 at
/// +-1, vanishing curvature there, strictly convex inside.
double su_theta(double z);
double su_theta_prime(double z);
double su_theta_second(double z);

/// Rows of the relaxed constraint block for one index i as scalar functions
/// of (g, u) at parameter t, with partial derivatives up to second order.
/// A point is feasible for the relaxation iff every row is <= 0.
struct PhiRows {
  Vector r;    // [families] row values
  Vector r_g;  // d/dg
  Vector r_u;  // d/du
  Vector r_gg, r_gu, r_uu;  // second partials
};
PhiRows phi_rows(Scheme s, double t, double g, double u);

/// Row values of phi^t_i at a point; throws std::invalid_argument for t <= 0.
Vector phi(Scheme s, double t, int i, const ProblemSpec& spec, const Vector& x,
           const Vector& y, const Vector& u);

/// Analytic gradients of each row with respect to (x, y, u_i).
struct PhiGrad {
  Matrix d_dx;  // families x n
  Matrix d_dy;  // families x m
  Vector d_du;  // families (rows depend only on u_i)
};
PhiGrad phi_grad(Scheme s, double t, int i, const ProblemSpec& spec, const Vector& x,
                 const Vector& y, const Vector& u);

/// Allocation-free check that every row of phi^t at (g, u) is <= tol;
/// the grid samplers call this in their inner loops.
bool phi_rows_within(Scheme s, double t, double g, double u, double tol);

/// Membership in the lower-level KKT set D(x):
/// L = 0, u >= 0, g <= 0, u_i g_i = 0, all within tol.
bool member_D(const ProblemSpec& spec, const Vector& x, const Vector& y,
              const Vector& u, double tol);

/// Membership in the relaxed set D^t(x): L = 0 and all phi rows <= tol.
bool member_Dt(Scheme s, double t, const ProblemSpec& spec, const Vector& x,
               const Vector& y, const Vector& u, double tol);

/// Activity classification of the lower-level constraints at a KKT point:
///   eta:   u_i ~ 0, g_i < 0     (inactive constraint)
///   theta: u_i ~ 0, g_i ~ 0     (biactive)
///   nu:    u_i > 0, g_i ~ 0     (strongly active)
/// Indices violating complementarity beyond tol land in `unclassified`.
struct IndexPartition {
  std::vector<int> eta, theta, nu;
  std::vector<int> unclassified;
  double tol = 0.0;
};
IndexPartition index_sets(const ProblemSpec& spec, const Vector& x, const Vector& y,
                          const Vector& u, double tol = 1e-6);

}  // namespace pessirelax
