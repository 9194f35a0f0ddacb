#pragma once

#include <optional>

#include "pessirelax/outer.hpp"

namespace pessirelax {

struct FeasibilityReport {
  bool feasible = false;
  double max_violation = 0.0;
  std::vector<std::string> violations;
  double tol = 0.0;
};

/// Lower-level KKT feasibility at tolerance tol: u >= -tol, g <= tol,
/// ||L||_inf <= tol, |u_i g_i| <= tol, plus G(x) <= tol upstairs.
FeasibilityReport feasibility(const ProblemSpec& spec, const Vector& x, const Vector& y,
                              const Vector& u, double tol = 1e-4);

/// Candidate limiting multipliers assembled from the relaxed ones.
/// beta_t = -beta, and gamma_t_i = -dPhi_i/dg_i collects the active-family
/// contributions (per scheme: S delta*u - gamma; LF gamma*u - delta*(u+t);
/// KDB delta*(u-t) - gamma; SU xi1*delta - gamma; KS branch-wise).
/// With these, the C-stationarity equations coincide with the first two
/// residual blocks of the solved system.
struct MappedMultipliers {
  Vector alpha;    // p, unchanged
  Vector beta_t;   // m
  Vector gamma_t;  // q
  std::vector<int> ambiguous;  // indices with two strongly active families
};
MappedMultipliers map_multipliers(Scheme s, const ProblemSpec& spec,
                                  const IterateLayout& layout, const Vector& zeta,
                                  double t);

enum class Flavor { None, C, M, S };
std::string to_string(Flavor f);

struct StationarityCertificate {
  Vector x, y, u;
  Vector alpha, beta, gamma;  // the multipliers the certificate was checked with
  double stat_x_residual = 0.0;  // x-stationarity equation
  double stat_y_residual = 0.0;  // y-stationarity equation
  double upper_comp_residual = 0.0;  // upper-level complementarity
  double active_set_residual = 0.0;  // grad_y g_nu . beta and gamma_eta
  std::vector<double> theta_products;  // gamma_i * (grad_y g_i . beta), i in theta
  bool c_signs = false;  // products >= -tol on theta
  bool m_signs = false;  // (gamma<0 and dgb<0) or product ~ 0 on theta
  bool s_signs = false;  // gamma <= tol and dgb <= tol on theta
  Flavor flavor = Flavor::None;
  double tol = 0.0;
  double index_tol = 0.0;
  IndexPartition partition;
  bool classifiable = false;
};

/// Checks the C-stationarity system with the given multipliers and assigns
/// the deepest flavor whose sign conditions hold; the chain C <= M <= S is
/// enforced by construction.
StationarityCertificate check_C(const ProblemSpec& spec, const Vector& x,
                                const Vector& y, const Vector& u, const Vector& alpha,
                                const Vector& beta, const Vector& gamma,
                                double tol = 1e-5, double index_tol = 1e-6);

/// Membership of (beta, gamma) in the C-multiplier set at (x, y, u) with
/// offset v: grad_y g_nu . beta = 0, gamma_eta = 0, sign products on theta,
/// and v + d(x,y)L^T beta + grad g^T gamma = 0, all within tol.
bool lambda_ec_member(const ProblemSpec& spec, const Vector& x, const Vector& y,
                      const Vector& u, const Vector& v, const Vector& beta,
                      const Vector& gamma, double tol);

enum class RegularityLevel { Upper, Lower };

/// Mangasarian-Fromovitz-type regularity via a tiny LP: the only
/// multiplier vector >= 0 supported on active constraints with vanishing
/// gradient combination is zero. Throws on LP failure.
bool check_regularity(const ProblemSpec& spec, const Vector& x, const Vector& y,
                      RegularityLevel level, double active_tol = 1e-6);

/// Experimental order of convergence from the last three history entries:
/// max(log h[K-1]/log h[K-2], log h[K]/log h[K-1]). Returns nullopt for
/// histories that are too short or log-degenerate (a norm <= 0 or = 1).
std::optional<double> eoc(const std::vector<double>& residual_history);

/// |F_value - reference|; nullopt when no reference is known.
std::optional<double> accuracy(double F_value, std::optional<double> known_F_pes);

/// Least-squares fit of (beta, gamma) to the two stationarity equations at
/// fixed alpha; fallback when map_multipliers reports ambiguous support.
std::pair<Vector, Vector> ls_fit_multipliers(const ProblemSpec& spec, const Vector& x,
                                             const Vector& y, const Vector& u,
                                             const Vector& alpha);

/// Fixed-name JSON rendering used by the bench artifacts.
std::string certificate_to_json(const StationarityCertificate& cert);

/// Post-solve verdicts for one relaxation run: feasibility at the standard
/// 1e-4 tolerance, a stationarity certificate from the mapped multipliers
/// (tolerances widened to the smoothing level: the solved system carries
/// complementarity residuals of exactly eps), accuracy against the known
/// reference, and the EOC of the inner iteration history.
struct RunAssessment {
  FeasibilityReport feas;
  StationarityCertificate certificate;
  double F_value = 0.0;
  std::optional<double> accuracy;
  std::optional<double> eoc;
  MappedMultipliers mapped;
};
RunAssessment assess_run(const ProblemSpec& spec, Scheme s, const SolveReport& report,
                         double feas_tol = 1e-4);

}  // namespace pessirelax
