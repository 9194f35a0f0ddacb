#pragma once

#include "pessirelax/relax.hpp"

namespace pessirelax {

/// Segment offsets of the stacked unknown
///   zeta = (x, y, u, alpha, beta, gamma, [mu,] delta),
/// where mu is absent for the LF scheme. The residual below is square:
/// its row count equals size.
struct IterateLayout {
  Scheme scheme = Scheme::S;
  int n = 0, m = 0, p = 0, q = 0;
  int x_off = 0, y_off = 0, u_off = 0, alpha_off = 0, beta_off = 0;
  int gamma_off = 0, mu_off = -1, delta_off = 0;
  int size = 0;

  static IterateLayout make(Scheme s, const ProblemSpec& spec);

  Vector x(const Vector& z) const { return z.segment(x_off, n); }
  Vector y(const Vector& z) const { return z.segment(y_off, m); }
  Vector u(const Vector& z) const { return z.segment(u_off, q); }
  Vector alpha(const Vector& z) const { return z.segment(alpha_off, p); }
  Vector beta(const Vector& z) const { return z.segment(beta_off, m); }
  Vector gamma(const Vector& z) const { return z.segment(gamma_off, q); }
  Vector mu(const Vector& z) const {
    if (mu_off < 0) return Vector::Zero(q);
    return z.segment(mu_off, q);
  }
  Vector delta(const Vector& z) const { return z.segment(delta_off, q); }
};

/// Smoothed Fischer-Burmeister function sqrt(a^2 + b^2 + 2 eps) - (a + b).
/// For eps > 0 its zeros are exactly { a > 0, b > 0, ab = eps }.
double fb(double a, double b, double eps);
/// Partial derivatives (d/da, d/db); at the eps = 0 kink both are set to -1.
std::pair<double, double> fb_grad(double a, double b, double eps);

/// Multiplier-weighted aggregate of the relaxed constraint rows,
///   Phi_i = gamma_i * row1 + mu_i * row2 + delta_i * row3
/// (LF: gamma_i * row1 + delta_i * row2), together with the partials the
/// stationarity system needs. The multiplier partials d/dgamma, d/dmu,
/// d/ddelta reproduce the phi rows exactly.
struct BigPhiEval {
  Vector value;    // q
  Matrix d_dx;     // q x n
  Matrix d_dy;     // q x m
  Vector d_du;     // q, Phi_i depends only on u_i
  Vector d_dgamma; // q, = row 1
  Vector d_dmu;    // q, = row 2 (zero for LF)
  Vector d_ddelta; // q, = last row
};
BigPhiEval big_phi(Scheme s, double t, const ProblemSpec& spec, const Vector& x,
                   const Vector& y, const Vector& u, const Vector& gamma,
                   const Vector& mu, const Vector& delta);

/// Square residual of the smoothed stationarity system at zeta.
/// Blocks, in order:
///   [n]      x-stationarity
///   [m]      y-stationarity
///   [q]      grad_y g_i . beta - dPhi_i/du_i
///   [m]      L(x, y, u)
///   [p]      fb(alpha_j, -G_j(x))
///   [fam*q]  fb(lambda, -dPhi/dlambda) per multiplier family present
/// Throws std::invalid_argument for non-finite zeta or t <= 0.
Vector residual(Scheme s, double t, double eps, const ProblemSpec& spec,
                const Vector& zeta);

/// Analytic Jacobian of the residual (same branch conventions as phi_rows).
Matrix jacobian(Scheme s, double t, double eps, const ProblemSpec& spec,
                const Vector& zeta);

}  // namespace pessirelax
