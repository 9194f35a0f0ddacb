#include "pessirelax/relax.hpp"

#include <cmath>
#include <stdexcept>

namespace pessirelax {

int families(Scheme s) { return s == Scheme::LF ? 2 : 3; }

bool has_mu(Scheme s) { return s != Scheme::LF; }

std::string scheme_tag(Scheme s) {
  switch (s) {
    case Scheme::S: return "s";
    case Scheme::LF: return "lf";
    case Scheme::KDB: return "kdb";
    case Scheme::SU: return "su";
    case Scheme::KS: return "ks";
  }
  return "?";
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::S: return "Scholtes";
    case Scheme::LF: return "LF";
    case Scheme::KDB: return "KDB";
    case Scheme::SU: return "SU";
    case Scheme::KS: return "KS";
  }
  return "?";
}

std::optional<Scheme> parse_scheme(const std::string& tag) {
  if (tag == "s" || tag == "scholtes" || tag == "S") return Scheme::S;
  if (tag == "lf" || tag == "LF") return Scheme::LF;
  if (tag == "kdb" || tag == "KDB") return Scheme::KDB;
  if (tag == "su" || tag == "SU") return Scheme::SU;
  if (tag == "ks" || tag == "KS") return Scheme::KS;
  return std::nullopt;
}

double su_theta(double z) { return (-z * z * z * z + 6 * z * z + 3) / 8.0; }
double su_theta_prime(double z) { return (-z * z * z + 3 * z) / 2.0; }
double su_theta_second(double z) { return 3.0 * (1 - z * z) / 2.0; }

namespace {

void require_t(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("relaxation parameter t must be > 0");
}

}  // namespace

PhiRows phi_rows(Scheme s, double t, double g, double u) {
  require_t(t);
  const int fam = families(s);
  PhiRows out;
  out.r = Vector::Zero(fam);
  out.r_g = Vector::Zero(fam);
  out.r_u = Vector::Zero(fam);
  out.r_gg = Vector::Zero(fam);
  out.r_gu = Vector::Zero(fam);
  out.r_uu = Vector::Zero(fam);

  switch (s) {
    case Scheme::S:
      out.r << g, -u, -u * g - t;
      out.r_g << 1, 0, -u;
      out.r_u << 0, -1, -g;
      out.r_gu(2) = -1;
      break;

    case Scheme::LF:
      out.r << -(u * g + t * t), -(u + t) * (-g + t) + t * t;
      out.r_g << -u, u + t;
      out.r_u << -g, g - t;
      out.r_gu << -1, 1;
      break;

    case Scheme::KDB:
      out.r << g - t, -u - t, -(u - t) * (g + t);
      out.r_g << 1, 0, -(u - t);
      out.r_u << 0, -1, -(g + t);
      out.r_gu(2) = -1;
      break;

    case Scheme::SU: {
      out.r(0) = g;
      out.r_g(0) = 1;
      out.r(1) = -u;
      out.r_u(1) = -1;
      const double w = u + g;
      // ties go to the outer pieces; value and slope agree across the seam
      if (w <= -t) {
        out.r(2) = 2 * u;
        out.r_u(2) = 2;
      } else if (w >= t) {
        out.r(2) = -2 * g;
        out.r_g(2) = -2;
      } else {
        const double z = w / t;
        out.r(2) = u - g - t * su_theta(z);
        const double th1 = su_theta_prime(z);
        const double th2 = su_theta_second(z) / t;
        out.r_g(2) = -1 - th1;
        out.r_u(2) = 1 - th1;
        out.r_gg(2) = -th2;
        out.r_gu(2) = -th2;
        out.r_uu(2) = -th2;
      }
      break;
    }

    case Scheme::KS: {
      out.r(0) = g;
      out.r_g(0) = 1;
      out.r(1) = -u;
      out.r_u(1) = -1;
      // branch at u - g = 2t takes the product piece
      if (u - g >= 2 * t) {
        out.r(2) = (u - t) * (-g - t);
        out.r_g(2) = -(u - t);
        out.r_u(2) = -g - t;
        out.r_gu(2) = -1;
      } else {
        const double a = u - t, b = g + t;
        out.r(2) = -0.5 * (a * a + b * b);
        out.r_g(2) = -b;
        out.r_u(2) = -a;
        out.r_gg(2) = -1;
        out.r_uu(2) = -1;
      }
      break;
    }
  }
  return out;
}

Vector phi(Scheme s, double t, int i, const ProblemSpec& spec, const Vector& x,
           const Vector& y, const Vector& u) {
  require_t(t);
  double gi = eval_value(spec.g[i], x, y);
  return phi_rows(s, t, gi, u(i)).r;
}

PhiGrad phi_grad(Scheme s, double t, int i, const ProblemSpec& spec, const Vector& x,
                 const Vector& y, const Vector& u) {
  require_t(t);
  const int n = spec.n, m = spec.m;
  Jet gj = eval_jet(spec.g[i], x, y, 1);
  PhiRows rows = phi_rows(s, t, gj.value, u(i));
  const int fam = families(s);
  PhiGrad out;
  out.d_dx = Matrix::Zero(fam, n);
  out.d_dy = Matrix::Zero(fam, m);
  out.d_du = rows.r_u;
  for (int k = 0; k < fam; ++k) {
    for (int a = 0; a < n; ++a) out.d_dx(k, a) = rows.r_g(k) * gj.grad(a);
    for (int b = 0; b < m; ++b) out.d_dy(k, b) = rows.r_g(k) * gj.grad(n + b);
  }
  return out;
}

bool phi_rows_within(Scheme s, double t, double g, double u, double tol) {
  switch (s) {
    case Scheme::S:
      return g <= tol && -u <= tol && -u * g - t <= tol;
    case Scheme::LF:
      return -(u * g + t * t) <= tol && -(u + t) * (-g + t) + t * t <= tol;
    case Scheme::KDB:
      return g - t <= tol && -u - t <= tol && -(u - t) * (g + t) <= tol;
    case Scheme::SU: {
      if (g > tol || -u > tol) return false;
      const double w = u + g;
      double row;
      if (w <= -t) row = 2 * u;
      else if (w >= t) row = -2 * g;
      else row = u - g - t * su_theta(w / t);
      return row <= tol;
    }
    case Scheme::KS: {
      if (g > tol || -u > tol) return false;
      double row = (u - g >= 2 * t)
                       ? (u - t) * (-g - t)
                       : -0.5 * ((u - t) * (u - t) + (g + t) * (g + t));
      return row <= tol;
    }
  }
  return false;
}

bool member_D(const ProblemSpec& spec, const Vector& x, const Vector& y,
              const Vector& u, double tol) {
  LagrangianEval le = lagrangian(spec, x, y, u);
  if (le.L.lpNorm<Eigen::Infinity>() > tol) return false;
  for (int i = 0; i < spec.q; ++i) {
    double gi = eval_value(spec.g[i], x, y);
    if (u(i) < -tol) return false;
    if (gi > tol) return false;
    if (std::abs(u(i) * gi) > tol) return false;
  }
  return true;
}

bool member_Dt(Scheme s, double t, const ProblemSpec& spec, const Vector& x,
               const Vector& y, const Vector& u, double tol) {
  require_t(t);
  LagrangianEval le = lagrangian(spec, x, y, u);
  if (le.L.lpNorm<Eigen::Infinity>() > tol) return false;
  for (int i = 0; i < spec.q; ++i) {
    double gi = eval_value(spec.g[i], x, y);
    PhiRows rows = phi_rows(s, t, gi, u(i));
    if ((rows.r.array() > tol).any()) return false;
  }
  return true;
}

IndexPartition index_sets(const ProblemSpec& spec, const Vector& x, const Vector& y,
                          const Vector& u, double tol) {
  IndexPartition out;
  out.tol = tol;
  for (int i = 0; i < spec.q; ++i) {
    double gi = eval_value(spec.g[i], x, y);
    if (u(i) <= tol && gi < -tol) {
      out.eta.push_back(i);
    } else if (u(i) <= tol && std::abs(gi) <= tol) {
      out.theta.push_back(i);
    } else if (u(i) > tol && std::abs(gi) <= tol) {
      out.nu.push_back(i);
    } else if (std::abs(u(i) * gi) > tol) {
      // u_i > tol and g_i < -tol with a large product: complementarity violated
      out.unclassified.push_back(i);
    } else {
      // both barely nonzero but the product is within tol; attribute the
      // activity to whichever side is closer to zero so the sets still cover
      if (u(i) < -gi) out.eta.push_back(i);
      else if (u(i) > -gi) out.nu.push_back(i);
      else out.theta.push_back(i);
    }
  }
  return out;
}

}  // namespace pessirelax
