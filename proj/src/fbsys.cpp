#include "pessirelax/fbsys.hpp"

#include <cmath>
#include <stdexcept>

namespace pessirelax {

IterateLayout IterateLayout::make(Scheme s, const ProblemSpec& spec) {
  IterateLayout l;
  l.scheme = s;
  l.n = spec.n;
  l.m = spec.m;
  l.p = spec.p;
  l.q = spec.q;
  int off = 0;
  l.x_off = off; off += l.n;
  l.y_off = off; off += l.m;
  l.u_off = off; off += l.q;
  l.alpha_off = off; off += l.p;
  l.beta_off = off; off += l.m;
  l.gamma_off = off; off += l.q;
  if (has_mu(s)) { l.mu_off = off; off += l.q; }
  else l.mu_off = -1;
  l.delta_off = off; off += l.q;
  l.size = off;
  return l;
}

double fb(double a, double b, double eps) {
  return std::sqrt(a * a + b * b + 2 * eps) - (a + b);
}

std::pair<double, double> fb_grad(double a, double b, double eps) {
  double r = std::sqrt(a * a + b * b + 2 * eps);
  if (r == 0.0) return {-1.0, -1.0};
  return {a / r - 1.0, b / r - 1.0};
}

namespace {

// Everything the residual and Jacobian need at one evaluation point.
struct SystemData {
  Jet F;                  // order 2
  std::vector<Jet> G;     // order 2 each
  std::vector<Jet> g;     // order 2 or 3 each
  Jet f;                  // order 2 or 3
  std::vector<PhiRows> rows;  // per i at (g_i, u_i)
  // multiplier-weighted sums over families, per i
  Vector P_g, P_u, P_gg, P_gu, P_uu;
};

SystemData gather(Scheme s, double t, const ProblemSpec& spec, const Vector& x,
                  const Vector& y, const Vector& u, const Vector& gamma,
                  const Vector& mu, const Vector& delta, int order_fg) {
  SystemData d;
  d.F = eval_jet(spec.F, x, y, 2);
  d.f = eval_jet(spec.f, x, y, order_fg);
  d.G.reserve(spec.p);
  for (int j = 0; j < spec.p; ++j) d.G.push_back(eval_jet(spec.G[j], x, y, 2));
  d.g.reserve(spec.q);
  for (int i = 0; i < spec.q; ++i) d.g.push_back(eval_jet(spec.g[i], x, y, order_fg));

  const int q = spec.q;
  d.rows.reserve(q);
  d.P_g = Vector::Zero(q);
  d.P_u = Vector::Zero(q);
  d.P_gg = Vector::Zero(q);
  d.P_gu = Vector::Zero(q);
  d.P_uu = Vector::Zero(q);
  for (int i = 0; i < q; ++i) {
    PhiRows r = phi_rows(s, t, d.g[i].value, u(i));
    Vector lam(families(s));
    if (has_mu(s)) lam << gamma(i), mu(i), delta(i);
    else lam << gamma(i), delta(i);
    d.P_g(i) = lam.dot(r.r_g);
    d.P_u(i) = lam.dot(r.r_u);
    d.P_gg(i) = lam.dot(r.r_gg);
    d.P_gu(i) = lam.dot(r.r_gu);
    d.P_uu(i) = lam.dot(r.r_uu);
    d.rows.push_back(std::move(r));
  }
  return d;
}

// second partial of L_l with respect to z_a, z_b (z = (x, y) combined)
double d2L(const SystemData& d, const Vector& u, int n, int l, int a, int b) {
  double v = d.f.third(n + l, a, b);
  for (size_t i = 0; i < d.g.size(); ++i) v += u(i) * d.g[i].third(n + l, a, b);
  return v;
}

}  // namespace

BigPhiEval big_phi(Scheme s, double t, const ProblemSpec& spec, const Vector& x,
                   const Vector& y, const Vector& u, const Vector& gamma,
                   const Vector& mu, const Vector& delta) {
  if (!(t > 0.0)) throw std::invalid_argument("big_phi: t must be > 0");
  const int n = spec.n, m = spec.m, q = spec.q;
  Vector mu_eff = has_mu(s) ? mu : Vector::Zero(q);
  SystemData d = gather(s, t, spec, x, y, u, gamma, mu_eff, delta, 1);

  BigPhiEval out;
  out.value = Vector::Zero(q);
  out.d_dx = Matrix::Zero(q, n);
  out.d_dy = Matrix::Zero(q, m);
  out.d_du = d.P_u;
  out.d_dgamma = Vector::Zero(q);
  out.d_dmu = Vector::Zero(q);
  out.d_ddelta = Vector::Zero(q);
  for (int i = 0; i < q; ++i) {
    const PhiRows& r = d.rows[i];
    if (has_mu(s)) {
      out.value(i) = gamma(i) * r.r(0) + mu_eff(i) * r.r(1) + delta(i) * r.r(2);
      out.d_dmu(i) = r.r(1);
      out.d_ddelta(i) = r.r(2);
    } else {
      out.value(i) = gamma(i) * r.r(0) + delta(i) * r.r(1);
      out.d_ddelta(i) = r.r(1);
    }
    out.d_dgamma(i) = r.r(0);
    for (int a = 0; a < n; ++a) out.d_dx(i, a) = d.P_g(i) * d.g[i].grad(a);
    for (int b = 0; b < m; ++b) out.d_dy(i, b) = d.P_g(i) * d.g[i].grad(n + b);
  }
  return out;
}

namespace {

struct Unpacked {
  Vector x, y, u, alpha, beta, gamma, mu, delta;
};

Unpacked unpack(const IterateLayout& l, const Vector& zeta) {
  Unpacked s;
  s.x = l.x(zeta);
  s.y = l.y(zeta);
  s.u = l.u(zeta);
  s.alpha = l.alpha(zeta);
  s.beta = l.beta(zeta);
  s.gamma = l.gamma(zeta);
  s.mu = l.mu(zeta);
  s.delta = l.delta(zeta);
  return s;
}

void check_inputs(double t, const Vector& zeta) {
  if (!(t > 0.0)) throw std::invalid_argument("residual: t must be > 0");
  if (!zeta.allFinite())
    throw std::invalid_argument("residual: iterate contains non-finite entries");
}

}  // namespace

Vector residual(Scheme s, double t, double eps, const ProblemSpec& spec,
                const Vector& zeta) {
  check_inputs(t, zeta);
  const IterateLayout l = IterateLayout::make(s, spec);
  if (zeta.size() != l.size)
    throw std::invalid_argument("residual: iterate has wrong dimension");
  const int n = l.n, m = l.m, p = l.p, q = l.q;
  Unpacked z = unpack(l, zeta);
  SystemData d = gather(s, t, spec, z.x, z.y, z.u, z.gamma, z.mu, z.delta, 2);

  Vector out = Vector::Zero(l.size);
  int row = 0;

  // x-stationarity
  for (int j = 0; j < n; ++j) {
    double v = d.F.grad(j);
    for (int k = 0; k < p; ++k) v += z.alpha(k) * d.G[k].grad(j);
    for (int ll = 0; ll < m; ++ll) {
      double dLx = d.f.hess(n + ll, j);
      for (int i = 0; i < q; ++i) dLx += z.u(i) * d.g[i].hess(n + ll, j);
      v -= z.beta(ll) * dLx;
    }
    for (int i = 0; i < q; ++i) v -= d.P_g(i) * d.g[i].grad(j);
    out(row++) = v;
  }
  // y-stationarity
  for (int b = 0; b < m; ++b) {
    double v = d.F.grad(n + b);
    for (int ll = 0; ll < m; ++ll) {
      double dLy = d.f.hess(n + ll, n + b);
      for (int i = 0; i < q; ++i) dLy += z.u(i) * d.g[i].hess(n + ll, n + b);
      v -= z.beta(ll) * dLy;
    }
    for (int i = 0; i < q; ++i) v -= d.P_g(i) * d.g[i].grad(n + b);
    out(row++) = v;
  }
  // u-stationarity per lower-level index
  for (int i = 0; i < q; ++i) {
    double v = -d.P_u(i);
    for (int ll = 0; ll < m; ++ll) v += z.beta(ll) * d.g[i].grad(n + ll);
    out(row++) = v;
  }
  // L = grad_y f + sum u_i grad_y g_i
  for (int ll = 0; ll < m; ++ll) {
    double v = d.f.grad(n + ll);
    for (int i = 0; i < q; ++i) v += z.u(i) * d.g[i].grad(n + ll);
    out(row++) = v;
  }
  // upper-level complementarity, paired as (alpha_j, -G_j) so both FB
  // arguments are positive at a root
  for (int k = 0; k < p; ++k) out(row++) = fb(z.alpha(k), -d.G[k].value, eps);
  // multiplier families against their constraint rows
  for (int i = 0; i < q; ++i) out(row++) = fb(z.gamma(i), -d.rows[i].r(0), eps);
  if (has_mu(s))
    for (int i = 0; i < q; ++i) out(row++) = fb(z.mu(i), -d.rows[i].r(1), eps);
  for (int i = 0; i < q; ++i)
    out(row++) = fb(z.delta(i), -d.rows[i].r(families(s) - 1), eps);

  return out;
}

Matrix jacobian(Scheme s, double t, double eps, const ProblemSpec& spec,
                const Vector& zeta) {
  check_inputs(t, zeta);
  const IterateLayout l = IterateLayout::make(s, spec);
  if (zeta.size() != l.size)
    throw std::invalid_argument("jacobian: iterate has wrong dimension");
  const int n = l.n, m = l.m, p = l.p, q = l.q;
  Unpacked z = unpack(l, zeta);
  SystemData d = gather(s, t, spec, z.x, z.y, z.u, z.gamma, z.mu, z.delta, 3);

  Matrix J = Matrix::Zero(l.size, l.size);
  const int d_all = n + m;  // combined (x, y) block is indexed 0..n+m-1
  auto zcol = [&](int a) { return a < n ? l.x_off + a : l.y_off + (a - n); };

  int row = 0;
  // x- and y-stationarity rows share their structure: row index a over (x,y)
  for (int a = 0; a < d_all; ++a) {
    // derivative with respect to z_c = (x, y)
    for (int c = 0; c < d_all; ++c) {
      double v = d.F.hess(a, c);
      if (a < n)
        for (int k = 0; k < p; ++k) v += z.alpha(k) * d.G[k].hess(a, c);
      for (int ll = 0; ll < m; ++ll) v -= z.beta(ll) * d2L(d, z.u, n, ll, a, c);
      for (int i = 0; i < q; ++i)
        v -= d.P_gg(i) * d.g[i].grad(a) * d.g[i].grad(c) + d.P_g(i) * d.g[i].hess(a, c);
      J(row, zcol(c)) += v;
    }
    // with respect to u_i
    for (int i = 0; i < q; ++i) {
      double v = 0.0;
      for (int ll = 0; ll < m; ++ll) v -= z.beta(ll) * d.g[i].hess(n + ll, a);
      v -= d.P_gu(i) * d.g[i].grad(a);
      J(row, l.u_off + i) += v;
    }
    // with respect to alpha (x rows only)
    if (a < n)
      for (int k = 0; k < p; ++k) J(row, l.alpha_off + k) = d.G[k].grad(a);
    // with respect to beta
    for (int ll = 0; ll < m; ++ll) {
      double dLza = d.f.hess(n + ll, a);
      for (int i = 0; i < q; ++i) dLza += z.u(i) * d.g[i].hess(n + ll, a);
      J(row, l.beta_off + ll) = -dLza;
    }
    // with respect to the multiplier families
    for (int i = 0; i < q; ++i) {
      J(row, l.gamma_off + i) = -d.rows[i].r_g(0) * d.g[i].grad(a);
      if (has_mu(s)) J(row, l.mu_off + i) = -d.rows[i].r_g(1) * d.g[i].grad(a);
      J(row, l.delta_off + i) = -d.rows[i].r_g(families(s) - 1) * d.g[i].grad(a);
    }
    ++row;
  }

  // u-stationarity rows
  for (int i = 0; i < q; ++i) {
    for (int c = 0; c < d_all; ++c) {
      double v = -d.P_gu(i) * d.g[i].grad(c);
      for (int ll = 0; ll < m; ++ll) v += z.beta(ll) * d.g[i].hess(n + ll, c);
      J(row, zcol(c)) = v;
    }
    J(row, l.u_off + i) = -d.P_uu(i);
    for (int ll = 0; ll < m; ++ll) J(row, l.beta_off + ll) = d.g[i].grad(n + ll);
    J(row, l.gamma_off + i) = -d.rows[i].r_u(0);
    if (has_mu(s)) J(row, l.mu_off + i) = -d.rows[i].r_u(1);
    J(row, l.delta_off + i) = -d.rows[i].r_u(families(s) - 1);
    ++row;
  }

  // L rows
  for (int ll = 0; ll < m; ++ll) {
    for (int c = 0; c < d_all; ++c) {
      double v = d.f.hess(n + ll, c);
      for (int i = 0; i < q; ++i) v += z.u(i) * d.g[i].hess(n + ll, c);
      J(row, zcol(c)) = v;
    }
    for (int i = 0; i < q; ++i) J(row, l.u_off + i) = d.g[i].grad(n + ll);
    ++row;
  }

  // FB rows for alpha
  for (int k = 0; k < p; ++k) {
    auto [da, db] = fb_grad(z.alpha(k), -d.G[k].value, eps);
    J(row, l.alpha_off + k) = da;
    for (int c = 0; c < d_all; ++c) J(row, zcol(c)) = -db * d.G[k].grad(c);
    ++row;
  }

  // FB rows for a multiplier family bound to phi row `fam_row`
  auto fb_family_rows = [&](int offset, auto lambda_of, int fam_row) {
    for (int i = 0; i < q; ++i) {
      auto [da, db] = fb_grad(lambda_of(i), -d.rows[i].r(fam_row), eps);
      J(row, offset + i) = da;
      for (int c = 0; c < d_all; ++c)
        J(row, zcol(c)) = -db * d.rows[i].r_g(fam_row) * d.g[i].grad(c);
      J(row, l.u_off + i) = -db * d.rows[i].r_u(fam_row);
      ++row;
    }
  };
  fb_family_rows(l.gamma_off, [&](int i) { return z.gamma(i); }, 0);
  if (has_mu(s)) fb_family_rows(l.mu_off, [&](int i) { return z.mu(i); }, 1);
  fb_family_rows(l.delta_off, [&](int i) { return z.delta(i); }, families(s) - 1);

  return J;
}

}  // namespace pessirelax
