#include "pessirelax/verify.hpp"

#include <json.hpp>

#include <Eigen/QR>

#include <cmath>
#include <sstream>

namespace pessirelax {

FeasibilityReport feasibility(const ProblemSpec& spec, const Vector& x, const Vector& y,
                              const Vector& u, double tol) {
  FeasibilityReport rep;
  rep.tol = tol;
  auto note = [&](double violation, const std::string& what) {
    rep.max_violation = std::max(rep.max_violation, violation);
    if (violation > tol) rep.violations.push_back(what);
  };
  LagrangianEval le = lagrangian(spec, x, y, u);
  note(le.L.lpNorm<Eigen::Infinity>(), "||L||_inf > tol");
  for (int i = 0; i < spec.q; ++i) {
    double gi = eval_value(spec.g[i], x, y);
    note(-u(i), "u_" + std::to_string(i + 1) + " < 0");
    note(gi, "g_" + std::to_string(i + 1) + " > 0");
    note(std::abs(u(i) * gi), "|u_" + std::to_string(i + 1) + " g_" +
                                  std::to_string(i + 1) + "| > tol");
  }
  for (int k = 0; k < spec.p; ++k)
    note(eval_value(spec.G[k], x, y), "G_" + std::to_string(k + 1) + " > 0");
  rep.feasible = rep.violations.empty();
  return rep;
}

MappedMultipliers map_multipliers(Scheme s, const ProblemSpec& spec,
                                  const IterateLayout& layout, const Vector& zeta,
                                  double t) {
  const int q = spec.q;
  MappedMultipliers out;
  out.alpha = layout.alpha(zeta);
  out.beta_t = -layout.beta(zeta);
  out.gamma_t = Vector::Zero(q);
  Vector x = layout.x(zeta), y = layout.y(zeta), u = layout.u(zeta);
  Vector gamma = layout.gamma(zeta), mu = layout.mu(zeta), delta = layout.delta(zeta);

  for (int i = 0; i < q; ++i) {
    double gi = eval_value(spec.g[i], x, y);
    PhiRows rows = phi_rows(s, t, gi, u(i));
    Vector lam(families(s));
    if (has_mu(s)) lam << gamma(i), mu(i), delta(i);
    else lam << gamma(i), delta(i);
    out.gamma_t(i) = -lam.dot(rows.r_g);

    // two families simultaneously near-active with large multipliers make
    // the support attribution of the limiting formulas ambiguous
    int strong = 0;
    for (int k = 0; k < families(s); ++k)
      if (lam(k) > 1e-2 && std::abs(rows.r(k)) < 1e-2) ++strong;
    if (strong >= 2) out.ambiguous.push_back(i);
  }
  return out;
}

std::string to_string(Flavor f) {
  switch (f) {
    case Flavor::None: return "none";
    case Flavor::C: return "C";
    case Flavor::M: return "M";
    case Flavor::S: return "S";
  }
  return "?";
}

StationarityCertificate check_C(const ProblemSpec& spec, const Vector& x,
                                const Vector& y, const Vector& u, const Vector& alpha,
                                const Vector& beta, const Vector& gamma, double tol,
                                double index_tol) {
  const int n = spec.n, m = spec.m, p = spec.p, q = spec.q;
  StationarityCertificate cert;
  cert.x = x;
  cert.y = y;
  cert.u = u;
  cert.alpha = alpha;
  cert.beta = beta;
  cert.gamma = gamma;
  cert.tol = tol;
  cert.index_tol = index_tol;
  cert.partition = index_sets(spec, x, y, u, index_tol);
  cert.classifiable = cert.partition.unclassified.empty();

  LagrangianEval le = lagrangian(spec, x, y, u);
  Jet Fj = eval_jet(spec.F, x, y, 1);
  std::vector<Jet> gj;
  gj.reserve(q);
  for (int i = 0; i < q; ++i) gj.push_back(eval_jet(spec.g[i], x, y, 1));

  // x- and y-stationarity equations with the given multipliers
  Vector stat_x = Vector::Zero(n);
  for (int a = 0; a < n; ++a) {
    stat_x(a) = Fj.grad(a);
    for (int l = 0; l < m; ++l) stat_x(a) += beta(l) * le.dL_dx(l, a);
    for (int i = 0; i < q; ++i) stat_x(a) += gamma(i) * gj[i].grad(a);
  }
  for (int k = 0; k < p; ++k) {
    Jet Gj = eval_jet(spec.G[k], x, y, 1);
    for (int a = 0; a < n; ++a) stat_x(a) += alpha(k) * Gj.grad(a);
  }
  Vector stat_y = Vector::Zero(m);
  for (int b = 0; b < m; ++b) {
    stat_y(b) = Fj.grad(n + b);
    for (int l = 0; l < m; ++l) stat_y(b) += beta(l) * le.dL_dy(l, b);
    for (int i = 0; i < q; ++i) stat_y(b) += gamma(i) * gj[i].grad(n + b);
  }
  cert.stat_x_residual = n > 0 ? stat_x.lpNorm<Eigen::Infinity>() : 0.0;
  cert.stat_y_residual = m > 0 ? stat_y.lpNorm<Eigen::Infinity>() : 0.0;

  // upper-level complementarity: alpha >= 0, G <= 0, alpha . G = 0
  double upper_comp = 0.0;
  for (int k = 0; k < p; ++k) {
    double Gv = eval_value(spec.G[k], x, y);
    upper_comp = std::max({upper_comp, -alpha(k), Gv, std::abs(alpha(k) * Gv)});
  }
  cert.upper_comp_residual = std::max(0.0, upper_comp);

  auto dgb = [&](int i) {
    double v = 0.0;
    for (int l = 0; l < m; ++l) v += beta(l) * gj[i].grad(n + l);
    return v;
  };

  double active_set = 0.0;
  for (int i : cert.partition.nu) active_set = std::max(active_set, std::abs(dgb(i)));
  for (int i : cert.partition.eta) active_set = std::max(active_set, std::abs(gamma(i)));
  cert.active_set_residual = active_set;

  cert.c_signs = true;
  cert.m_signs = true;
  cert.s_signs = true;
  for (int i : cert.partition.theta) {
    double d = dgb(i);
    double prod = gamma(i) * d;
    cert.theta_products.push_back(prod);
    if (prod < -tol) cert.c_signs = false;
    if (!((gamma(i) < -tol && d < -tol) || std::abs(prod) <= tol)) cert.m_signs = false;
    if (!(gamma(i) <= tol && d <= tol)) cert.s_signs = false;
  }

  bool equations_ok = cert.classifiable && cert.stat_x_residual <= tol &&
                      cert.stat_y_residual <= tol && cert.upper_comp_residual <= tol &&
                      cert.active_set_residual <= tol;
  cert.flavor = Flavor::None;
  if (equations_ok && cert.c_signs) {
    cert.flavor = Flavor::C;
    if (cert.m_signs) {
      cert.flavor = Flavor::M;
      if (cert.s_signs) cert.flavor = Flavor::S;
    }
  }
  return cert;
}

bool lambda_ec_member(const ProblemSpec& spec, const Vector& x, const Vector& y,
                      const Vector& u, const Vector& v, const Vector& beta,
                      const Vector& gamma, double tol) {
  const int n = spec.n, m = spec.m, q = spec.q;
  IndexPartition part = index_sets(spec, x, y, u, tol);
  LagrangianEval le = lagrangian(spec, x, y, u);
  std::vector<Jet> gj;
  for (int i = 0; i < q; ++i) gj.push_back(eval_jet(spec.g[i], x, y, 1));

  auto dgb = [&](int i) {
    double s = 0.0;
    for (int l = 0; l < m; ++l) s += beta(l) * gj[i].grad(n + l);
    return s;
  };
  for (int i : part.nu)
    if (std::abs(dgb(i)) > tol) return false;
  for (int i : part.eta)
    if (std::abs(gamma(i)) > tol) return false;
  for (int i : part.theta)
    if (gamma(i) * dgb(i) < -tol) return false;

  // v + d(x,y)L^T beta + grad g^T gamma = 0 over the combined (x, y) space
  for (int a = 0; a < n + m; ++a) {
    double s = v(a);
    for (int l = 0; l < m; ++l)
      s += beta(l) * (a < n ? le.dL_dx(l, a) : le.dL_dy(l, a - n));
    for (int i = 0; i < q; ++i) s += gamma(i) * gj[i].grad(a);
    if (std::abs(s) > tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Dense two-phase simplex (Bland's rule) for the regularity LP.
// ---------------------------------------------------------------------------

namespace {

struct SimplexResult {
  bool ok = false;
  double objective = 0.0;
};

// max c.v subject to T v = b, v >= 0, b >= 0. Rows and columns are tiny.
SimplexResult simplex_max(Matrix T, Vector b, Vector c) {
  const int rows = static_cast<int>(T.rows());
  const int cols = static_cast<int>(T.cols());
  const double eps_piv = 1e-11;

  // phase 1: artificial variable per row
  Matrix A(rows, cols + rows);
  A.leftCols(cols) = T;
  A.rightCols(rows) = Matrix::Identity(rows, rows);
  std::vector<int> basis(rows);
  for (int r = 0; r < rows; ++r) basis[r] = cols + r;

  auto run = [&](const Vector& cost, int allowed_cols) -> bool {
    for (int guard = 0; guard < 10000; ++guard) {
      // reduced costs: cost_j - cost_B^T B^{-1} A_j, maintained by pivoting
      // on the tableau; here A is kept in tableau form already
      Vector cb(rows);
      for (int r = 0; r < rows; ++r) cb(r) = cost(basis[r]);
      int enter = -1;
      for (int j = 0; j < allowed_cols; ++j) {
        double red = cost(j) - cb.dot(A.col(j));
        if (red > 1e-9) { enter = j; break; }  // Bland: first improving index
      }
      if (enter < 0) return true;  // optimal
      int leave = -1;
      double best = 0.0;
      for (int r = 0; r < rows; ++r) {
        if (A(r, enter) > eps_piv) {
          double ratio = b(r) / A(r, enter);
          if (leave < 0 || ratio < best - 1e-15 ||
              (std::abs(ratio - best) <= 1e-15 && basis[r] < basis[leave])) {
            leave = r;
            best = ratio;
          }
        }
      }
      if (leave < 0) return false;  // unbounded
      // pivot
      double piv = A(leave, enter);
      A.row(leave) /= piv;
      b(leave) /= piv;
      for (int r = 0; r < rows; ++r) {
        if (r == leave) continue;
        double f = A(r, enter);
        if (f != 0.0) {
          A.row(r) -= f * A.row(leave);
          b(r) -= f * b(leave);
        }
      }
      basis[leave] = enter;
    }
    return false;  // cycling guard tripped
  };

  Vector phase1_cost = Vector::Zero(cols + rows);
  for (int r = 0; r < rows; ++r) phase1_cost(cols + r) = -1.0;
  if (!run(phase1_cost, cols + rows)) return {};
  double art_sum = 0.0;
  for (int r = 0; r < rows; ++r)
    if (basis[r] >= cols) art_sum += b(r);
  if (art_sum > 1e-8) return {};  // original system infeasible

  // drive leftover artificials out of the basis or drop redundant rows
  for (int r = 0; r < rows; ++r) {
    if (basis[r] < cols) continue;
    int piv_col = -1;
    for (int j = 0; j < cols; ++j)
      if (std::abs(A(r, j)) > eps_piv) { piv_col = j; break; }
    if (piv_col < 0) {
      A.row(r).setZero();  // redundant constraint; keep the zero row inert
      continue;
    }
    double piv = A(r, piv_col);
    A.row(r) /= piv;
    b(r) /= piv;
    for (int r2 = 0; r2 < rows; ++r2) {
      if (r2 == r) continue;
      double f = A(r2, piv_col);
      if (f != 0.0) {
        A.row(r2) -= f * A.row(r);
        b(r2) -= f * b(r);
      }
    }
    basis[r] = piv_col;
  }

  Vector phase2_cost = Vector::Zero(cols + rows);
  phase2_cost.head(cols) = c;
  if (!run(phase2_cost, cols)) return {};

  SimplexResult res;
  res.ok = true;
  for (int r = 0; r < rows; ++r)
    if (basis[r] < cols) res.objective += c(basis[r]) * b(r);
  return res;
}

}  // namespace

bool check_regularity(const ProblemSpec& spec, const Vector& x, const Vector& y,
                      RegularityLevel level, double active_tol) {
  const int n = spec.n, m = spec.m;
  std::vector<Vector> grads;  // gradient of each active constraint
  if (level == RegularityLevel::Upper) {
    for (int k = 0; k < spec.p; ++k) {
      Jet Gj = eval_jet(spec.G[k], x, y, 1);
      if (std::abs(Gj.value) <= active_tol) grads.push_back(Gj.grad.head(n));
    }
  } else {
    for (int i = 0; i < spec.q; ++i) {
      Jet gj = eval_jet(spec.g[i], x, y, 1);
      if (std::abs(gj.value) <= active_tol) grads.push_back(gj.grad.tail(m));
    }
  }
  const int k = static_cast<int>(grads.size());
  if (k == 0) return true;  // no active constraints: vacuously regular
  const int dim = level == RegularityLevel::Upper ? n : m;

  // max sum(alpha) s.t. grads^T alpha = 0, 0 <= alpha <= 1;
  // regular iff the optimum is zero
  Matrix T = Matrix::Zero(dim + k, 2 * k);
  Vector b = Vector::Zero(dim + k);
  for (int j = 0; j < k; ++j) {
    T.block(0, j, dim, 1) = grads[j];
    T(dim + j, j) = 1.0;      // alpha_j + s_j = 1
    T(dim + j, k + j) = 1.0;
    b(dim + j) = 1.0;
  }
  Vector c = Vector::Zero(2 * k);
  c.head(k).setOnes();
  SimplexResult res = simplex_max(T, b, c);
  if (!res.ok) throw std::runtime_error("check_regularity: LP solve failed");
  return res.objective <= 1e-8;
}

std::optional<double> eoc(const std::vector<double>& residual_history) {
  const size_t sz = residual_history.size();
  if (sz < 3) return std::nullopt;
  double h0 = residual_history[sz - 3];
  double h1 = residual_history[sz - 2];
  double h2 = residual_history[sz - 1];
  for (double h : {h0, h1, h2})
    if (!(h > 0.0) || h == 1.0) return std::nullopt;  // log degeneracy
  // base-10 logs keep whole decades exact (the ratio is base-independent)
  double r1 = std::log10(h1) / std::log10(h0);
  double r2 = std::log10(h2) / std::log10(h1);
  return std::max(r1, r2);
}

std::optional<double> accuracy(double F_value, std::optional<double> known_F_pes) {
  if (!known_F_pes) return std::nullopt;
  return std::abs(F_value - *known_F_pes);
}

std::pair<Vector, Vector> ls_fit_multipliers(const ProblemSpec& spec, const Vector& x,
                                             const Vector& y, const Vector& u,
                                             const Vector& alpha) {
  const int n = spec.n, m = spec.m, q = spec.q;
  LagrangianEval le = lagrangian(spec, x, y, u);
  Jet Fj = eval_jet(spec.F, x, y, 1);
  Matrix A = Matrix::Zero(n + m, m + q);
  Vector rhs = Vector::Zero(n + m);
  for (int a = 0; a < n + m; ++a) {
    for (int l = 0; l < m; ++l)
      A(a, l) = a < n ? le.dL_dx(l, a) : le.dL_dy(l, a - n);
    rhs(a) = -Fj.grad(a);
  }
  for (int i = 0; i < q; ++i) {
    Jet gj = eval_jet(spec.g[i], x, y, 1);
    for (int a = 0; a < n + m; ++a) A(a, m + i) = gj.grad(a);
  }
  for (int k = 0; k < spec.p; ++k) {
    Jet Gj = eval_jet(spec.G[k], x, y, 1);
    for (int a = 0; a < n; ++a) rhs(a) -= alpha(k) * Gj.grad(a);
  }
  Vector sol = A.colPivHouseholderQr().solve(rhs);
  return {sol.head(m), sol.tail(q)};
}

RunAssessment assess_run(const ProblemSpec& spec, Scheme s, const SolveReport& report,
                         double feas_tol) {
  const IterateLayout& l = report.layout;
  Vector x = l.x(report.zeta), y = l.y(report.zeta), u = l.u(report.zeta);
  RunAssessment out;
  out.feas = feasibility(spec, x, y, u, feas_tol);

  const StageRecord& last = report.stages.back();
  out.mapped = map_multipliers(s, spec, l, report.zeta, last.t);
  // the FB-smoothed system leaves complementarity residuals of exactly eps,
  // so certification below that scale can never fire
  double cert_tol = std::max(1e-5, 5.0 * last.eps);
  double index_tol = std::max(1e-6, 5.0 * last.eps);
  out.certificate = check_C(spec, x, y, u, out.mapped.alpha, out.mapped.beta_t,
                            out.mapped.gamma_t, cert_tol, index_tol);
  if (out.certificate.flavor == Flavor::None && !out.mapped.ambiguous.empty()) {
    auto [beta_fit, gamma_fit] = ls_fit_multipliers(spec, x, y, u, out.mapped.alpha);
    StationarityCertificate fit = check_C(spec, x, y, u, out.mapped.alpha, beta_fit,
                                          gamma_fit, cert_tol, index_tol);
    if (fit.flavor != Flavor::None) out.certificate = fit;
  }
  // a stationarity flavor is only claimed for feasible end points
  if (!out.feas.feasible) out.certificate.flavor = Flavor::None;

  out.F_value = eval_value(spec.F, x, y);
  out.accuracy = accuracy(out.F_value, spec.known.F_pes);
  out.eoc = eoc(report.full_residual_history());
  return out;
}

std::string certificate_to_json(const StationarityCertificate& cert) {
  nlohmann::json j;
  auto vec = [](const Vector& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    return out;
  };
  j["point"]["x"] = vec(cert.x);
  j["point"]["y"] = vec(cert.y);
  j["point"]["u"] = vec(cert.u);
  j["multipliers"]["alpha"] = vec(cert.alpha);
  j["multipliers"]["beta"] = vec(cert.beta);
  j["multipliers"]["gamma"] = vec(cert.gamma);
  j["residuals"]["stat_x"] = cert.stat_x_residual;
  j["residuals"]["stat_y"] = cert.stat_y_residual;
  j["residuals"]["upper_comp"] = cert.upper_comp_residual;
  j["residuals"]["active_set"] = cert.active_set_residual;
  j["theta_products"] = cert.theta_products;
  j["signs"]["c"] = cert.c_signs;
  j["signs"]["m"] = cert.m_signs;
  j["signs"]["s"] = cert.s_signs;
  j["flavor"] = to_string(cert.flavor);
  j["tolerances"]["certificate"] = cert.tol;
  j["tolerances"]["index"] = cert.index_tol;
  j["partition"]["eta"] = cert.partition.eta;
  j["partition"]["theta"] = cert.partition.theta;
  j["partition"]["nu"] = cert.partition.nu;
  j["partition"]["unclassified"] = cert.partition.unclassified;
  j["classifiable"] = cert.classifiable;
  return j.dump(2);
}

}  // namespace pessirelax
