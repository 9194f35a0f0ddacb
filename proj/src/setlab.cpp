#include "pessirelax/setlab.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <thread>

namespace pessirelax {

namespace {

// grid coordinates lo, lo + step, ..., up to hi (within half a step)
std::vector<double> axis_coords(const Interval& iv, double step) {
  std::vector<double> out;
  long count = static_cast<long>(std::floor((iv.hi - iv.lo) / step + 1e-9));
  out.reserve(count + 1);
  for (long j = 0; j <= count; ++j) out.push_back(iv.lo + j * step);
  return out;
}

struct Odometer {
  std::vector<std::vector<double>> axes;
  long total = 1;

  explicit Odometer(const std::vector<Interval>& box, double step) {
    for (const Interval& iv : box) {
      axes.push_back(axis_coords(iv, step));
      total *= static_cast<long>(axes.back().size());
    }
  }

  void decode(long index, Vector& out) const {
    for (int d = static_cast<int>(axes.size()) - 1; d >= 0; --d) {
      long sz = static_cast<long>(axes[d].size());
      out(d) = axes[d][index % sz];
      index /= sz;
    }
  }
};

// Membership over one y point for the whole u grid. L(u) = a + B u is
// linear in u, so a, B, and the g values are hoisted out of the u loop;
// the loop itself runs on raw buffers (it sees ~1e9 points at fine steps).
template <typename RowCheck>
void scan_u_grid(const ProblemSpec& spec, const Vector& a, const Matrix& B,
                 const Vector& gval, const Odometer& u_grid, double tol,
                 const RowCheck& rows_ok, const Vector& y,
                 std::vector<Vector>& out) {
  const int m = spec.m, q = spec.q;
  std::vector<double> u(q, 0.0);
  std::vector<long> pos(q, 0);  // odometer digits, last axis fastest
  for (int i = 0; i < q; ++i) u[i] = u_grid.axes[i][0];
  Vector pt(m + q);
  for (;;) {
    bool ok = true;
    for (int l = 0; l < m && ok; ++l) {
      double s = a(l);
      for (int i = 0; i < q; ++i) s += u[i] * B(l, i);
      ok = std::abs(s) <= tol;
    }
    for (int i = 0; i < q && ok; ++i) ok = rows_ok(gval(i), u[i]);
    if (ok) {
      pt.head(m) = y;
      for (int i = 0; i < q; ++i) pt(m + i) = u[i];
      out.push_back(pt);
    }
    // advance the odometer
    int d = q - 1;
    while (d >= 0) {
      if (++pos[d] < static_cast<long>(u_grid.axes[d].size())) {
        u[d] = u_grid.axes[d][pos[d]];
        break;
      }
      pos[d] = 0;
      u[d] = u_grid.axes[d][0];
      --d;
    }
    if (d < 0) break;
  }
}

template <typename RowCheck>
SampledSet sample_impl(const ProblemSpec& spec, const Vector& x, const GridSpec& grid,
                       double tol, const std::string& id, const RowCheck& rows_ok) {
  if (!(grid.step > 0.0)) throw std::invalid_argument("sample: step must be > 0");
  if (static_cast<int>(grid.y_box.size()) != spec.m ||
      static_cast<int>(grid.u_box.size()) != spec.q)
    throw std::invalid_argument("sample: box dimensions do not match the problem");

  SampledSet set;
  set.grid = grid;
  set.predicate_id = id;
  set.tol = tol;

  const Odometer y_grid(grid.y_box, grid.step);
  const Odometer u_grid(grid.u_box, grid.step);
  const int m = spec.m, q = spec.q, n = spec.n;

  auto process_y = [&](long yi, std::vector<Vector>& out) {
    Vector y(m);
    y_grid.decode(yi, y);
    Vector a(m), gval(q);
    Matrix B(m, q);
    try {
      Jet fj = eval_jet(spec.f, x, y, 1);
      for (int l = 0; l < m; ++l) a(l) = fj.grad(n + l);
      for (int i = 0; i < q; ++i) {
        Jet gj = eval_jet(spec.g[i], x, y, 1);
        gval(i) = gj.value;
        for (int l = 0; l < m; ++l) B(l, i) = gj.grad(n + l);
      }
    } catch (const EvalDomainError&) {
      return;  // grid point outside the expressions' domain
    }
    scan_u_grid(spec, a, B, gval, u_grid, tol, rows_ok, y, out);
  };

  const long work = y_grid.total * std::max<long>(u_grid.total, 1);
  unsigned n_threads = std::min<unsigned>(std::thread::hardware_concurrency(), 8);
  if (work < 2'000'000 || n_threads < 2 || y_grid.total < 2) {
    for (long yi = 0; yi < y_grid.total; ++yi) process_y(yi, set.points);
    return set;
  }

  // chunked over y indices; merged in index order for determinism
  const long chunk = (y_grid.total + n_threads - 1) / n_threads;
  std::vector<std::vector<Vector>> results(n_threads);
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < n_threads; ++w) {
    workers.emplace_back([&, w] {
      long lo = w * chunk, hi = std::min<long>(y_grid.total, lo + chunk);
      for (long yi = lo; yi < hi; ++yi) process_y(yi, results[w]);
    });
  }
  for (auto& th : workers) th.join();
  for (auto& part : results)
    set.points.insert(set.points.end(), part.begin(), part.end());
  return set;
}

}  // namespace

SampledSet sample_D(const ProblemSpec& spec, const Vector& x, const GridSpec& grid,
                    double tol) {
  return sample_impl(spec, x, grid, tol, "D",
                     [tol](double g, double u) {
                       return u >= -tol && g <= tol && std::abs(u * g) <= tol;
                     });
}

SampledSet sample_Dt(Scheme s, double t, const ProblemSpec& spec, const Vector& x,
                     const GridSpec& grid, double tol) {
  if (!(t > 0.0)) throw std::invalid_argument("sample_Dt: t must be > 0");
  return sample_impl(spec, x, grid, tol,
                     "Dt_" + scheme_tag(s) + "_t" + std::to_string(t),
                     [s, t, tol](double g, double u) {
                       return phi_rows_within(s, t, g, u, tol);
                     });
}

double excess(const SampledSet& A, const SampledSet& B) {
  if (A.points.empty()) return 0.0;
  if (B.points.empty()) return std::numeric_limits<double>::infinity();
  double sup = 0.0;
  for (const Vector& a : A.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vector& b : B.points) {
      best = std::min(best, (a - b).squaredNorm());
      if (best == 0.0) break;
    }
    sup = std::max(sup, best);
  }
  return std::sqrt(sup);
}

namespace {

PsiApprox psi_from_set(const ProblemSpec& spec, const Vector& x, const SampledSet& set) {
  PsiApprox out;
  if (set.points.empty()) return out;
  const int m = spec.m;
  double best = -std::numeric_limits<double>::infinity();
  for (const Vector& pt : set.points) {
    double v = eval_value(spec.F, x, pt.head(m));
    if (v > best) {
      best = v;
      out.arg = pt;
    }
  }
  out.value = best;
  for (int b = 0; b < m; ++b) {
    const Interval& iv = set.grid.y_box[b];
    double half = set.grid.step / 2;
    if (std::abs(out.arg(b) - iv.lo) < half || std::abs(out.arg(b) - iv.hi) < half)
      out.box_truncated = true;
  }
  return out;
}

}  // namespace

PsiApprox psi_p_approx(const ProblemSpec& spec, const Vector& x, const GridSpec& grid,
                       double tol) {
  return psi_from_set(spec, x, sample_D(spec, x, grid, tol));
}

PsiApprox psi_R_approx(Scheme s, double t, const ProblemSpec& spec, const Vector& x,
                       const GridSpec& grid, double tol) {
  return psi_from_set(spec, x, sample_Dt(s, t, spec, x, grid, tol));
}

std::string sampled_set_csv(const SampledSet& set) {
  std::ostringstream out;
  const int m = static_cast<int>(set.grid.y_box.size());
  const int q = static_cast<int>(set.grid.u_box.size());
  for (int b = 0; b < m; ++b) out << (b ? "," : "") << "y" << (b + 1);
  for (int i = 0; i < q; ++i) out << ",u" << (i + 1);
  out << "\n";
  char buf[40];
  for (const Vector& pt : set.points) {
    for (int d = 0; d < m + q; ++d) {
      auto res = std::to_chars(buf, buf + sizeof(buf), pt(d));
      out << (d ? "," : "") << std::string_view(buf, res.ptr - buf);
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Closed-form oracles for the two built-in examples.
// ---------------------------------------------------------------------------

namespace oracle {

namespace {
constexpr double kExact = 1e-12;  // slack for the equality constraints
[[noreturn]] void out_of_range(const std::string& what) {
  throw std::domain_error("oracle: query outside the stated range: " + what);
}
}  // namespace

bool toy_member_D(double x, double y, double u1, double u2) {
  if (x < 0.0 || x > 1.0) out_of_range("x must lie in [0, 1]");
  if (x != 0.0)
    return std::abs(y) <= kExact && std::abs(u1 - x) <= kExact && std::abs(u2) <= kExact;
  return y >= 0.0 && y <= 1.0 && std::abs(u1) <= kExact && std::abs(u2) <= kExact;
}

bool toy_member_Dt_kdb(double t, double x, double y, double u1, double u2) {
  if (x < 0.0 || x > 1.0) out_of_range("x must lie in [0, 1]");
  if (x != 0.0) {
    if (!(t > 0.0 && t < x / 2)) out_of_range("need 0 < t < x/2 for x != 0");
    return std::abs(u2 - (u1 - x)) <= kExact && x - t <= u1 && u1 <= x + t &&
           -t <= y && y <= t;
  }
  if (!(t > 0.0 && t <= 0.5)) out_of_range("need 0 < t <= 1/2 at x = 0");
  if (std::abs(u2 - u1) > kExact) return false;
  bool inner = (-t <= u1 && u1 < t && t <= y && y <= 1 - t);
  bool seam = (std::abs(u1 - t) <= kExact && -t <= y && y <= 1 + t);
  return inner || seam;
}

double toy_psi_p(double x) {
  if (x < 0.0 || x > 1.0) out_of_range("x must lie in [0, 1]");
  return x == 0.0 ? 1.0 : 0.0;
}

bool lin_member_D(double x, double y, double u1) {
  if (x < 0.0 || x > 1.0) out_of_range("x must lie in [0, 1]");
  if (x != 0.0) return std::abs(y - 1.0) <= kExact && std::abs(u1 - x) <= kExact;
  return y <= 1.0 && std::abs(u1) <= kExact;
}

bool lin_member_Dt_kdb(double t, double x, double y, double u1) {
  if (x < 0.0 || x > 1.0) out_of_range("x must lie in [0, 1]");
  if (x != 0.0) {
    if (!(t > 0.0 && t < x)) out_of_range("need 0 < t < x for x != 0");
    return std::abs(u1 - x) <= kExact && 1 - t <= y && y <= 1 + t;
  }
  if (!(t > 0.0 && t <= 0.5)) out_of_range("need 0 < t <= 1/2 at x = 0");
  return std::abs(u1) <= kExact && y <= 1 - t;
}

double lin_psi_p(double x) {
  if (x < 0.0 || x > 1.0) out_of_range("x must lie in [0, 1]");
  return x + 1.0;
}

double lin_psi_kdb(double t, double x) {
  if (x < 0.0 || x > 1.0) out_of_range("x must lie in [0, 1]");
  if (x != 0.0) {
    if (!(t > 0.0 && t < x)) out_of_range("need 0 < t < x for x != 0");
    return x + 1.0 + t;
  }
  if (!(t > 0.0 && t <= 0.5)) out_of_range("need 0 < t <= 1/2 at x = 0");
  return 1.0 - t;
}

}  // namespace oracle

}  // namespace pessirelax
