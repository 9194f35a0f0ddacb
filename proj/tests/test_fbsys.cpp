#include <doctest.h>

#include <cmath>
#include <random>

#include "pessirelax/fbsys.hpp"

using namespace pessirelax;

namespace {

Vector vec1(double a) {
  Vector v(1);
  v << a;
  return v;
}

// Random iterate with x, y in the start box and all multipliers in (0, 2].
Vector random_iterate(const IterateLayout& l, const ProblemSpec& spec,
                      std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector z(l.size);
  for (int i = 0; i < l.size; ++i) z(i) = 0.1 + 1.9 * unif(rng);
  for (int a = 0; a < l.n; ++a) {
    const Interval& iv = spec.start_box_x[a];
    z(l.x_off + a) = iv.lo + (iv.hi - iv.lo) * unif(rng);
  }
  for (int b = 0; b < l.m; ++b) {
    const Interval& iv = spec.start_box_y[b];
    z(l.y_off + b) = iv.lo + (iv.hi - iv.lo) * unif(rng);
  }
  return z;
}

// Margin of the iterate from every branch seam of the scheme.
double seam_margin(Scheme s, double t, const ProblemSpec& spec, const IterateLayout& l,
                   const Vector& zeta) {
  if (s != Scheme::SU && s != Scheme::KS) return 1.0;
  Vector x = l.x(zeta), y = l.y(zeta), u = l.u(zeta);
  double margin = 1.0;
  for (int i = 0; i < spec.q; ++i) {
    double gi = eval_value(spec.g[i], x, y);
    if (s == Scheme::SU) margin = std::min(margin, std::abs(std::abs(u(i) + gi) - t));
    if (s == Scheme::KS) margin = std::min(margin, std::abs(u(i) - gi - 2 * t));
  }
  return margin;
}

}  // namespace

TEST_SUITE_BEGIN("fbsys");

TEST_CASE("fb closed-form values") {
  CHECK(fb(1, 1, 1) == doctest::Approx(0.0));
  CHECK(fb(3, 0, 0) == doctest::Approx(0.0));
  CHECK(fb(0, 0, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("fb equivalence: eps = ab gives a root on random positive pairs") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(0.0, 5.0);
  for (int trial = 0; trial < 1000; ++trial) {
    double a = unif(rng), b = unif(rng);
    if (a == 0.0 || b == 0.0) continue;
    CHECK(std::abs(fb(a, b, a * b)) < 1e-10);
  }
}

TEST_CASE("fb roots with eps > 0 satisfy a > 0, b > 0, ab = eps") {
  // solve fb(a, b, eps) = 0 for b given a by the closed form b = eps / a
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> unif(0.1, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    double a = unif(rng), eps = unif(rng);
    double b = eps / a;
    CHECK(std::abs(fb(a, b, eps)) < 1e-9);
    CHECK(a > 0);
    CHECK(b > 0);
    CHECK(std::abs(a * b - eps) < 1e-9);
  }
}

TEST_CASE("fb at eps = 0 encodes complementarity on a sign grid") {
  for (double a : {-2.0, -0.5, 0.0, 0.5, 2.0})
    for (double b : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
      bool is_root = std::abs(fb(a, b, 0.0)) < 1e-12;
      bool complementary = a >= 0 && b >= 0 && std::abs(a * b) < 1e-12;
      CHECK(is_root == complementary);
    }
}

TEST_CASE("fb gradient at (1, 1, 1)") {
  auto [da, db] = fb_grad(1.0, 1.0, 1.0);
  CHECK(da == doctest::Approx(-0.5));
  CHECK(db == doctest::Approx(-0.5));
}

TEST_CASE("layouts are square for every scheme and built-in") {
  for (const char* name : {"ex_toy", "ex_linear"}) {
    Registry reg = Registry::with_builtins();
    const ProblemSpec& spec = reg.get(name);
    for (Scheme s : kAllSchemes) {
      IterateLayout l = IterateLayout::make(s, spec);
      int expected = spec.n + spec.m + spec.q + spec.p + spec.m + families(s) * spec.q;
      CHECK(l.size == expected);
      Vector zeta = Vector::Constant(l.size, 0.5);
      Vector r = residual(s, 1e-3, 1e-3, spec, zeta);
      CHECK(r.size() == l.size);
      Matrix J = jacobian(s, 1e-3, 1e-3, spec, zeta);
      CHECK(J.rows() == l.size);
      CHECK(J.cols() == l.size);
    }
  }
}

TEST_CASE("big_phi multiplier partials reproduce the phi rows") {
  Registry reg = Registry::with_builtins();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.05, 1.5);
  for (const char* name : {"ex_toy", "ex_linear"}) {
    const ProblemSpec& spec = reg.get(name);
    for (Scheme s : kAllSchemes) {
      for (int trial = 0; trial < 20; ++trial) {
        Vector x = vec1(unif(rng)), y = vec1(unif(rng));
        Vector u(spec.q), gamma(spec.q), mu(spec.q), delta(spec.q);
        for (int i = 0; i < spec.q; ++i) {
          u(i) = unif(rng);
          gamma(i) = unif(rng);
          mu(i) = unif(rng);
          delta(i) = unif(rng);
        }
        double t = 0.1 + unif(rng);
        BigPhiEval bp = big_phi(s, t, spec, x, y, u, gamma, mu, delta);
        for (int i = 0; i < spec.q; ++i) {
          Vector rows = phi(s, t, i, spec, x, y, u);
          CHECK(bp.d_dgamma(i) == doctest::Approx(rows(0)).epsilon(1e-12));
          if (has_mu(s)) {
            CHECK(bp.d_dmu(i) == doctest::Approx(rows(1)).epsilon(1e-12));
            CHECK(bp.d_ddelta(i) == doctest::Approx(rows(2)).epsilon(1e-12));
          } else {
            CHECK(bp.d_ddelta(i) == doctest::Approx(rows(1)).epsilon(1e-12));
          }
        }
      }
    }
  }
}

TEST_CASE("big_phi scholtes partial examples") {
  ProblemSpec spec = builtin_ex_linear();
  Vector x = vec1(0.4), y = vec1(0.3), u = vec1(0.7);
  Vector gamma = vec1(0.5), mu = vec1(0.25), delta = vec1(0.8);
  double t = 0.2;
  BigPhiEval bp = big_phi(Scheme::S, t, spec, x, y, u, gamma, mu, delta);
  double g = 0.3 - 1.0;
  CHECK(bp.d_dgamma(0) == doctest::Approx(g));
  CHECK(bp.d_ddelta(0) == doctest::Approx(-(u(0) * g + t)));
  // zero multipliers: Phi and its (x,y,u) partials vanish
  BigPhiEval zero = big_phi(Scheme::S, t, spec, x, y, u, Vector::Zero(1),
                            Vector::Zero(1), Vector::Zero(1));
  CHECK(zero.value(0) == doctest::Approx(0.0));
  CHECK(zero.d_dx(0, 0) == doctest::Approx(0.0));
  CHECK(zero.d_dy(0, 0) == doctest::Approx(0.0));
  CHECK(zero.d_du(0) == doctest::Approx(0.0));
}

TEST_CASE("LF delta partial equals the corrected constraint row") {
  ProblemSpec spec = builtin_ex_linear();
  Vector x = vec1(0.4), y = vec1(0.3), u = vec1(0.7);
  double t = 0.2;
  BigPhiEval bp = big_phi(Scheme::LF, t, spec, x, y, u, vec1(0.5), Vector::Zero(1),
                          vec1(0.8));
  double g = -0.7;
  CHECK(bp.d_ddelta(0) == doctest::Approx(-(u(0) + t) * (-g + t) + t * t));
  CHECK(bp.d_dgamma(0) == doctest::Approx(-(u(0) * g + t * t)));
}

TEST_CASE("residual block 4 on ex_linear is -x + u1") {
  ProblemSpec spec = builtin_ex_linear();
  IterateLayout l = IterateLayout::make(Scheme::S, spec);
  Vector zeta = Vector::Constant(l.size, 0.3);
  zeta(l.x_off) = 0.25;
  zeta(l.u_off) = 0.6;
  Vector r = residual(Scheme::S, 1e-3, 1e-3, spec, zeta);
  int block4 = l.n + l.m + l.q;  // offset of the L rows
  CHECK(r(block4) == doctest::Approx(-0.25 + 0.6));
  zeta(l.u_off) = 0.25;
  r = residual(Scheme::S, 1e-3, 1e-3, spec, zeta);
  CHECK(r(block4) == doctest::Approx(0.0));
}

TEST_CASE("a constant problem admits an exact root of the full system") {
  // objectives and constraint gradients all vanish, so blocks 1-4 are zero
  // for any multipliers; picking the FB roots zeroes the rest
  ProblemSpec spec = parse_problem_text(R"pb(name = "flat"
n = 1
m = 1
p = 1
q = 1
F = "0"
G = ["0*x1 - 1"]
f = "0*y1"
g = ["0*y1 - 1"]

[start_box]
x = [[0.0, 1.0]]
y = [[0.0, 1.0]]
)pb", "<flat>");
  const double t = 0.4, eps = 1e-3;
  IterateLayout l = IterateLayout::make(Scheme::S, spec);
  Vector zeta = Vector::Zero(l.size);
  zeta(l.x_off) = 0.3;
  zeta(l.y_off) = 0.7;
  zeta(l.u_off) = t / 2;                 // makes mu = delta balance block 3
  zeta(l.alpha_off) = eps;               // fb(alpha, 1) = 0
  zeta(l.beta_off) = 0.9;                // arbitrary: all its coefficients vanish
  zeta(l.gamma_off) = eps;               // fb(gamma, -g) with g = -1
  zeta(l.mu_off) = eps / (t / 2);        // fb(mu, u)
  zeta(l.delta_off) = eps / (t / 2);     // fb(delta, u + t*... ) = fb(delta, t - u*1)
  Vector r = residual(Scheme::S, t, eps, spec, zeta);
  CHECK(r.head(l.n + 2 * l.m + l.q).lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
  CHECK(r.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("non-finite iterates are rejected") {
  ProblemSpec spec = builtin_ex_linear();
  IterateLayout l = IterateLayout::make(Scheme::S, spec);
  Vector zeta = Vector::Constant(l.size, 0.3);
  zeta(2) = std::nan("");
  CHECK_THROWS_AS(residual(Scheme::S, 1e-3, 1e-3, spec, zeta), std::invalid_argument);
  CHECK_THROWS_AS(residual(Scheme::S, 0.0, 1e-3, spec, Vector::Constant(l.size, 0.3)),
                  std::invalid_argument);
}

TEST_CASE("jacobian matches central finite differences of the residual") {
  Registry reg = Registry::with_builtins();
  std::mt19937_64 rng(11);
  const double t = 0.05, eps = 1e-3;
  for (const char* name : {"ex_toy", "ex_linear"}) {
    const ProblemSpec& spec = reg.get(name);
    for (Scheme s : kAllSchemes) {
      IterateLayout l = IterateLayout::make(s, spec);
      int tested = 0;
      while (tested < 5) {
        Vector zeta = random_iterate(l, spec, rng);
        if (seam_margin(s, t, spec, l, zeta) < 1e-3) continue;
        Matrix J = jacobian(s, t, eps, spec, zeta);
        Matrix Jfd(l.size, l.size);
        for (int c = 0; c < l.size; ++c) {
          double h = 1e-6 * std::max(1.0, std::abs(zeta(c)));
          Vector zp = zeta, zm = zeta;
          zp(c) += h;
          zm(c) -= h;
          Jfd.col(c) = (residual(s, t, eps, spec, zp) - residual(s, t, eps, spec, zm)) /
                       (2 * h);
        }
        double max_err = 0.0;
        for (int r = 0; r < l.size; ++r)
          for (int c = 0; c < l.size; ++c)
            max_err = std::max(max_err, std::abs(J(r, c) - Jfd(r, c)) /
                                            std::max(1.0, std::abs(J(r, c))));
        CAPTURE(name);
        CAPTURE(scheme_tag(s));
        CHECK(max_err < 1e-5);
        ++tested;
      }
    }
  }
}

TEST_CASE("u-equation jacobian entry for scholtes at zero multipliers") {
  // block (3) row i differentiated by delta_i gives -d(row3)/du = g_i
  ProblemSpec spec = builtin_ex_linear();
  IterateLayout l = IterateLayout::make(Scheme::S, spec);
  Vector zeta = Vector::Zero(l.size);
  zeta(l.x_off) = 0.5;
  zeta(l.y_off) = 0.25;
  zeta(l.u_off) = 0.4;
  Matrix J = jacobian(Scheme::S, 0.1, 1e-3, spec, zeta);
  int urow = l.n + l.m;  // first u-equation row
  double g = 0.25 - 1.0;
  CHECK(J(urow, l.delta_off) == doctest::Approx(g));
}

TEST_SUITE_END();
