#include <doctest.h>

#include <cmath>
#include <random>

#include "pessirelax/relax.hpp"

using namespace pessirelax;

namespace {

Vector vec1(double a) {
  Vector v(1);
  v << a;
  return v;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("relax");

TEST_CASE("family counts per scheme") {
  CHECK(families(Scheme::S) == 3);
  CHECK(families(Scheme::LF) == 2);
  CHECK(families(Scheme::KDB) == 3);
  CHECK(families(Scheme::SU) == 3);
  CHECK(families(Scheme::KS) == 3);
  CHECK(has_mu(Scheme::S));
  CHECK_FALSE(has_mu(Scheme::LF));
}

TEST_CASE("scheme tags round trip") {
  for (Scheme s : kAllSchemes) {
    auto back = parse_scheme(scheme_tag(s));
    REQUIRE(back.has_value());
    CHECK(*back == s);
  }
  CHECK(parse_scheme("scholtes") == Scheme::S);
  CHECK_FALSE(parse_scheme("nope").has_value());
}

TEST_CASE("scholtes rows at a boundary point") {
  // u = 1, g = -0.5, t = 0.5: third row -(1)(-0.5) - 0.5 = 0
  PhiRows rows = phi_rows(Scheme::S, 0.5, -0.5, 1.0);
  CHECK(rows.r(0) == doctest::Approx(-0.5));
  CHECK(rows.r(1) == doctest::Approx(-1.0));
  CHECK(rows.r(2) == doctest::Approx(0.0));
}

TEST_CASE("KS third row positive outside the relaxed set") {
  // u = 2, g = -2, t = 1: u - g = 4 >= 2t, row = (u-t)(-g-t) = 1 > 0
  PhiRows rows = phi_rows(Scheme::KS, 1.0, -2.0, 2.0);
  CHECK(rows.r(2) == doctest::Approx(1.0));
}

TEST_CASE("KDB membership matches the branch description at x = 0.75") {
  ProblemSpec spec = builtin_ex_toy();
  const double t = 0.25, x = 0.75;
  // (y, u1) = (0, 0.75) with u2 = u1 - x = 0: inside x-t <= u1 <= x+t, -t <= y <= t
  CHECK(member_Dt(Scheme::KDB, t, spec, vec1(x), vec1(0.0), vec2(0.75, 0.0), 1e-9));
  // outside the u1 band
  CHECK_FALSE(member_Dt(Scheme::KDB, t, spec, vec1(x), vec1(0.0), vec2(0.45, -0.3), 1e-9));
  // outside the y band
  CHECK_FALSE(member_Dt(Scheme::KDB, t, spec, vec1(x), vec1(0.4), vec2(0.75, 0.0), 1e-9));
}

TEST_CASE("KDB membership at x = 0 matches the known branch form") {
  ProblemSpec spec = builtin_ex_toy();
  // -t <= u1 < t and t <= y <= 1-t branch with t = 0.5
  CHECK(member_Dt(Scheme::KDB, 0.5, spec, vec1(0.0), vec1(0.5), vec2(0.2, 0.2), 1e-9));
  // a point of D(0) with y = 0 is not in the KDB set at t = 1/2
  CHECK(member_D(spec, vec1(0.0), vec1(0.0), vec2(0.0, 0.0), 1e-9));
  CHECK_FALSE(member_Dt(Scheme::KDB, 0.5, spec, vec1(0.0), vec1(0.0), vec2(0.0, 0.0), 1e-9));
}

TEST_CASE("membership in D for the linear example") {
  ProblemSpec spec = builtin_ex_linear();
  CHECK(member_D(spec, vec1(0.5), vec1(1.0), vec1(0.5), 1e-9));
  CHECK(member_D(spec, vec1(0.0), vec1(0.3), vec1(0.0), 1e-9));
  // complementarity violated: u*(y-1) = -0.05
  CHECK_FALSE(member_D(spec, vec1(0.5), vec1(0.9), vec1(0.5), 1e-9));
}

TEST_CASE("every member of D lies in the Scholtes relaxation for all t") {
  ProblemSpec spec = builtin_ex_linear();
  for (double t : {1e-3, 0.1, 0.5, 2.0}) {
    CHECK(member_Dt(Scheme::S, t, spec, vec1(0.5), vec1(1.0), vec1(0.5), 1e-9));
    CHECK(member_Dt(Scheme::S, t, spec, vec1(0.0), vec1(0.3), vec1(0.0), 1e-9));
  }
}

TEST_CASE("t <= 0 is rejected") {
  ProblemSpec spec = builtin_ex_toy();
  CHECK_THROWS_AS(phi(Scheme::S, 0.0, 0, spec, vec1(0.5), vec1(0.5), vec2(0, 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(phi_rows(Scheme::KS, -1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("index sets on the linear example") {
  ProblemSpec spec = builtin_ex_linear();
  IndexPartition part = index_sets(spec, vec1(0.5), vec1(1.0), vec1(0.5), 1e-6);
  CHECK(part.nu == std::vector<int>{0});
  CHECK(part.eta.empty());
  CHECK(part.theta.empty());
  CHECK(part.unclassified.empty());

  part = index_sets(spec, vec1(0.0), vec1(0.3), vec1(0.0), 1e-6);
  CHECK(part.eta == std::vector<int>{0});

  part = index_sets(spec, vec1(0.0), vec1(1.0), vec1(0.0), 1e-6);
  CHECK(part.theta == std::vector<int>{0});
}

TEST_CASE("complementarity violations are reported") {
  ProblemSpec spec = builtin_ex_linear();
  IndexPartition part = index_sets(spec, vec1(0.5), vec1(0.5), vec1(0.4), 1e-6);
  CHECK(part.unclassified == std::vector<int>{0});
}

TEST_CASE("phi_grad matches finite differences away from branch seams") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (Scheme s : kAllSchemes) {
    for (double t : {0.1, 0.37}) {
      int tested = 0;
      while (tested < 50) {
        double g = unif(rng), u = unif(rng) + 1.0;
        // keep a margin from the SU / KS seams
        if (s == Scheme::SU && std::abs(std::abs(u + g) - t) < 1e-3) continue;
        if (s == Scheme::KS && std::abs(u - g - 2 * t) < 1e-3) continue;
        PhiRows rows = phi_rows(s, t, g, u);
        const double h = 1e-6;
        PhiRows gp = phi_rows(s, t, g + h, u), gm = phi_rows(s, t, g - h, u);
        PhiRows up = phi_rows(s, t, g, u + h), um = phi_rows(s, t, g, u - h);
        for (int k = 0; k < families(s); ++k) {
          double fd_g = (gp.r(k) - gm.r(k)) / (2 * h);
          double fd_u = (up.r(k) - um.r(k)) / (2 * h);
          CHECK(rows.r_g(k) ==
                doctest::Approx(fd_g).epsilon(1e-6).scale(std::max(1.0, std::abs(fd_g))));
          CHECK(rows.r_u(k) ==
                doctest::Approx(fd_u).epsilon(1e-6).scale(std::max(1.0, std::abs(fd_u))));
          // second partials against differences of first partials
          CHECK(rows.r_gg(k) == doctest::Approx((gp.r_g(k) - gm.r_g(k)) / (2 * h)).epsilon(1e-5));
          CHECK(rows.r_gu(k) == doctest::Approx((up.r_g(k) - um.r_g(k)) / (2 * h)).epsilon(1e-5));
          CHECK(rows.r_uu(k) == doctest::Approx((up.r_u(k) - um.r_u(k)) / (2 * h)).epsilon(1e-5));
        }
        ++tested;
      }
    }
  }
}

TEST_CASE("phi_grad chains through g for the toy problem") {
  ProblemSpec spec = builtin_ex_toy();
  // row 3 of S: d/du = -g, d/dy = -u * grad_y g
  PhiGrad pg = phi_grad(Scheme::S, 0.5, 0, spec, vec1(0.3), vec1(0.4), vec2(0.7, 0.1));
  // g_1 = -y: value -0.4, grad_y = -1
  CHECK(pg.d_du(2) == doctest::Approx(0.4));
  CHECK(pg.d_dy(2, 0) == doctest::Approx(0.7));
  CHECK(pg.d_dx(2, 0) == doctest::Approx(0.0));
}

TEST_CASE("SU regularization satisfies the edge conditions") {
  CHECK(su_theta(1.0) == doctest::Approx(1.0));
  CHECK(su_theta(-1.0) == doctest::Approx(1.0));
  CHECK(su_theta_prime(1.0) == doctest::Approx(1.0));
  CHECK(su_theta_prime(-1.0) == doctest::Approx(-1.0));
  CHECK(su_theta_second(1.0) == doctest::Approx(0.0));
  CHECK(su_theta_second(-1.0) == doctest::Approx(0.0));
  for (double z = -0.95; z < 1.0; z += 0.05) {
    CHECK(su_theta_second(z) > 0.0);
    CHECK(su_theta(z) > std::abs(z));
  }
}

TEST_CASE("SU and KS rows are continuous across branch seams") {
  const double t = 0.3;
  for (double u : {0.05, 0.2, 0.6}) {
    // SU seam at u + g = t
    double g = t - u;
    PhiRows lo = phi_rows(Scheme::SU, t, g - 1e-12, u);
    PhiRows hi = phi_rows(Scheme::SU, t, g + 1e-12, u);
    CHECK(lo.r(2) == doctest::Approx(hi.r(2)).epsilon(1e-9));
    CHECK(lo.r_g(2) == doctest::Approx(hi.r_g(2)).epsilon(1e-7));
    CHECK(lo.r_u(2) == doctest::Approx(hi.r_u(2)).epsilon(1e-7));
    // KS seam at u - g = 2t
    g = u - 2 * t;
    lo = phi_rows(Scheme::KS, t, g - 1e-12, u);
    hi = phi_rows(Scheme::KS, t, g + 1e-12, u);
    CHECK(lo.r(2) == doctest::Approx(hi.r(2)).epsilon(1e-9));
    CHECK(lo.r_g(2) == doctest::Approx(hi.r_g(2)).epsilon(1e-7));
    CHECK(lo.r_u(2) == doctest::Approx(hi.r_u(2)).epsilon(1e-7));
  }
}

namespace {

// Grid scan of (y, u1, u2) over [0,1]^3; the predicate carries the problem.
template <typename Pred>
std::vector<Vector> toy_grid_members(double step, const Pred& pred) {
  std::vector<Vector> pts;
  int ny = static_cast<int>(std::lround(1.0 / step));
  for (int iy = 0; iy <= ny; ++iy)
    for (int i1 = 0; i1 <= ny; ++i1)
      for (int i2 = 0; i2 <= ny; ++i2) {
        Vector y = vec1(iy * step);
        Vector u = vec2(i1 * step, i2 * step);
        if (pred(y, u)) {
          Vector pt(3);
          pt << y(0), u(0), u(1);
          pts.push_back(pt);
        }
      }
  return pts;
}

}  // namespace

TEST_CASE("monotonicity of S, SU, KS relaxations on sampled grids") {
  ProblemSpec spec = builtin_ex_toy();
  const double step = 0.05, tol = 1e-9;
  const double ts[] = {0.1, 0.25, 0.5};
  for (Scheme s : {Scheme::S, Scheme::SU, Scheme::KS}) {
    for (double x : {0.0, 0.5}) {
      for (int a = 0; a + 1 < 3; ++a) {
        auto small = toy_grid_members(step, [&](const Vector& y, const Vector& u) {
          return member_Dt(s, ts[a], spec, vec1(x), y, u, tol);
        });
        int violations = 0;
        for (const Vector& pt : small)
          if (!member_Dt(s, ts[a + 1], spec, vec1(x), vec1(pt(0)), vec2(pt(1), pt(2)), tol))
            ++violations;
        CHECK(violations == 0);
      }
    }
  }
}

TEST_CASE("inclusion of D in the relaxed sets on sampled grids") {
  ProblemSpec spec = builtin_ex_toy();
  const double step = 0.05, tol = 1e-9;
  for (double x : {0.0, 0.5}) {
    auto base = toy_grid_members(step, [&](const Vector& y, const Vector& u) {
      return member_D(spec, vec1(x), y, u, tol);
    });
    CHECK(!base.empty());
    for (Scheme s : {Scheme::S, Scheme::LF, Scheme::SU, Scheme::KS}) {
      for (double t : {0.1, 0.25, 0.5}) {
        int violations = 0;
        for (const Vector& pt : base)
          if (!member_Dt(s, t, spec, vec1(x), vec1(pt(0)), vec2(pt(1), pt(2)), tol))
            ++violations;
        CHECK(violations == 0);
      }
    }
  }
}

TEST_CASE("KDB is not monotone: a known counterexample on the grid") {
  ProblemSpec spec = builtin_ex_toy();
  const double tol = 1e-9;
  // (y, u1, u2) = (0.25, 0, 0) is in the t = 1/4 set but not the t = 1/2 set
  bool found = false;
  auto small = toy_grid_members(0.25, [&](const Vector& y, const Vector& u) {
    return member_Dt(Scheme::KDB, 0.25, spec, vec1(0.0), y, u, tol);
  });
  for (const Vector& pt : small)
    if (!member_Dt(Scheme::KDB, 0.5, spec, vec1(0.0), vec1(pt(0)), vec2(pt(1), pt(2)), tol))
      found = true;
  CHECK(found);
}

TEST_CASE("LF monotonicity diagnostics are recorded without asserting") {
  // Whether LF relaxed sets nest in t is an open question; record a count only.
  ProblemSpec spec = builtin_ex_toy();
  const double step = 0.1, tol = 1e-9;
  int violations = 0, members = 0;
  auto small = toy_grid_members(step, [&](const Vector& y, const Vector& u) {
    return member_Dt(Scheme::LF, 0.1, spec, vec1(0.5), y, u, tol);
  });
  for (const Vector& pt : small) {
    ++members;
    if (!member_Dt(Scheme::LF, 0.25, spec, vec1(0.5), vec1(pt(0)), vec2(pt(1), pt(2)), tol))
      ++violations;
  }
  MESSAGE("LF monotonicity diagnostic: ", violations, " violations over ", members,
          " sampled members");
  CHECK(members >= 0);  // diagnostic only
}

TEST_CASE("index partition covers every classifiable member of D") {
  ProblemSpec spec = builtin_ex_toy();
  const double tol = 1e-6;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_real_distribution<double> fuzz(-0.5e-6, 0.5e-6);
  int covered = 0;
  for (int trial = 0; trial < 500; ++trial) {
    // draw from the two member families of D for ex_toy, plus tolerance fuzz:
    //   (x, y=0, u=(x,0)) for x in [0,1], and (x=0, y, u=(0,0))
    Vector x, y, u;
    if (trial % 2 == 0) {
      double xv = unif(rng);
      x = vec1(xv);
      y = vec1(std::abs(fuzz(rng)));
      u = vec2(xv + fuzz(rng), std::abs(fuzz(rng)));
    } else {
      x = vec1(0.0);
      y = vec1(unif(rng));
      u = vec2(std::abs(fuzz(rng)), std::abs(fuzz(rng)));
    }
    if (!member_D(spec, x, y, u, tol)) continue;
    IndexPartition part = index_sets(spec, x, y, u, tol);
    CHECK(part.unclassified.empty());
    CHECK(part.eta.size() + part.theta.size() + part.nu.size() == 2);
    std::vector<bool> seen(2, false);
    for (int i : part.eta) seen[i] = !seen[i];
    for (int i : part.theta) seen[i] = !seen[i];
    for (int i : part.nu) seen[i] = !seen[i];
    CHECK((seen[0] && seen[1]));
    ++covered;
  }
  CHECK(covered > 50);
}

TEST_SUITE_END();
