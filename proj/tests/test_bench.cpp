#include <doctest.h>

#include <cmath>

#include "pessirelax/bench.hpp"

using namespace pessirelax;

namespace {

RunRecord make_record(const std::string& problem, Scheme s, uint64_t seed, double time,
                      bool feasible) {
  RunRecord r;
  r.problem = problem;
  r.scheme = s;
  r.seed = seed;
  r.outer_iters = 2;
  r.inner_iters = 10;
  r.wall_time_s = time;
  r.final_residual = 1e-8;
  r.feasible = feasible;
  r.flavor = Flavor::None;
  r.termination = "converged";
  return r;
}

}  // namespace

TEST_SUITE_BEGIN("bench");

TEST_CASE("suite cardinality and determinism") {
  std::vector<ProblemSpec> problems = {builtin_ex_toy(), builtin_ex_linear()};
  std::vector<Scheme> schemes = {Scheme::S, Scheme::KDB};
  std::vector<uint64_t> seeds = {0, 1, 2};
  BenchOptions opts;
  auto a = run_suite(problems, schemes, seeds, opts);
  CHECK(a.size() == 12);
  auto b = run_suite(problems, schemes, seeds, opts);
  REQUIRE(b.size() == a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].problem == b[i].problem);
    CHECK(a[i].scheme == b[i].scheme);
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].outer_iters == b[i].outer_iters);
    CHECK(a[i].inner_iters == b[i].inner_iters);
    CHECK(a[i].final_residual == b[i].final_residual);
    CHECK(a[i].feasible == b[i].feasible);
    CHECK(a[i].flavor == b[i].flavor);
    CHECK(a[i].accuracy == b[i].accuracy);
    CHECK(a[i].eoc == b[i].eoc);
    // wall_time_s is expected to differ between repeats
  }
  // order is keyed by (problem, scheme, seed) construction order
  CHECK(a[0].problem == "ex_toy");
  CHECK(a[0].scheme == Scheme::S);
  CHECK(a[0].seed == 0);
  CHECK(a[3].scheme == Scheme::KDB);
}

TEST_CASE("parallel suite matches the serial one") {
  std::vector<ProblemSpec> problems = {builtin_ex_linear()};
  std::vector<Scheme> schemes = {Scheme::S, Scheme::SU};
  std::vector<uint64_t> seeds = {0, 1, 2, 3};
  BenchOptions serial;
  BenchOptions parallel;
  parallel.jobs = 4;
  auto a = run_suite(problems, schemes, seeds, serial);
  auto b = run_suite(problems, schemes, seeds, parallel);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].problem == b[i].problem);
    CHECK(a[i].scheme == b[i].scheme);
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].final_residual == b[i].final_residual);
    CHECK(a[i].feasible == b[i].feasible);
  }
}

TEST_CASE("the two-solver toy profile example") {
  std::vector<RunRecord> records = {make_record("pb", Scheme::S, 0, 2.0, true),
                                    make_record("pb", Scheme::LF, 0, 1.0, true)};
  CHECK(profile_rho(records, Measure::Time, Scheme::LF, 1.0) == doctest::Approx(1.0));
  CHECK(profile_rho(records, Measure::Time, Scheme::S, 1.0) == doctest::Approx(0.0));
  CHECK(profile_rho(records, Measure::Time, Scheme::S, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("profile curves are nondecreasing in [0, 1] and someone wins") {
  std::vector<RunRecord> records;
  uint64_t seed = 0;
  for (const char* pb : {"a", "b", "c"}) {
    records.push_back(make_record(pb, Scheme::S, seed, 1.0 + seed * 0.3, true));
    records.push_back(make_record(pb, Scheme::KDB, seed, 2.0 - seed * 0.4, true));
    records.push_back(make_record(pb, Scheme::KS, seed, 5.0, seed != 1));
    ++seed;
  }
  auto curves = perf_profile(records, Measure::Time);
  double best_at_1 = 0.0;
  for (const ProfileCurve& c : curves) {
    double prev = -1.0;
    for (const auto& [T, rho] : c.points) {
      CHECK(rho >= prev);
      CHECK(rho >= 0.0);
      CHECK(rho <= 1.0);
      prev = rho;
    }
    CHECK(c.points.front().first == doctest::Approx(1.0));
    best_at_1 = std::max(best_at_1, c.points.front().second);
  }
  CHECK(best_at_1 > 0.0);
}

TEST_CASE("a failing solver never reaches rho = 1 on finite T") {
  std::vector<RunRecord> records = {make_record("pb", Scheme::S, 0, 1.0, true),
                                    make_record("pb", Scheme::LF, 0, 0.5, false),
                                    make_record("pb2", Scheme::S, 0, 1.0, true),
                                    make_record("pb2", Scheme::LF, 0, 0.5, true)};
  CHECK(profile_rho(records, Measure::Time, Scheme::LF, 1e6) == doctest::Approx(0.5));
  CHECK(profile_rho(records, Measure::Time, Scheme::S, 1e6) == doctest::Approx(1.0));
}

TEST_CASE("single solver is its own best") {
  std::vector<RunRecord> records = {make_record("pb", Scheme::S, 0, 3.0, true),
                                    make_record("pb2", Scheme::S, 1, 0.5, true)};
  auto curves = perf_profile(records, Measure::Time);
  REQUIRE(curves.size() == 1);
  for (const auto& [T, rho] : curves[0].points) CHECK(rho == doctest::Approx(1.0));
}

TEST_CASE("empty record sets are rejected") {
  CHECK_THROWS_AS(perf_profile({}, Measure::Time), std::invalid_argument);
}

TEST_CASE("summary table semantics") {
  std::vector<RunRecord> records;
  RunRecord r1 = make_record("pb", Scheme::S, 0, 1.0, true);
  r1.eoc = 0.9;
  RunRecord r2 = make_record("pb", Scheme::S, 1, 1.0, true);
  r2.eoc = 1.0;
  RunRecord r3 = make_record("pb", Scheme::S, 2, 1.0, true);
  r3.eoc = 1.3;
  r3.flavor = Flavor::C;
  records = {r1, r2, r3};
  std::string md = summary_markdown(records);
  CHECK(md.find("| Scholtes |") != std::string::npos);
  CHECK(md.find("Feasibility") != std::string::npos);
  // feasibility 100%, EOC buckets 2 and 1, one C certificate
  CHECK(md.find("| 100 |") != std::string::npos);
  CHECK(md.find("| 2 | 1 |") != std::string::npos);
  CHECK(md.find("| 1 | 100 |") != std::string::npos);
  // no accuracy references: column reads n/a
  CHECK(md.find("n/a") != std::string::npos);
}

TEST_CASE("summary aggregates are permutation invariant") {
  std::vector<RunRecord> records;
  for (uint64_t s = 0; s < 6; ++s) {
    RunRecord r = make_record("pb", s % 2 ? Scheme::S : Scheme::KS, s, 1.0 + s, s != 3);
    r.eoc = 0.5 + 0.2 * s;
    r.accuracy = 0.1 * s;
    records.push_back(r);
  }
  std::string a = summary_markdown(records);
  std::reverse(records.begin(), records.end());
  std::string b = summary_markdown(records);
  CHECK(a == b);
}

TEST_CASE("records CSV round trip") {
  std::vector<ProblemSpec> problems = {builtin_ex_linear()};
  std::vector<Scheme> schemes = {Scheme::S};
  std::vector<uint64_t> seeds = {0, 1};
  auto records = run_suite(problems, schemes, seeds, {});
  std::string csv = records_to_csv(records);
  CHECK(csv.rfind("problem,scheme,seed,outer_iters,inner_iters,wall_time_s,"
                  "final_residual,feasible,flavor,accuracy,eoc\n",
                  0) == 0);
  auto back = records_from_csv(csv);
  REQUIRE(back.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].problem == records[i].problem);
    CHECK(back[i].scheme == records[i].scheme);
    CHECK(back[i].seed == records[i].seed);
    CHECK(back[i].outer_iters == records[i].outer_iters);
    CHECK(back[i].inner_iters == records[i].inner_iters);
    CHECK(back[i].wall_time_s == records[i].wall_time_s);  // shortest round trip
    CHECK(back[i].final_residual == records[i].final_residual);
    CHECK(back[i].feasible == records[i].feasible);
    CHECK(back[i].flavor == records[i].flavor);
    CHECK(back[i].accuracy == records[i].accuracy);
    CHECK(back[i].eoc == records[i].eoc);
  }
}

TEST_CASE("profile CSV export") {
  std::vector<RunRecord> records = {make_record("pb", Scheme::S, 0, 2.0, true),
                                    make_record("pb", Scheme::LF, 0, 1.0, true)};
  auto curves = perf_profile(records, Measure::Time);
  std::string csv = profiles_to_csv(curves);
  CHECK(csv.rfind("solver,T,rho\n", 0) == 0);
  CHECK(csv.find("\nlf,1,1\n") != std::string::npos);
}

TEST_CASE("diverging runs are recorded, not propagated") {
  // sabotage: a problem whose expressions blow up away from the box
  ProblemSpec spec = parse_problem_text(R"pb(name = "wild"
n = 1
m = 1
p = 1
q = 1
F = "exp(x1*y1)"
G = ["-x1"]
f = "log(y1)"
g = ["y1 - 100"]

[start_box]
x = [[50.0, 60.0]]
y = [[50.0, 60.0]]
)pb", "<wild>");
  auto records = run_suite({spec}, {Scheme::S}, {0, 1}, {});
  CHECK(records.size() == 2);
  for (const RunRecord& r : records) {
    CHECK(r.flavor == Flavor::None);
    // feasible may be false; the run must simply be present with a verdict
    CHECK(!r.termination.empty());
  }
}

TEST_SUITE_END();
