#include "pessirelax/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <thread>

namespace pessirelax {

namespace {

std::string fmt(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

RunRecord one_run(const ProblemSpec& spec, Scheme s, uint64_t seed,
                  const SolveOptions& base) {
  RunRecord rec;
  rec.problem = spec.name;
  rec.scheme = s;
  rec.seed = seed;
  SolveOptions opts = base;
  opts.seed = seed;
  try {
    Vector z0 = default_start(spec, s, seed);
    SolveReport rep = run(spec, s, z0, opts);
    rec.outer_iters = rep.outer_iterations;
    rec.inner_iters = rep.total_inner_iterations;
    rec.wall_time_s = rep.wall_time_s;
    rec.final_residual = rep.final_residual_norm;
    rec.termination = to_string(rep.termination);
    RunAssessment a = assess_run(spec, s, rep);
    rec.feasible = a.feas.feasible;
    rec.flavor = a.certificate.flavor;
    rec.accuracy = a.accuracy;
    rec.eoc = a.eoc;
  } catch (const std::exception& err) {
    rec.feasible = false;
    rec.flavor = Flavor::None;
    rec.termination = std::string("error: ") + err.what();
  }
  return rec;
}

}  // namespace

std::vector<RunRecord> run_suite(const std::vector<ProblemSpec>& problems,
                                 const std::vector<Scheme>& schemes,
                                 const std::vector<uint64_t>& seeds,
                                 const BenchOptions& opts) {
  struct Task {
    const ProblemSpec* spec;
    Scheme scheme;
    uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const ProblemSpec& spec : problems)
    for (Scheme s : schemes)
      for (uint64_t seed : seeds) tasks.push_back({&spec, s, seed});

  std::vector<RunRecord> records(tasks.size());
  int jobs = std::max(1, opts.jobs);
  if (jobs == 1) {
    for (size_t i = 0; i < tasks.size(); ++i)
      records[i] = one_run(*tasks[i].spec, tasks[i].scheme, tasks[i].seed, opts.solve);
    return records;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        records[i] = one_run(*tasks[i].spec, tasks[i].scheme, tasks[i].seed, opts.solve);
      }
    });
  for (auto& th : workers) th.join();
  return records;
}

std::optional<Measure> parse_measure(const std::string& name) {
  if (name == "time") return Measure::Time;
  if (name == "outer_iters" || name == "outer") return Measure::OuterIters;
  if (name == "inner_iters" || name == "inner") return Measure::InnerIters;
  return std::nullopt;
}

namespace {

struct RatioTable {
  std::vector<std::string> instances;
  std::vector<Scheme> solvers;
  Matrix ratio;  // solvers x instances, +inf for unsolved
};

RatioTable compute_ratios(const std::vector<RunRecord>& records, Measure measure) {
  if (records.empty())
    throw std::invalid_argument("perf_profile: empty record set");

  auto value_of = [&](const RunRecord& r) -> double {
    switch (measure) {
      case Measure::Time: return r.wall_time_s;
      case Measure::OuterIters: return static_cast<double>(r.outer_iters);
      case Measure::InnerIters: return static_cast<double>(r.inner_iters);
    }
    return 0.0;
  };

  // instances are (problem, seed); solvers are schemes
  RatioTable tab;
  for (const RunRecord& r : records) {
    std::string inst = r.problem + "#" + std::to_string(r.seed);
    if (std::find(tab.instances.begin(), tab.instances.end(), inst) ==
        tab.instances.end())
      tab.instances.push_back(inst);
    if (std::find(tab.solvers.begin(), tab.solvers.end(), r.scheme) == tab.solvers.end())
      tab.solvers.push_back(r.scheme);
  }

  const double inf = std::numeric_limits<double>::infinity();
  tab.ratio.resize(tab.solvers.size(), tab.instances.size());
  tab.ratio.setConstant(inf);
  for (size_t ii = 0; ii < tab.instances.size(); ++ii) {
    double best = inf;
    for (const RunRecord& r : records) {
      if (r.problem + "#" + std::to_string(r.seed) != tab.instances[ii]) continue;
      if (!r.feasible) continue;  // unsolved: keeps ratio at +inf
      best = std::min(best, value_of(r));
    }
    if (!(best < inf)) continue;  // no solver handled this instance
    for (const RunRecord& r : records) {
      if (r.problem + "#" + std::to_string(r.seed) != tab.instances[ii]) continue;
      if (!r.feasible) continue;
      size_t si =
          std::find(tab.solvers.begin(), tab.solvers.end(), r.scheme) - tab.solvers.begin();
      double denom = std::max(best, 1e-12);  // guard zero-cost instances
      tab.ratio(si, ii) = std::max(1.0, value_of(r) / denom);
    }
  }
  return tab;
}

double rho_at(const RatioTable& tab, size_t si, double T) {
  int count = 0;
  for (Eigen::Index ii = 0; ii < tab.ratio.cols(); ++ii)
    if (tab.ratio(si, ii) <= T) ++count;
  return static_cast<double>(count) / static_cast<double>(tab.instances.size());
}

}  // namespace

std::vector<ProfileCurve> perf_profile(const std::vector<RunRecord>& records,
                                       Measure measure) {
  RatioTable tab = compute_ratios(records, measure);

  // 64 log-spaced T values in [1, 100]
  std::vector<double> Ts;
  for (int k = 0; k < 64; ++k) Ts.push_back(std::pow(10.0, 2.0 * k / 63.0));

  std::vector<ProfileCurve> curves;
  for (size_t si = 0; si < tab.solvers.size(); ++si) {
    ProfileCurve c;
    c.solver = scheme_tag(tab.solvers[si]);
    for (double T : Ts) c.points.emplace_back(T, rho_at(tab, si, T));
    curves.push_back(std::move(c));
  }
  return curves;
}

double profile_rho(const std::vector<RunRecord>& records, Measure measure, Scheme s,
                   double T) {
  RatioTable tab = compute_ratios(records, measure);
  auto it = std::find(tab.solvers.begin(), tab.solvers.end(), s);
  if (it == tab.solvers.end())
    throw std::invalid_argument("profile_rho: scheme not present in the records");
  return rho_at(tab, static_cast<size_t>(it - tab.solvers.begin()), T);
}

std::string summary_markdown(const std::vector<RunRecord>& records) {
  if (records.empty()) return "(no records)\n";
  std::ostringstream out;
  out << "| Scheme | Average outer iter | Average time | Average inner iter "
         "| Average accuracy | C-stationarity | Feasibility (%) | EOC <= 1 | EOC > 1 |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  for (Scheme s : kAllSchemes) {
    long count = 0, c_stat = 0, feas = 0, eoc_lo = 0, eoc_hi = 0;
    double outer = 0, inner = 0, time = 0, acc = 0;
    long acc_count = 0;
    for (const RunRecord& r : records) {
      if (r.scheme != s) continue;
      ++count;
      outer += r.outer_iters;
      inner += static_cast<double>(r.inner_iters);
      time += r.wall_time_s;
      if (r.accuracy) { acc += *r.accuracy; ++acc_count; }
      if (r.flavor != Flavor::None) ++c_stat;
      if (r.feasible) ++feas;
      if (r.eoc) (*r.eoc <= 1.0 ? eoc_lo : eoc_hi) += 1;
    }
    if (count == 0) continue;
    auto avg = [&](double v) { return fmt(v / count); };
    out << "| " << scheme_name(s) << " | " << avg(outer) << " | " << avg(time) << " | "
        << avg(inner) << " | "
        << (acc_count ? fmt(acc / acc_count) : std::string("n/a")) << " | " << c_stat
        << " | " << fmt(100.0 * feas / count) << " | " << eoc_lo << " | " << eoc_hi
        << " |\n";
  }
  return out.str();
}

std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "problem,scheme,seed,outer_iters,inner_iters,wall_time_s,final_residual,"
         "feasible,flavor,accuracy,eoc\n";
  for (const RunRecord& r : records) {
    out << r.problem << ',' << scheme_tag(r.scheme) << ',' << r.seed << ','
        << r.outer_iters << ',' << r.inner_iters << ',' << fmt(r.wall_time_s) << ','
        << fmt(r.final_residual) << ',' << (r.feasible ? "true" : "false") << ','
        << to_string(r.flavor) << ',' << fmt_opt(r.accuracy) << ',' << fmt_opt(r.eoc)
        << '\n';
  }
  return out.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<RunRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("records_from_csv: empty input");
  const std::string expected =
      "problem,scheme,seed,outer_iters,inner_iters,wall_time_s,final_residual,"
      "feasible,flavor,accuracy,eoc";
  if (line != expected)
    throw std::invalid_argument("records_from_csv: unexpected header '" + line + "'");
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 11)
      throw std::invalid_argument("records_from_csv: bad row '" + line + "'");
    RunRecord r;
    r.problem = f[0];
    auto s = parse_scheme(f[1]);
    if (!s) throw std::invalid_argument("records_from_csv: unknown scheme '" + f[1] + "'");
    r.scheme = *s;
    r.seed = std::stoull(f[2]);
    r.outer_iters = std::stoi(f[3]);
    r.inner_iters = std::stol(f[4]);
    r.wall_time_s = std::stod(f[5]);
    r.final_residual = std::stod(f[6]);
    r.feasible = f[7] == "true";
    if (f[8] == "C") r.flavor = Flavor::C;
    else if (f[8] == "M") r.flavor = Flavor::M;
    else if (f[8] == "S") r.flavor = Flavor::S;
    else r.flavor = Flavor::None;
    if (!f[9].empty()) r.accuracy = std::stod(f[9]);
    if (!f[10].empty()) r.eoc = std::stod(f[10]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string profiles_to_csv(const std::vector<ProfileCurve>& curves) {
  std::ostringstream out;
  out << "solver,T,rho\n";
  for (const ProfileCurve& c : curves)
    for (const auto& [T, rho] : c.points)
      out << c.solver << ',' << fmt(T) << ',' << fmt(rho) << '\n';
  return out.str();
}

}  // namespace pessirelax
