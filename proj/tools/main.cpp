#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pessirelax/bench.hpp"
#include "pessirelax/setlab.hpp"

using namespace pessirelax;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNoConvergence = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// "--seeds N..M" or a comma list; "--seed N" is the singleton case
std::vector<uint64_t> parse_seeds(const std::string& text) {
  std::vector<uint64_t> out;
  auto dots = text.find("..");
  if (dots != std::string::npos) {
    uint64_t lo = std::stoull(text.substr(0, dots));
    uint64_t hi = std::stoull(text.substr(dots + 2));
    if (hi < lo) throw UsageError("bad seed range '" + text + "'");
    for (uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  for (const std::string& part : split(text, ','))
    out.push_back(std::stoull(part));
  return out;
}

Registry build_registry(const std::vector<std::string>& dirs) {
  Registry reg = Registry::with_builtins();
  if (const char* env = std::getenv("PESSIRELAX_PROBLEM_PATH")) {
    for (const std::string& dir : split(env, ':'))
      if (!dir.empty()) reg.add_directory(dir);
  }
  for (const std::string& dir : dirs) reg.add_directory(dir);
  return reg;
}

std::vector<Scheme> parse_schemes_arg(const std::string& arg) {
  if (arg == "all") return {kAllSchemes, kAllSchemes + 5};
  std::vector<Scheme> out;
  for (const std::string& part : split(arg, ',')) {
    auto s = parse_scheme(part);
    if (!s) throw UsageError("unknown scheme '" + part + "'");
    out.push_back(*s);
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << content;
}

std::string vec_str(const Vector& v) {
  std::string s = "(";
  char buf[40];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v(i));
    s += std::string(buf, res.ptr);
    if (i + 1 < v.size()) s += ", ";
  }
  return s + ")";
}

nlohmann::json report_json(const ProblemSpec& spec, Scheme s, uint64_t seed,
                           const SolveReport& rep, const RunAssessment& a) {
  nlohmann::json j;
  auto vec = [](const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  const IterateLayout& l = rep.layout;
  j["problem"] = spec.name;
  j["scheme"] = scheme_tag(s);
  j["seed"] = seed;
  j["termination"] = to_string(rep.termination);
  j["outer_iterations"] = rep.outer_iterations;
  j["inner_iterations"] = rep.total_inner_iterations;
  j["final_residual"] = rep.final_residual_norm;
  j["wall_time_s"] = rep.wall_time_s;
  j["point"]["x"] = vec(l.x(rep.zeta));
  j["point"]["y"] = vec(l.y(rep.zeta));
  j["point"]["u"] = vec(l.u(rep.zeta));
  j["feasible"] = a.feas.feasible;
  j["feasibility_violations"] = a.feas.violations;
  j["F_value"] = a.F_value;
  if (a.accuracy) j["accuracy"] = *a.accuracy;
  if (a.eoc) j["eoc"] = *a.eoc;
  j["certificate"] = nlohmann::json::parse(certificate_to_json(a.certificate));
  nlohmann::json stages = nlohmann::json::array();
  for (const StageRecord& st : rep.stages) {
    nlohmann::json sj;
    sj["t"] = st.t;
    sj["eps"] = st.eps;
    sj["initial_residual"] = st.initial_residual;
    sj["final_residual"] = st.final_residual;
    sj["inner_iterations"] = st.inner_iterations;
    sj["termination"] = to_string(st.termination);
    stages.push_back(sj);
  }
  j["stages"] = stages;
  return j;
}

void print_report(const ProblemSpec& spec, Scheme s, uint64_t seed,
                  const SolveReport& rep, const RunAssessment& a) {
  const IterateLayout& l = rep.layout;
  std::cout << "problem:          " << spec.name << "\n";
  std::cout << "scheme:           " << scheme_name(s) << "\n";
  std::cout << "seed:             " << seed << "\n";
  std::cout << "termination:      " << to_string(rep.termination) << "\n";
  std::cout << "outer iterations: " << rep.outer_iterations << "\n";
  std::cout << "inner iterations: " << rep.total_inner_iterations << "\n";
  std::cout << "final residual:   " << rep.final_residual_norm << "\n";
  std::cout << "x:                " << vec_str(l.x(rep.zeta)) << "\n";
  std::cout << "y:                " << vec_str(l.y(rep.zeta)) << "\n";
  std::cout << "u:                " << vec_str(l.u(rep.zeta)) << "\n";
  std::cout << "F(x, y):          " << a.F_value << "\n";
  std::cout << "feasible (1e-4):  " << (a.feas.feasible ? "yes" : "no");
  if (!a.feas.feasible) {
    std::cout << "  [";
    for (size_t i = 0; i < a.feas.violations.size(); ++i)
      std::cout << (i ? "; " : "") << a.feas.violations[i];
    std::cout << "]";
  }
  std::cout << "\n";
  std::cout << "stationarity:     " << to_string(a.certificate.flavor) << "\n";
  if (a.accuracy) std::cout << "accuracy:         " << *a.accuracy << "\n";
  if (a.eoc) std::cout << "eoc:              " << *a.eoc << "\n";
  std::cout << "stages (t, inner, residual):\n";
  for (const StageRecord& st : rep.stages)
    std::cout << "  " << st.t << "  " << st.inner_iterations << "  "
              << st.final_residual << "\n";
  // timing line kept separate so deterministic output is easy to compare
  std::cout << "wall_time_s:      " << rep.wall_time_s << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relaxation solver suite for pessimistic bilevel programs"};
  app.require_subcommand(1);

  // shared flags
  std::string problem_name, problem_dir, scheme_arg = "s", seeds_arg = "0";
  std::string out_path, format = "csv";
  SolveOptions sopts;
  std::vector<std::string> problem_dirs;

  auto add_problem_flags = [&](CLI::App* cmd, bool required) {
    auto* p = cmd->add_option("--problem", problem_name, "problem name or file path");
    cmd->add_option("--problem-dir", problem_dirs, "directory of .toml problems");
    if (required) p->required();
  };
  auto add_solver_flags = [&](CLI::App* cmd) {
    cmd->add_option("--scheme", scheme_arg, "s|lf|kdb|su|ks|all");
    cmd->add_option("--t0", sopts.t0, "initial relaxation parameter");
    cmd->add_option("--theta", sopts.theta_red, "t reduction factor in (0,1)");
    cmd->add_option("--epsilon", sopts.eps, "FB smoothing parameter");
    cmd->add_option("--tol", sopts.newton.residual_tol, "residual stopping tolerance");
    cmd->add_option("--outer-cap", sopts.outer_cap, "maximum outer iterations");
  };

  auto* solve_cmd = app.add_subcommand("solve", "run one relaxation solve");
  add_problem_flags(solve_cmd, true);
  add_solver_flags(solve_cmd);
  solve_cmd->add_option("--seed", seeds_arg, "seed for the random start");
  solve_cmd->add_option("--out", out_path, "write the report as JSON");

  auto* check_cmd = app.add_subcommand("check", "solve and print the verification detail");
  add_problem_flags(check_cmd, true);
  add_solver_flags(check_cmd);
  check_cmd->add_option("--seed", seeds_arg, "seed for the random start");
  check_cmd->add_option("--out", out_path, "write the certificate as JSON");

  int jobs = 1;
  std::vector<std::string> bench_problems;
  std::string summary_path;
  auto* bench_cmd = app.add_subcommand("bench", "multi-start suite over schemes");
  bench_cmd->add_option("--problem", bench_problems, "problem names (repeatable)");
  bench_cmd->add_option("--problem-dir", problem_dirs, "directory of .toml problems");
  add_solver_flags(bench_cmd);
  bench_cmd->add_option("--seeds", seeds_arg, "N..M range or comma list");
  bench_cmd->add_option("--jobs", jobs, "worker threads");
  bench_cmd->add_option("--out", out_path, "records CSV path");
  bench_cmd->add_option("--summary", summary_path, "markdown summary path");
  bench_cmd->add_option("--format", format, "csv|json for --out");

  std::string records_path, measure_arg = "time";
  auto* profile_cmd = app.add_subcommand("profile", "performance profiles from records");
  profile_cmd->add_option("--records", records_path, "records CSV from bench")->required();
  profile_cmd->add_option("--measure", measure_arg, "time|outer_iters|inner_iters");
  profile_cmd->add_option("--out", out_path, "profile CSV path");

  std::string set_arg = "d", x_arg = "0", box_arg;
  double t_arg = 0.1, step_arg = 1e-2, tol_arg = 1e-9;
  auto* sample_cmd = app.add_subcommand("sample", "grid-sample D(x) or its relaxation");
  add_problem_flags(sample_cmd, true);
  sample_cmd->add_option("--set", set_arg, "d|dt");
  sample_cmd->add_option("--scheme", scheme_arg, "s|lf|kdb|su|ks (for --set dt)");
  sample_cmd->add_option("--t", t_arg, "relaxation parameter (for --set dt)");
  sample_cmd->add_option("--x", x_arg, "comma-separated upper-level point");
  sample_cmd->add_option("--box", box_arg,
                         "lo:hi pairs for y then u, comma-separated "
                         "(default: the problem start box for y, [0,2] per u)");
  sample_cmd->add_option("--step", step_arg, "grid step");
  sample_cmd->add_option("--tol", tol_arg, "membership tolerance");
  sample_cmd->add_option("--out", out_path, "points CSV path");

  auto* problems_cmd = app.add_subcommand("problems", "list known problems");
  problems_cmd->add_option("--problem-dir", problem_dirs, "directory of .toml problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Registry reg = build_registry(problem_dirs);
    auto resolve = [&](const std::string& name) -> ProblemSpec {
      if (reg.contains(name)) return reg.get(name);
      if (std::filesystem::exists(name)) return load_problem(name);
      throw UsageError("unknown problem '" + name + "'");
    };

    if (*solve_cmd || *check_cmd) {
      ProblemSpec spec = resolve(problem_name);
      auto schemes = parse_schemes_arg(scheme_arg);
      if (schemes.size() != 1) throw UsageError("solve/check take a single scheme");
      auto seeds = parse_seeds(seeds_arg);
      if (seeds.size() != 1) throw UsageError("solve/check take a single seed");
      Scheme s = schemes[0];
      sopts.seed = seeds[0];
      Vector z0 = default_start(spec, s, sopts.seed);
      SolveReport rep = run(spec, s, z0, sopts);
      RunAssessment a = assess_run(spec, s, rep);
      print_report(spec, s, sopts.seed, rep, a);
      if (*check_cmd) {
        std::cout << "mapped multipliers: alpha=" << vec_str(a.mapped.alpha)
                  << " beta=" << vec_str(a.mapped.beta_t)
                  << " gamma=" << vec_str(a.mapped.gamma_t) << "\n";
        std::cout << "certificate residuals: stat_x=" << a.certificate.stat_x_residual
                  << " stat_y=" << a.certificate.stat_y_residual
                  << " upper_comp=" << a.certificate.upper_comp_residual
                  << " active_set=" << a.certificate.active_set_residual << "\n";
        const IterateLayout& l = rep.layout;
        bool upper = check_regularity(spec, l.x(rep.zeta), l.y(rep.zeta),
                                      RegularityLevel::Upper, 1e-4);
        bool lower = check_regularity(spec, l.x(rep.zeta), l.y(rep.zeta),
                                      RegularityLevel::Lower, 1e-4);
        std::cout << "regularity: upper=" << (upper ? "yes" : "no")
                  << " lower=" << (lower ? "yes" : "no") << "\n";
      }
      if (!out_path.empty()) {
        if (*check_cmd)
          write_file(out_path, certificate_to_json(a.certificate) + "\n");
        else
          write_file(out_path, report_json(spec, s, sopts.seed, rep, a).dump(2) + "\n");
      }
      return a.feas.feasible ? kExitOk : kExitNoConvergence;
    }

    if (*bench_cmd) {
      std::vector<ProblemSpec> problems;
      if (bench_problems.empty())
        for (const std::string& name : reg.names()) problems.push_back(reg.get(name));
      else
        for (const std::string& name : bench_problems) problems.push_back(resolve(name));
      BenchOptions bopts;
      bopts.solve = sopts;
      bopts.jobs = jobs;
      auto records =
          run_suite(problems, parse_schemes_arg(scheme_arg), parse_seeds(seeds_arg), bopts);
      std::cout << summary_markdown(records);
      if (!out_path.empty()) {
        if (format == "csv") {
          write_file(out_path, records_to_csv(records));
        } else if (format == "json") {
          nlohmann::json arr = nlohmann::json::array();
          for (const RunRecord& r : records) {
            nlohmann::json j;
            j["problem"] = r.problem;
            j["scheme"] = scheme_tag(r.scheme);
            j["seed"] = r.seed;
            j["outer_iters"] = r.outer_iters;
            j["inner_iters"] = r.inner_iters;
            j["wall_time_s"] = r.wall_time_s;
            j["final_residual"] = r.final_residual;
            j["feasible"] = r.feasible;
            j["flavor"] = to_string(r.flavor);
            if (r.accuracy) j["accuracy"] = *r.accuracy;
            if (r.eoc) j["eoc"] = *r.eoc;
            j["termination"] = r.termination;
            arr.push_back(j);
          }
          write_file(out_path, arr.dump(2) + "\n");
        } else {
          throw UsageError("unknown format '" + format + "'");
        }
      }
      if (!summary_path.empty()) write_file(summary_path, summary_markdown(records));
      return kExitOk;
    }

    if (*profile_cmd) {
      std::ifstream in(records_path);
      if (!in) throw UsageError("cannot read '" + records_path + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      auto records = records_from_csv(ss.str());
      auto measure = parse_measure(measure_arg);
      if (!measure) throw UsageError("unknown measure '" + measure_arg + "'");
      auto curves = perf_profile(records, *measure);
      std::string csv = profiles_to_csv(curves);
      if (!out_path.empty()) write_file(out_path, csv);
      else std::cout << csv;
      return kExitOk;
    }

    if (*sample_cmd) {
      ProblemSpec spec = resolve(problem_name);
      auto xs = split(x_arg, ',');
      if (static_cast<int>(xs.size()) != spec.n)
        throw UsageError("--x must have n = " + std::to_string(spec.n) + " entries");
      Vector x(spec.n);
      for (int i = 0; i < spec.n; ++i) x(i) = std::stod(xs[i]);

      GridSpec grid;
      grid.step = step_arg;
      if (box_arg.empty()) {
        grid.y_box = spec.start_box_y;
        grid.u_box.assign(spec.q, {0.0, 2.0});
      } else {
        auto parts = split(box_arg, ',');
        if (static_cast<int>(parts.size()) != spec.m + spec.q)
          throw UsageError("--box needs m + q = " + std::to_string(spec.m + spec.q) +
                           " lo:hi pairs");
        for (int d = 0; d < spec.m + spec.q; ++d) {
          auto lohi = split(parts[d], ':');
          if (lohi.size() != 2) throw UsageError("bad --box entry '" + parts[d] + "'");
          Interval iv{std::stod(lohi[0]), std::stod(lohi[1])};
          if (d < spec.m) grid.y_box.push_back(iv);
          else grid.u_box.push_back(iv);
        }
      }

      SampledSet set;
      if (set_arg == "d") {
        set = sample_D(spec, x, grid, tol_arg);
      } else if (set_arg == "dt") {
        auto schemes = parse_schemes_arg(scheme_arg);
        if (schemes.size() != 1) throw UsageError("sample takes a single scheme");
        set = sample_Dt(schemes[0], t_arg, spec, x, grid, tol_arg);
      } else {
        throw UsageError("--set must be d or dt");
      }
      std::cout << "sampled " << set.points.size() << " member points\n";
      std::string csv = sampled_set_csv(set);
      if (!out_path.empty()) write_file(out_path, csv);
      else std::cout << csv;
      return kExitOk;
    }

    if (*problems_cmd) {
      for (const std::string& name : reg.names()) {
        const ProblemSpec& spec = reg.get(name);
        std::cout << name << "  (n=" << spec.n << " m=" << spec.m << " p=" << spec.p
                  << " q=" << spec.q;
        if (spec.known.F_pes) std::cout << " F_pes=" << *spec.known.F_pes;
        std::cout << ")\n";
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ProblemError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  }
  return kExitUsage;
}
