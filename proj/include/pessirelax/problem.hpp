#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pessirelax/expr.hpp"

namespace pessirelax {

struct ProblemError : std::runtime_error {
  explicit ProblemError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct KnownValues {
  std::optional<double> F_pes;
  std::optional<double> F_opt;
};

/// A pessimistic bilevel instance:
///   min over x in X of  max F(x, y)  over lower-level KKT points (y, u),
/// with X = { x : G(x) <= 0 } and lower-level feasible set { y : g(x,y) <= 0 }.
struct ProblemSpec {
  std::string name;
  int n = 0, m = 0, p = 0, q = 0;
  ExprPtr F;                // upper objective, in (x, y)
  std::vector<ExprPtr> G;   // p upper constraints, in x only
  ExprPtr f;                // lower objective, in (x, y)
  std::vector<ExprPtr> g;   // q lower constraints, in (x, y)
  std::vector<Interval> start_box_x;  // n intervals
  std::vector<Interval> start_box_y;  // m intervals
  KnownValues known;
  std::string source;
};

/// Reads one problem from a TOML file (see README for the format).
/// Errors carry file/line context.
ProblemSpec load_problem(const std::string& path);

/// As load_problem but from in-memory text; `origin` labels error messages.
ProblemSpec parse_problem_text(const std::string& text, const std::string& origin);

/// Serializes a ProblemSpec back to the file format.
/// parse_problem_text(print_problem(s)) reproduces s.
std::string print_problem(const ProblemSpec& spec);

/// Name -> problem map with the two built-in examples always present.
class Registry {
 public:
  static Registry with_builtins();

  void add(ProblemSpec spec);
  /// Scans a directory for *.toml problem files.
  void add_directory(const std::string& dir);
  bool contains(const std::string& name) const;
  const ProblemSpec& get(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, ProblemSpec> specs_;
};

ProblemSpec builtin_ex_toy();
ProblemSpec builtin_ex_linear();

/// L(x,y,u) = grad_y f + sum_i u_i grad_y g_i, with its partials.
struct LagrangianEval {
  Vector L;      // m
  Matrix dL_dx;  // m x n
  Matrix dL_dy;  // m x m
  Matrix dL_du;  // m x q, column i = grad_y g_i
};
LagrangianEval lagrangian(const ProblemSpec& spec, const Vector& x, const Vector& y,
                          const Vector& u);

}  // namespace pessirelax
