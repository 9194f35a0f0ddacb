#pragma once

#include <Eigen/Core>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace pessirelax {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int position)
      : std::runtime_error(msg), position(position) {}
  int position;  // 0-based offset into the input text
};

struct EvalDomainError : std::runtime_error {
  explicit EvalDomainError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class VarGroup { X, Y };

/// Immutable expression AST over variables x1..xn, y1..ym.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Constant, Variable, Unary, Binary };
  enum class UnaryOp { Neg, Sin, Cos, Exp, Log, Sqrt };
  enum class BinaryOp { Add, Sub, Mul, Div, Pow };

  Kind kind;
  double constant = 0.0;
  VarGroup group = VarGroup::X;
  int index = 0;  // 0-based within the group
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  int exponent = 0;  // Pow only, >= 0
  ExprPtr lhs, rhs;  // rhs null for Unary

  static ExprPtr make_constant(double v);
  static ExprPtr make_variable(VarGroup g, int index);
  static ExprPtr make_unary(UnaryOp op, ExprPtr a);
  static ExprPtr make_binary(BinaryOp op, ExprPtr a, ExprPtr b);
  static ExprPtr make_pow(ExprPtr a, int k);
};

/// Parses the infix grammar documented in the README. Variables outside
/// the declared dimensions (n, m) are rejected.
ExprPtr parse_expr(const std::string& text, int n, int m);

std::string to_string(const Expr& e);
inline std::string to_string(const ExprPtr& e) { return to_string(*e); }

bool expr_equal(const Expr& a, const Expr& b);
inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) { return expr_equal(*a, *b); }

/// Which variable groups are treated as differentiation directions.
enum class Wrt { XY, X, Y };

/// Value plus mixed partial derivatives up to order 3 with respect to the
/// combined variable vector z = (x, y) of dimension n + m. Partials for a
/// group excluded by Wrt are identically zero.
class Jet {
 public:
  Jet() = default;
  Jet(int dims, int order);

  int dims() const { return dims_; }
  int order() const { return order_; }

  double value = 0.0;
  Vector grad;  // dims
  Matrix hess;  // dims x dims, symmetric; order >= 2

  double third(int a, int b, int c) const {
    return third_[(a * dims_ + b) * dims_ + c];
  }
  double& third(int a, int b, int c) {
    return third_[(a * dims_ + b) * dims_ + c];
  }
  const std::vector<double>& third_data() const { return third_; }

 private:
  int dims_ = 0;
  int order_ = 0;
  std::vector<double> third_;
};

/// Evaluates the expression with derivatives of the requested order.
/// Throws EvalDomainError when any intermediate value is not finite.
Jet eval_jet(const Expr& e, const Vector& x, const Vector& y, int order,
             Wrt wrt = Wrt::XY);
inline Jet eval_jet(const ExprPtr& e, const Vector& x, const Vector& y,
                    int order, Wrt wrt = Wrt::XY) {
  return eval_jet(*e, x, y, order, wrt);
}

/// Plain value evaluation; cheapest path, used by grid sampling.
double eval_value(const Expr& e, const Vector& x, const Vector& y);
inline double eval_value(const ExprPtr& e, const Vector& x, const Vector& y) {
  return eval_value(*e, x, y);
}

/// Max over orders 1-2 of |AD - FD| / max(1, |AD|) against central finite
/// differences with step h.
double check_derivatives(const Expr& e, const Vector& x, const Vector& y,
                         double h);

}  // namespace pessirelax
