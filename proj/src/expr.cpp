#include "pessirelax/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace pessirelax {

ExprPtr Expr::make_constant(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Constant;
  e->constant = v;
  return e;
}

ExprPtr Expr::make_variable(VarGroup g, int index) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Variable;
  e->group = g;
  e->index = index;
  return e;
}

ExprPtr Expr::make_unary(UnaryOp op, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Unary;
  e->uop = op;
  e->lhs = std::move(a);
  return e;
}

ExprPtr Expr::make_binary(BinaryOp op, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Binary;
  e->bop = op;
  e->lhs = std::move(a);
  e->rhs = std::move(b);
  return e;
}

ExprPtr Expr::make_pow(ExprPtr a, int k) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Binary;
  e->bop = BinaryOp::Pow;
  e->exponent = k;
  e->lhs = std::move(a);
  return e;
}

// ---------------------------------------------------------------------------
// Parser: recursive descent.
//
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' uint)?
//   atom   := number | func '(' expr ')' | var | '(' expr ')'
//
// '^' binds tighter than unary minus, so "-x1^2" is -(x1^2).
// ---------------------------------------------------------------------------

namespace {

struct Parser {
  const std::string& text;
  int n, m;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at position " + std::to_string(pos),
                     static_cast<int>(pos));
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  ExprPtr parse() {
    ExprPtr e = parse_expr();
    skip_ws();
    if (pos != text.size()) fail("unexpected trailing input");
    return e;
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    for (;;) {
      if (eat('+')) {
        e = Expr::make_binary(Expr::BinaryOp::Add, e, parse_term());
      } else if (eat('-')) {
        e = Expr::make_binary(Expr::BinaryOp::Sub, e, parse_term());
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_unary();
    for (;;) {
      if (eat('*')) {
        e = Expr::make_binary(Expr::BinaryOp::Mul, e, parse_unary());
      } else if (eat('/')) {
        e = Expr::make_binary(Expr::BinaryOp::Div, e, parse_unary());
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_unary() {
    if (eat('-')) return Expr::make_unary(Expr::UnaryOp::Neg, parse_unary());
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (eat('^')) {
      skip_ws();
      size_t start = pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
      if (pos == start) fail("expected nonnegative integer exponent");
      int k = std::atoi(text.substr(start, pos - start).c_str());
      return Expr::make_pow(base, k);
    }
    return base;
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    char c = text[pos];
    if (c == '(') {
      ++pos;
      ExprPtr e = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr parse_number() {
    size_t start = pos;
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) ++pos;
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
      ++pos;
      if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    std::string s = text.substr(start, pos - start);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) {
      pos = start;
      fail("malformed number '" + s + "'");
    }
    return Expr::make_constant(v);
  }

  ExprPtr parse_ident() {
    size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) ++pos;
    std::string id = text.substr(start, pos - start);

    if (peek() == '(') {
      Expr::UnaryOp op;
      if (id == "sin") op = Expr::UnaryOp::Sin;
      else if (id == "cos") op = Expr::UnaryOp::Cos;
      else if (id == "exp") op = Expr::UnaryOp::Exp;
      else if (id == "log") op = Expr::UnaryOp::Log;
      else if (id == "sqrt") op = Expr::UnaryOp::Sqrt;
      else { pos = start; fail("unknown function '" + id + "'"); }
      eat('(');
      ExprPtr arg = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return Expr::make_unary(op, arg);
    }

    if ((id[0] == 'x' || id[0] == 'y') && id.size() > 1) {
      bool digits = true;
      for (size_t i = 1; i < id.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(id[i]))) digits = false;
      if (digits) {
        int k = std::atoi(id.c_str() + 1);
        int limit = (id[0] == 'x') ? n : m;
        if (k < 1 || k > limit) {
          pos = start;
          fail("variable '" + id + "' out of range (limit " + std::to_string(limit) + ")");
        }
        return Expr::make_variable(id[0] == 'x' ? VarGroup::X : VarGroup::Y, k - 1);
      }
    }
    pos = start;
    fail("unknown identifier '" + id + "'");
  }
};

}  // namespace

ExprPtr parse_expr(const std::string& text, int n, int m) {
  Parser p{text, n, m};
  return p.parse();
}

// ---------------------------------------------------------------------------
// Printing with minimal parentheses; parse(to_string(e)) reproduces e.
// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Precedence levels: add/sub 1, mul/div 2, unary minus 3, pow 4, atom 5.
int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Constant:
      return e.constant < 0 ? 3 : 5;
    case Expr::Kind::Variable:
      return 5;
    case Expr::Kind::Unary:
      return e.uop == Expr::UnaryOp::Neg ? 3 : 5;
    case Expr::Kind::Binary:
      switch (e.bop) {
        case Expr::BinaryOp::Add:
        case Expr::BinaryOp::Sub: return 1;
        case Expr::BinaryOp::Mul:
        case Expr::BinaryOp::Div: return 2;
        case Expr::BinaryOp::Pow: return 4;
      }
  }
  return 5;
}

std::string print_rec(const Expr& e, int min_prec) {
  std::string s;
  int prec = precedence(e);
  switch (e.kind) {
    case Expr::Kind::Constant:
      s = format_double(e.constant);
      break;
    case Expr::Kind::Variable:
      s = (e.group == VarGroup::X ? "x" : "y") + std::to_string(e.index + 1);
      break;
    case Expr::Kind::Unary:
      switch (e.uop) {
        case Expr::UnaryOp::Neg: s = "-" + print_rec(*e.lhs, 3); break;
        case Expr::UnaryOp::Sin: s = "sin(" + print_rec(*e.lhs, 0) + ")"; break;
        case Expr::UnaryOp::Cos: s = "cos(" + print_rec(*e.lhs, 0) + ")"; break;
        case Expr::UnaryOp::Exp: s = "exp(" + print_rec(*e.lhs, 0) + ")"; break;
        case Expr::UnaryOp::Log: s = "log(" + print_rec(*e.lhs, 0) + ")"; break;
        case Expr::UnaryOp::Sqrt: s = "sqrt(" + print_rec(*e.lhs, 0) + ")"; break;
      }
      break;
    case Expr::Kind::Binary:
      switch (e.bop) {
        case Expr::BinaryOp::Add:
          s = print_rec(*e.lhs, 1) + " + " + print_rec(*e.rhs, 2);
          break;
        case Expr::BinaryOp::Sub:
          // right side needs strictly higher precedence: a - (b + c)
          s = print_rec(*e.lhs, 1) + " - " + print_rec(*e.rhs, 2);
          break;
        case Expr::BinaryOp::Mul:
          s = print_rec(*e.lhs, 2) + "*" + print_rec(*e.rhs, 3);
          break;
        case Expr::BinaryOp::Div:
          s = print_rec(*e.lhs, 2) + "/" + print_rec(*e.rhs, 3);
          break;
        case Expr::BinaryOp::Pow:
          // base must print as an atom so the exponent reattaches to it
          s = print_rec(*e.lhs, 5) + "^" + std::to_string(e.exponent);
          break;
      }
      break;
  }
  if (prec < min_prec) return "(" + s + ")";
  return s;
}

}  // namespace

std::string to_string(const Expr& e) { return print_rec(e, 0); }

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Constant:
      return a.constant == b.constant;
    case Expr::Kind::Variable:
      return a.group == b.group && a.index == b.index;
    case Expr::Kind::Unary:
      return a.uop == b.uop && expr_equal(*a.lhs, *b.lhs);
    case Expr::Kind::Binary:
      if (a.bop != b.bop) return false;
      if (a.bop == Expr::BinaryOp::Pow)
        return a.exponent == b.exponent && expr_equal(*a.lhs, *b.lhs);
      return expr_equal(*a.lhs, *b.lhs) && expr_equal(*a.rhs, *b.rhs);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Forward-mode jets to order 3 over z = (x, y).
// ---------------------------------------------------------------------------

Jet::Jet(int dims, int order) : dims_(dims), order_(order) {
  grad = Vector::Zero(dims);
  if (order >= 2) hess = Matrix::Zero(dims, dims);
  if (order >= 3) third_.assign(static_cast<size_t>(dims) * dims * dims, 0.0);
}

namespace {

Jet jet_const(double v, int dims, int order) {
  Jet j(dims, order);
  j.value = v;
  return j;
}

Jet jet_add(const Jet& a, const Jet& b, double sb) {
  Jet r = a;
  r.value += sb * b.value;
  r.grad += sb * b.grad;
  if (r.order() >= 2) r.hess += sb * b.hess;
  if (r.order() >= 3) {
    const int d = r.dims();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) r.third(i, j, k) += sb * b.third(i, j, k);
  }
  return r;
}

Jet jet_mul(const Jet& a, const Jet& b) {
  const int d = a.dims();
  const int order = a.order();
  Jet r(d, order);
  r.value = a.value * b.value;
  r.grad = a.value * b.grad + b.value * a.grad;
  if (order >= 2) {
    r.hess = a.value * b.hess + b.value * a.hess + a.grad * b.grad.transpose() +
             b.grad * a.grad.transpose();
  }
  if (order >= 3) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          r.third(i, j, k) = a.third(i, j, k) * b.value + a.value * b.third(i, j, k) +
                             a.hess(i, j) * b.grad(k) + a.hess(i, k) * b.grad(j) +
                             a.hess(j, k) * b.grad(i) + a.grad(i) * b.hess(j, k) +
                             a.grad(j) * b.hess(i, k) + a.grad(k) * b.hess(i, j);
        }
  }
  return r;
}

// Chain rule for h(u) given h', h'', h''' at u.value.
Jet jet_compose(const Jet& u, double h0, double h1, double h2, double h3) {
  const int d = u.dims();
  const int order = u.order();
  Jet r(d, order);
  r.value = h0;
  r.grad = h1 * u.grad;
  if (order >= 2) r.hess = h2 * (u.grad * u.grad.transpose()) + h1 * u.hess;
  if (order >= 3) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          r.third(i, j, k) = h3 * u.grad(i) * u.grad(j) * u.grad(k) +
                             h2 * (u.hess(i, j) * u.grad(k) + u.hess(i, k) * u.grad(j) +
                                   u.hess(j, k) * u.grad(i)) +
                             h1 * u.third(i, j, k);
        }
  }
  return r;
}

double ipow(double z, int e) {
  double r = 1.0;
  while (e-- > 0) r *= z;
  return r;
}

bool jet_finite(const Jet& j) {
  if (!std::isfinite(j.value)) return false;
  if (!j.grad.allFinite()) return false;
  if (j.order() >= 2 && !j.hess.allFinite()) return false;
  if (j.order() >= 3)
    for (double v : j.third_data())
      if (!std::isfinite(v)) return false;
  return true;
}

Jet eval_rec(const Expr& e, const Vector& x, const Vector& y, int d, int order,
             Wrt wrt) {
  const int n = static_cast<int>(x.size());
  Jet r;
  switch (e.kind) {
    case Expr::Kind::Constant:
      r = jet_const(e.constant, d, order);
      break;
    case Expr::Kind::Variable: {
      r = Jet(d, order);
      if (e.group == VarGroup::X) {
        r.value = x(e.index);
        if (wrt != Wrt::Y) r.grad(e.index) = 1.0;
      } else {
        r.value = y(e.index);
        if (wrt != Wrt::X) r.grad(n + e.index) = 1.0;
      }
      break;
    }
    case Expr::Kind::Unary: {
      Jet u = eval_rec(*e.lhs, x, y, d, order, wrt);
      const double v = u.value;
      switch (e.uop) {
        case Expr::UnaryOp::Neg:
          r = jet_compose(u, -v, -1.0, 0.0, 0.0);
          break;
        case Expr::UnaryOp::Sin:
          r = jet_compose(u, std::sin(v), std::cos(v), -std::sin(v), -std::cos(v));
          break;
        case Expr::UnaryOp::Cos:
          r = jet_compose(u, std::cos(v), -std::sin(v), -std::cos(v), std::sin(v));
          break;
        case Expr::UnaryOp::Exp: {
          double ev = std::exp(v);
          r = jet_compose(u, ev, ev, ev, ev);
          break;
        }
        case Expr::UnaryOp::Log:
          if (v <= 0.0) throw EvalDomainError("log of nonpositive value");
          r = jet_compose(u, std::log(v), 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
          break;
        case Expr::UnaryOp::Sqrt: {
          if (v < 0.0) throw EvalDomainError("sqrt of negative value");
          double s = std::sqrt(v);
          r = jet_compose(u, s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v));
          break;
        }
      }
      break;
    }
    case Expr::Kind::Binary: {
      Jet a = eval_rec(*e.lhs, x, y, d, order, wrt);
      switch (e.bop) {
        case Expr::BinaryOp::Add:
          r = jet_add(a, eval_rec(*e.rhs, x, y, d, order, wrt), 1.0);
          break;
        case Expr::BinaryOp::Sub:
          r = jet_add(a, eval_rec(*e.rhs, x, y, d, order, wrt), -1.0);
          break;
        case Expr::BinaryOp::Mul:
          r = jet_mul(a, eval_rec(*e.rhs, x, y, d, order, wrt));
          break;
        case Expr::BinaryOp::Div: {
          Jet b = eval_rec(*e.rhs, x, y, d, order, wrt);
          double v = b.value;
          if (v == 0.0) throw EvalDomainError("division by zero");
          Jet inv = jet_compose(b, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v),
                                -6.0 / (v * v * v * v));
          r = jet_mul(a, inv);
          break;
        }
        case Expr::BinaryOp::Pow: {
          const int k = e.exponent;
          const double v = a.value;
          if (k == 0) {
            r = jet_const(1.0, d, order);
          } else {
            double h1 = k * ipow(v, k - 1);
            double h2 = (k >= 2) ? double(k) * (k - 1) * ipow(v, k - 2) : 0.0;
            double h3 = (k >= 3) ? double(k) * (k - 1) * (k - 2) * ipow(v, k - 3) : 0.0;
            r = jet_compose(a, ipow(v, k), h1, h2, h3);
          }
          break;
        }
      }
      break;
    }
  }
  if (!jet_finite(r)) throw EvalDomainError("non-finite value in '" + to_string(e) + "'");
  return r;
}

double eval_value_rec(const Expr& e, const Vector& x, const Vector& y) {
  switch (e.kind) {
    case Expr::Kind::Constant:
      return e.constant;
    case Expr::Kind::Variable:
      return e.group == VarGroup::X ? x(e.index) : y(e.index);
    case Expr::Kind::Unary: {
      double v = eval_value_rec(*e.lhs, x, y);
      switch (e.uop) {
        case Expr::UnaryOp::Neg: return -v;
        case Expr::UnaryOp::Sin: return std::sin(v);
        case Expr::UnaryOp::Cos: return std::cos(v);
        case Expr::UnaryOp::Exp: return std::exp(v);
        case Expr::UnaryOp::Log:
          if (v <= 0.0) throw EvalDomainError("log of nonpositive value");
          return std::log(v);
        case Expr::UnaryOp::Sqrt:
          if (v < 0.0) throw EvalDomainError("sqrt of negative value");
          return std::sqrt(v);
      }
      return 0.0;
    }
    case Expr::Kind::Binary: {
      double a = eval_value_rec(*e.lhs, x, y);
      if (e.bop == Expr::BinaryOp::Pow) return ipow(a, e.exponent);
      double b = eval_value_rec(*e.rhs, x, y);
      switch (e.bop) {
        case Expr::BinaryOp::Add: return a + b;
        case Expr::BinaryOp::Sub: return a - b;
        case Expr::BinaryOp::Mul: return a * b;
        case Expr::BinaryOp::Div:
          if (b == 0.0) throw EvalDomainError("division by zero");
          return a / b;
        case Expr::BinaryOp::Pow: break;
      }
      return 0.0;
    }
  }
  return 0.0;
}

}  // namespace

Jet eval_jet(const Expr& e, const Vector& x, const Vector& y, int order, Wrt wrt) {
  const int d = static_cast<int>(x.size() + y.size());
  return eval_rec(e, x, y, d, order, wrt);
}

double eval_value(const Expr& e, const Vector& x, const Vector& y) {
  double v = eval_value_rec(e, x, y);
  if (!std::isfinite(v)) throw EvalDomainError("non-finite value in '" + to_string(e) + "'");
  return v;
}

double check_derivatives(const Expr& e, const Vector& x, const Vector& y, double h) {
  const int n = static_cast<int>(x.size());
  const int d = n + static_cast<int>(y.size());
  Jet j = eval_jet(e, x, y, 2);

  auto value_at = [&](const Vector& z) {
    return eval_value(e, z.head(n), z.tail(d - n));
  };
  Vector z0(d);
  z0 << x, y;

  double max_err = 0.0;
  auto consider = [&](double ad, double fd) {
    double err = std::abs(ad - fd) / std::max(1.0, std::abs(ad));
    max_err = std::max(max_err, err);
  };

  for (int a = 0; a < d; ++a) {
    Vector zp = z0, zm = z0;
    zp(a) += h;
    zm(a) -= h;
    consider(j.grad(a), (value_at(zp) - value_at(zm)) / (2 * h));
  }

  // Second derivatives: a 3-point stencil at h = 1e-5 carries ~1e-6 relative
  // roundoff, which would swamp the comparison. Compose two 4th-order central
  // first-derivative stencils at a coarser step instead.
  const double h2 = std::max(h, 1e-3);
  const double offs[4] = {2 * h2, h2, -h2, -2 * h2};
  const double wts[4] = {-1.0 / (12 * h2), 8.0 / (12 * h2), -8.0 / (12 * h2),
                         1.0 / (12 * h2)};
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      double fd = 0.0;
      for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
          Vector z = z0;
          z(a) += offs[i];
          z(b) += offs[k];
          fd += wts[i] * wts[k] * value_at(z);
        }
      consider(j.hess(a, b), fd);
    }
  return max_err;
}

}  // namespace pessirelax
