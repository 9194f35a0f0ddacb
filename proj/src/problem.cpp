#include "pessirelax/problem.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pessirelax {

// ---------------------------------------------------------------------------
// Minimal TOML reader covering the problem file format: bare keys, [table]
// headers, strings, numbers, booleans, and (nested) arrays.
// ---------------------------------------------------------------------------

namespace {

struct TomlValue {
  enum class kind_t { String, Number, Bool, Array } kind = kind_t::Number;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<TomlValue> array;
};

struct TomlDoc {
  // flattened "table.key" -> value
  std::map<std::string, TomlValue> values;
  std::map<std::string, int> lines;  // for error context
};

struct TomlParser {
  const std::string& text;
  const std::string& origin;
  size_t pos = 0;
  int line = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ProblemError(origin + ":" + std::to_string(line) + ": " + msg);
  }

  void skip_inline_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }

  void skip_all_ws() {
    for (;;) {
      skip_inline_ws();
      if (pos < text.size() && text[pos] == '#') {
        while (pos < text.size() && text[pos] != '\n') ++pos;
      }
      if (pos < text.size() && (text[pos] == '\n' || text[pos] == '\r')) {
        if (text[pos] == '\n') ++line;
        ++pos;
        continue;
      }
      return;
    }
  }

  std::string parse_key() {
    skip_inline_ws();
    size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_' ||
            text[pos] == '.')) ++pos;
    if (start == pos) fail("expected key");
    return text.substr(start, pos - start);
  }

  TomlValue parse_value() {
    skip_all_ws();
    if (pos >= text.size()) fail("expected value");
    char c = text[pos];
    TomlValue v;
    if (c == '"') {
      ++pos;
      std::string s;
      while (pos < text.size() && text[pos] != '"') {
        if (text[pos] == '\\' && pos + 1 < text.size()) ++pos;
        if (text[pos] == '\n') ++line;
        s += text[pos++];
      }
      if (pos >= text.size()) fail("unterminated string");
      ++pos;
      v.kind = TomlValue::kind_t::String;
      v.str = s;
      return v;
    }
    if (c == '[') {
      ++pos;
      v.kind = TomlValue::kind_t::Array;
      skip_all_ws();
      if (pos < text.size() && text[pos] == ']') {
        ++pos;
        return v;
      }
      for (;;) {
        v.array.push_back(parse_value());
        skip_all_ws();
        if (pos < text.size() && text[pos] == ',') {
          ++pos;
          skip_all_ws();
          if (pos < text.size() && text[pos] == ']') { ++pos; return v; }
          continue;
        }
        if (pos < text.size() && text[pos] == ']') { ++pos; return v; }
        fail("expected ',' or ']' in array");
      }
    }
    if (text.compare(pos, 4, "true") == 0) {
      pos += 4;
      v.kind = TomlValue::kind_t::Bool;
      v.boolean = true;
      return v;
    }
    if (text.compare(pos, 5, "false") == 0) {
      pos += 5;
      v.kind = TomlValue::kind_t::Bool;
      v.boolean = false;
      return v;
    }
    // number
    size_t start = pos;
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.' ||
            text[pos] == '-' || text[pos] == '+' || text[pos] == 'e' ||
            text[pos] == 'E')) ++pos;
    if (start == pos) fail("expected value");
    std::string s = text.substr(start, pos - start);
    char* end = nullptr;
    v.num = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) fail("malformed number '" + s + "'");
    v.kind = TomlValue::kind_t::Number;
    return v;
  }

  TomlDoc parse() {
    TomlDoc doc;
    std::string table;
    for (;;) {
      skip_all_ws();
      if (pos >= text.size()) return doc;
      if (text[pos] == '[') {
        ++pos;
        table = parse_key();
        skip_inline_ws();
        if (pos >= text.size() || text[pos] != ']') fail("expected ']'");
        ++pos;
        continue;
      }
      std::string key = parse_key();
      skip_inline_ws();
      if (pos >= text.size() || text[pos] != '=') fail("expected '=' after key '" + key + "'");
      ++pos;
      int key_line = line;
      TomlValue v = parse_value();
      std::string full = table.empty() ? key : table + "." + key;
      if (doc.values.count(full)) fail("duplicate key '" + full + "'");
      doc.values[full] = std::move(v);
      doc.lines[full] = key_line;
    }
  }
};

bool uses_group(const Expr& e, VarGroup g) {
  switch (e.kind) {
    case Expr::Kind::Constant: return false;
    case Expr::Kind::Variable: return e.group == g;
    case Expr::Kind::Unary: return uses_group(*e.lhs, g);
    case Expr::Kind::Binary:
      return uses_group(*e.lhs, g) || (e.rhs && uses_group(*e.rhs, g));
  }
  return false;
}

std::string format_num(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<long long>(v));
    return std::string(buf, res.ptr) + ".0";
  }
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

ProblemSpec parse_problem_text(const std::string& text, const std::string& origin) {
  TomlParser parser{text, origin};
  TomlDoc doc = parser.parse();

  auto fail_key = [&](const std::string& key, const std::string& msg) {
    int ln = doc.lines.count(key) ? doc.lines.at(key) : 0;
    throw ProblemError(origin + ":" + std::to_string(ln) + ": key '" + key + "': " + msg);
  };
  auto require = [&](const std::string& key) -> const TomlValue& {
    auto it = doc.values.find(key);
    if (it == doc.values.end())
      throw ProblemError(origin + ": missing required key '" + key + "'");
    return it->second;
  };
  auto get_string = [&](const std::string& key) -> std::string {
    const TomlValue& v = require(key);
    if (v.kind != TomlValue::kind_t::String) fail_key(key, "expected string");
    return v.str;
  };
  auto get_int = [&](const std::string& key) -> int {
    const TomlValue& v = require(key);
    if (v.kind != TomlValue::kind_t::Number || v.num != std::floor(v.num))
      fail_key(key, "expected integer");
    return static_cast<int>(v.num);
  };
  auto get_string_array = [&](const std::string& key) -> std::vector<std::string> {
    const TomlValue& v = require(key);
    if (v.kind != TomlValue::kind_t::Array) fail_key(key, "expected array");
    std::vector<std::string> out;
    for (const TomlValue& e : v.array) {
      if (e.kind != TomlValue::kind_t::String) fail_key(key, "expected array of strings");
      out.push_back(e.str);
    }
    return out;
  };
  auto get_box = [&](const std::string& key, int count) -> std::vector<Interval> {
    const TomlValue& v = require(key);
    if (v.kind != TomlValue::kind_t::Array) fail_key(key, "expected array of [lo, hi]");
    if (static_cast<int>(v.array.size()) != count)
      fail_key(key, "expected " + std::to_string(count) + " intervals, got " +
                        std::to_string(v.array.size()));
    std::vector<Interval> out;
    for (const TomlValue& e : v.array) {
      if (e.kind != TomlValue::kind_t::Array || e.array.size() != 2 ||
          e.array[0].kind != TomlValue::kind_t::Number ||
          e.array[1].kind != TomlValue::kind_t::Number)
        fail_key(key, "each interval must be [lo, hi]");
      Interval iv{e.array[0].num, e.array[1].num};
      if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi)
        fail_key(key, "interval must be finite and nonempty");
      out.push_back(iv);
    }
    return out;
  };

  ProblemSpec spec;
  spec.name = get_string("name");
  spec.n = get_int("n");
  spec.m = get_int("m");
  spec.p = get_int("p");
  spec.q = get_int("q");
  if (spec.n < 1 || spec.m < 1 || spec.p < 0 || spec.q < 1)
    throw ProblemError(origin + ": dimensions must satisfy n,m >= 1, p >= 0, q >= 1");

  auto parse_field = [&](const std::string& key, const std::string& body) -> ExprPtr {
    try {
      return parse_expr(body, spec.n, spec.m);
    } catch (const ParseError& err) {
      fail_key(key, std::string(err.what()) + " in \"" + body + "\"");
      return nullptr;  // unreachable
    }
  };

  spec.F = parse_field("F", get_string("F"));
  spec.f = parse_field("f", get_string("f"));

  auto Gs = get_string_array("G");
  if (static_cast<int>(Gs.size()) != spec.p)
    fail_key("G", "expected p = " + std::to_string(spec.p) + " entries, got " +
                      std::to_string(Gs.size()));
  for (size_t i = 0; i < Gs.size(); ++i) {
    ExprPtr e = parse_field("G[" + std::to_string(i) + "]", Gs[i]);
    if (uses_group(*e, VarGroup::Y))
      fail_key("G", "upper-level constraint G[" + std::to_string(i) +
                        "] may only reference x variables");
    spec.G.push_back(std::move(e));
  }

  auto gs = get_string_array("g");
  if (static_cast<int>(gs.size()) != spec.q)
    fail_key("g", "expected q = " + std::to_string(spec.q) + " entries, got " +
                      std::to_string(gs.size()));
  for (size_t i = 0; i < gs.size(); ++i)
    spec.g.push_back(parse_field("g[" + std::to_string(i) + "]", gs[i]));

  spec.start_box_x = get_box("start_box.x", spec.n);
  spec.start_box_y = get_box("start_box.y", spec.m);

  if (doc.values.count("known.F_pes")) {
    double v = doc.values.at("known.F_pes").num;
    if (!std::isfinite(v)) fail_key("known.F_pes", "must be finite");
    spec.known.F_pes = v;
  }
  if (doc.values.count("known.F_opt")) {
    double v = doc.values.at("known.F_opt").num;
    if (!std::isfinite(v)) fail_key("known.F_opt", "must be finite");
    spec.known.F_opt = v;
  }
  if (doc.values.count("source")) spec.source = doc.values.at("source").str;
  return spec;
}

ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemError("cannot open problem file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_text(ss.str(), path);
}

std::string print_problem(const ProblemSpec& spec) {
  std::ostringstream out;
  out << "name = \"" << spec.name << "\"\n";
  out << "n = " << spec.n << "\n";
  out << "m = " << spec.m << "\n";
  out << "p = " << spec.p << "\n";
  out << "q = " << spec.q << "\n";
  out << "F = \"" << to_string(spec.F) << "\"\n";
  out << "G = [";
  for (size_t i = 0; i < spec.G.size(); ++i)
    out << (i ? ", " : "") << '"' << to_string(spec.G[i]) << '"';
  out << "]\n";
  out << "f = \"" << to_string(spec.f) << "\"\n";
  out << "g = [";
  for (size_t i = 0; i < spec.g.size(); ++i)
    out << (i ? ", " : "") << '"' << to_string(spec.g[i]) << '"';
  out << "]\n";
  if (!spec.source.empty()) out << "source = \"" << spec.source << "\"\n";
  out << "\n[start_box]\n";
  auto box = [&](const std::vector<Interval>& b) {
    std::string s = "[";
    for (size_t i = 0; i < b.size(); ++i) {
      if (i) s += ", ";
      s += "[" + format_num(b[i].lo) + ", " + format_num(b[i].hi) + "]";
    }
    return s + "]";
  };
  out << "x = " << box(spec.start_box_x) << "\n";
  out << "y = " << box(spec.start_box_y) << "\n";
  if (spec.known.F_pes || spec.known.F_opt) {
    out << "\n[known]\n";
    if (spec.known.F_pes) out << "F_pes = " << format_num(*spec.known.F_pes) << "\n";
    if (spec.known.F_opt) out << "F_opt = " << format_num(*spec.known.F_opt) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Built-in examples. Interval constraints are encoded as inequality pairs.
// ---------------------------------------------------------------------------

ProblemSpec builtin_ex_toy() {
  const std::string text = R"(name = "ex_toy"
n = 1
m = 1
p = 2
q = 2
F = "y1"
G = ["-x1", "x1 - 1"]
f = "x1*y1"
g = ["-y1", "y1 - 1"]
source = "built-in"

[start_box]
x = [[0.0, 1.0]]
y = [[0.0, 1.0]]

[known]
F_pes = 0.0
F_opt = 0.0
)";
  return parse_problem_text(text, "<builtin ex_toy>");
}

ProblemSpec builtin_ex_linear() {
  // Lower-level set y <= 1 is unbounded below; that side of the start box
  // gets the default [-10, 10] (used for starts and sampling only).
  const std::string text = R"(name = "ex_linear"
n = 1
m = 1
p = 2
q = 1
F = "x1 + y1"
G = ["-x1", "x1 - 1"]
f = "-x1*y1"
g = ["y1 - 1"]
source = "built-in"

[start_box]
x = [[0.0, 1.0]]
y = [[-10.0, 10.0]]

[known]
F_pes = 1.0
)";
  return parse_problem_text(text, "<builtin ex_linear>");
}

Registry Registry::with_builtins() {
  Registry r;
  r.add(builtin_ex_toy());
  r.add(builtin_ex_linear());
  return r;
}

void Registry::add(ProblemSpec spec) {
  std::string name = spec.name;
  specs_[name] = std::move(spec);
}

void Registry::add_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ProblemError("not a directory: '" + dir + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".toml")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) add(load_problem(f.string()));
}

bool Registry::contains(const std::string& name) const { return specs_.count(name) > 0; }

const ProblemSpec& Registry::get(const std::string& name) const {
  auto it = specs_.find(name);
  if (it == specs_.end()) throw ProblemError("unknown problem '" + name + "'");
  return it->second;
}

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : specs_) out.push_back(k);
  return out;
}

// ---------------------------------------------------------------------------

LagrangianEval lagrangian(const ProblemSpec& spec, const Vector& x, const Vector& y,
                          const Vector& u) {
  if (u.size() != spec.q)
    throw ProblemError("lagrangian: u has length " + std::to_string(u.size()) +
                       ", expected q = " + std::to_string(spec.q));
  const int n = spec.n, m = spec.m, q = spec.q;
  LagrangianEval out;
  out.L = Vector::Zero(m);
  out.dL_dx = Matrix::Zero(m, n);
  out.dL_dy = Matrix::Zero(m, m);
  out.dL_du = Matrix::Zero(m, q);

  Jet fj = eval_jet(spec.f, x, y, 2);
  for (int l = 0; l < m; ++l) {
    out.L(l) = fj.grad(n + l);
    for (int a = 0; a < n; ++a) out.dL_dx(l, a) = fj.hess(n + l, a);
    for (int b = 0; b < m; ++b) out.dL_dy(l, b) = fj.hess(n + l, n + b);
  }
  for (int i = 0; i < q; ++i) {
    Jet gj = eval_jet(spec.g[i], x, y, 2);
    for (int l = 0; l < m; ++l) {
      out.L(l) += u(i) * gj.grad(n + l);
      out.dL_du(l, i) = gj.grad(n + l);
      for (int a = 0; a < n; ++a) out.dL_dx(l, a) += u(i) * gj.hess(n + l, a);
      for (int b = 0; b < m; ++b) out.dL_dy(l, b) += u(i) * gj.hess(n + l, n + b);
    }
  }
  return out;
}

}  // namespace pessirelax
