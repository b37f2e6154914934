#pragma once

// Closed-form scalar expressions in t, x, omega, u and user parameters.
//
// An Expr is an immutable handle to a node of a shared DAG. All builders
// apply constant folding and neutral-element elimination (0*e -> 0,
// e+0 -> e, e^1 -> e, ...) and nothing else, so derivative output stays
// predictable.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kawahara {

enum class Op : std::uint8_t {
  Const,
  Var,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Neg,
  Exp,
  Ln,
  Sqrt,
  Sin,
  Cos,
  Tanh,
  Atan,
  Special,
};

class Expr;
class SpecialFunction;

struct Node {
  Op op = Op::Const;
  double value = 0.0;
  std::string name;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
  std::shared_ptr<const SpecialFunction> special;
  std::uint64_t var_mask = 0;
};

namespace detail {

// Variables are interned to bit positions so dependency tests are O(1).
// Names past the 63rd share the last bit, which only makes depends_on()
// conservative.
inline std::uint64_t variable_bit(const std::string& name) {
  static std::mutex mutex;
  static std::unordered_map<std::string, unsigned> ids;
  std::lock_guard<std::mutex> lock(mutex);
  auto [it, inserted] = ids.try_emplace(name, static_cast<unsigned>(ids.size()));
  return std::uint64_t{1} << std::min(it->second, 63u);
}

inline bool is_unary_function(Op op) {
  switch (op) {
    case Op::Exp:
    case Op::Ln:
    case Op::Sqrt:
    case Op::Sin:
    case Op::Cos:
    case Op::Tanh:
    case Op::Atan:
      return true;
    default:
      return false;
  }
}

inline const char* function_name(Op op) {
  switch (op) {
    case Op::Exp: return "exp";
    case Op::Ln: return "ln";
    case Op::Sqrt: return "sqrt";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tanh: return "tanh";
    case Op::Atan: return "arctan";
    default: return "?";
  }
}

}  // namespace detail

class Expr {
 public:
  Expr() : Expr(0.0) {}

  explicit Expr(double constant) {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = constant;
    node_ = std::move(n);
  }

  static Expr variable(const std::string& name) {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->name = name;
    n->var_mask = detail::variable_bit(name);
    return Expr(std::shared_ptr<const Node>(std::move(n)));
  }

  Op op() const { return node_->op; }
  double value() const { return node_->value; }
  const std::string& name() const { return node_->name; }
  Expr lhs() const { return Expr(node_->lhs); }
  Expr rhs() const { return Expr(node_->rhs); }
  Expr arg() const { return Expr(node_->lhs); }
  const std::shared_ptr<const SpecialFunction>& special() const { return node_->special; }

  bool is_const() const { return node_->op == Op::Const; }
  bool is_const(double v) const { return node_->op == Op::Const && node_->value == v; }
  bool is_var(std::string_view v) const { return node_->op == Op::Var && node_->name == v; }

  // Structural test: false means the expression certainly does not contain v.
  bool depends_on(const std::string& v) const {
    return (node_->var_mask & detail::variable_bit(v)) != 0;
  }
  bool is_closed() const { return node_->var_mask == 0; }

  const Node* id() const { return node_.get(); }
  const std::shared_ptr<const Node>& node() const { return node_; }

  static Expr from_node(std::shared_ptr<const Node> n) { return Expr(std::move(n)); }

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// Opaque numerically evaluated function of one argument (quadratures,
// numerical inverses). Its derivative must be expressible as an Expr.
class SpecialFunction {
 public:
  virtual ~SpecialFunction() = default;
  virtual std::string name() const = 0;
  virtual double evaluate(double arg) const = 0;
  // f'(arg) as an expression in the variables of arg.
  virtual Expr derivative(const Expr& arg) const = 0;
};

namespace detail {

inline Expr make_node(Op op, const Expr& a, const Expr& b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = a.node();
  n->rhs = b.node();
  n->var_mask = a.node()->var_mask | b.node()->var_mask;
  return Expr::from_node(std::move(n));
}

inline Expr make_node(Op op, const Expr& a) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = a.node();
  n->var_mask = a.node()->var_mask;
  return Expr::from_node(std::move(n));
}

inline bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

inline bool foldable(double v) { return std::isfinite(v); }

}  // namespace detail

inline Expr operator-(const Expr& a) {
  if (a.is_const()) return Expr(-a.value());
  if (a.op() == Op::Neg) return a.arg();
  return detail::make_node(Op::Neg, a);
}

inline Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_const(0.0)) return b;
  if (b.is_const(0.0)) return a;
  if (a.is_const() && b.is_const()) return Expr(a.value() + b.value());
  return detail::make_node(Op::Add, a, b);
}

inline Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_const(0.0)) return a;
  if (a.is_const(0.0)) return -b;
  if (a.is_const() && b.is_const()) return Expr(a.value() - b.value());
  return detail::make_node(Op::Sub, a, b);
}

inline Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_const(0.0) || b.is_const(0.0)) return Expr(0.0);
  if (a.is_const(1.0)) return b;
  if (b.is_const(1.0)) return a;
  if (a.is_const(-1.0)) return -b;
  if (b.is_const(-1.0)) return -a;
  if (a.is_const() && b.is_const()) return Expr(a.value() * b.value());
  return detail::make_node(Op::Mul, a, b);
}

inline Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_const(0.0) && !b.is_const(0.0)) return Expr(0.0);
  if (b.is_const(1.0)) return a;
  if (b.is_const(-1.0)) return -a;
  if (a.is_const() && b.is_const() && b.value() != 0.0) return Expr(a.value() / b.value());
  return detail::make_node(Op::Div, a, b);
}

inline Expr pow(const Expr& base, const Expr& exponent) {
  if (exponent.is_const(0.0)) return Expr(1.0);
  if (exponent.is_const(1.0)) return base;
  if (base.is_const(1.0)) return Expr(1.0);
  if (base.is_const() && exponent.is_const()) {
    const double b = base.value();
    const double e = exponent.value();
    if ((b > 0.0 || detail::is_integer(e)) && !(b == 0.0 && e < 0.0)) {
      const double r = std::pow(b, e);
      if (detail::foldable(r)) return Expr(r);
    }
  }
  return detail::make_node(Op::Pow, base, exponent);
}

inline Expr operator+(double a, const Expr& b) { return Expr(a) + b; }
inline Expr operator+(const Expr& a, double b) { return a + Expr(b); }
inline Expr operator-(double a, const Expr& b) { return Expr(a) - b; }
inline Expr operator-(const Expr& a, double b) { return a - Expr(b); }
inline Expr operator*(double a, const Expr& b) { return Expr(a) * b; }
inline Expr operator*(const Expr& a, double b) { return a * Expr(b); }
inline Expr operator/(double a, const Expr& b) { return Expr(a) / b; }
inline Expr operator/(const Expr& a, double b) { return a / Expr(b); }
inline Expr pow(const Expr& base, double exponent) { return pow(base, Expr(exponent)); }
inline Expr pow(double base, const Expr& exponent) { return pow(Expr(base), exponent); }

namespace detail {

inline Expr unary(Op op, const Expr& a) {
  if (a.is_const()) {
    const double v = a.value();
    double r = 0.0;
    bool ok = true;
    switch (op) {
      case Op::Exp: r = std::exp(v); break;
      case Op::Ln: ok = v > 0.0; r = ok ? std::log(v) : 0.0; break;
      case Op::Sqrt: ok = v >= 0.0; r = ok ? std::sqrt(v) : 0.0; break;
      case Op::Sin: r = std::sin(v); break;
      case Op::Cos: r = std::cos(v); break;
      case Op::Tanh: r = std::tanh(v); break;
      case Op::Atan: r = std::atan(v); break;
      default: ok = false;
    }
    if (ok && foldable(r)) return Expr(r);
  }
  return make_node(op, a);
}

}  // namespace detail

inline Expr exp(const Expr& a) { return detail::unary(Op::Exp, a); }
inline Expr ln(const Expr& a) { return detail::unary(Op::Ln, a); }
inline Expr sqrt(const Expr& a) { return detail::unary(Op::Sqrt, a); }
inline Expr sin(const Expr& a) { return detail::unary(Op::Sin, a); }
inline Expr cos(const Expr& a) { return detail::unary(Op::Cos, a); }
inline Expr tanh(const Expr& a) { return detail::unary(Op::Tanh, a); }
inline Expr atan(const Expr& a) { return detail::unary(Op::Atan, a); }

inline Expr apply_special(std::shared_ptr<const SpecialFunction> f, const Expr& arg) {
  if (arg.is_const()) {
    const double r = f->evaluate(arg.value());
    if (std::isfinite(r)) return Expr(r);
  }
  auto n = std::make_shared<Node>();
  n->op = Op::Special;
  n->lhs = arg.node();
  n->special = std::move(f);
  n->var_mask = arg.node()->var_mask;
  return Expr::from_node(std::move(n));
}

inline Expr var(const std::string& name) { return Expr::variable(name); }

// Canonical variable handles.
inline Expr t_var() { return Expr::variable("t"); }
inline Expr x_var() { return Expr::variable("x"); }
inline Expr u_var() { return Expr::variable("u"); }
inline Expr omega_var() { return Expr::variable("omega"); }

// ---------------------------------------------------------------------------
// Structural queries

inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.id() == b.id()) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::Const:
      return a.value() == b.value() || (std::isnan(a.value()) && std::isnan(b.value()));
    case Op::Var:
      return a.name() == b.name();
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow:
      return structurally_equal(a.lhs(), b.lhs()) && structurally_equal(a.rhs(), b.rhs());
    case Op::Special:
      return a.special() == b.special() && structurally_equal(a.arg(), b.arg());
    default:
      return structurally_equal(a.arg(), b.arg());
  }
}

inline std::set<std::string> free_variables(const Expr& e) {
  std::set<std::string> out;
  std::set<const Node*> seen;
  std::function<void(const Node*)> walk = [&](const Node* n) {
    if (!n || n->var_mask == 0 || !seen.insert(n).second) return;
    if (n->op == Op::Var) {
      out.insert(n->name);
      return;
    }
    walk(n->lhs.get());
    walk(n->rhs.get());
  };
  walk(e.id());
  return out;
}

// Number of distinct DAG nodes.
inline std::size_t node_count(const Expr& e) {
  std::set<const Node*> seen;
  std::function<void(const Node*)> walk = [&](const Node* n) {
    if (!n || !seen.insert(n).second) return;
    walk(n->lhs.get());
    walk(n->rhs.get());
  };
  walk(e.id());
  return seen.size();
}

// ---------------------------------------------------------------------------
// Substitution (simultaneous) and differentiation

using Substitution = std::map<std::string, Expr>;

inline Expr rebuild(const Expr& e, const Expr& l, const Expr& r) {
  switch (e.op()) {
    case Op::Add: return l + r;
    case Op::Sub: return l - r;
    case Op::Mul: return l * r;
    case Op::Div: return l / r;
    case Op::Pow: return pow(l, r);
    case Op::Neg: return -l;
    case Op::Special: return apply_special(e.special(), l);
    default: return detail::unary(e.op(), l);
  }
}

inline Expr substitute(const Expr& e, const Substitution& subs) {
  if (subs.empty()) return e;
  std::uint64_t mask = 0;
  for (const auto& [name, value] : subs) mask |= detail::variable_bit(name);
  std::unordered_map<const Node*, Expr> memo;
  std::function<Expr(const Expr&)> go = [&](const Expr& n) -> Expr {
    if ((n.node()->var_mask & mask) == 0) return n;
    if (auto it = memo.find(n.id()); it != memo.end()) return it->second;
    Expr out;
    if (n.op() == Op::Var) {
      auto it = subs.find(n.name());
      out = it == subs.end() ? n : it->second;
    } else if (n.op() == Op::Add || n.op() == Op::Sub || n.op() == Op::Mul ||
               n.op() == Op::Div || n.op() == Op::Pow) {
      out = rebuild(n, go(n.lhs()), go(n.rhs()));
    } else {
      out = rebuild(n, go(n.arg()), Expr());
    }
    memo.emplace(n.id(), out);
    return out;
  };
  return go(e);
}

inline Expr substitute(const Expr& e, const std::string& name, const Expr& value) {
  return substitute(e, Substitution{{name, value}});
}

inline Expr substitute(const Expr& e, const std::map<std::string, double>& values) {
  Substitution s;
  for (const auto& [k, v] : values) s.emplace(k, Expr(v));
  return substitute(e, s);
}

inline Expr diff(const Expr& e, const std::string& v) {
  std::unordered_map<const Node*, Expr> memo;
  std::function<Expr(const Expr&)> d = [&](const Expr& n) -> Expr {
    if (!n.depends_on(v)) return Expr(0.0);
    if (auto it = memo.find(n.id()); it != memo.end()) return it->second;
    Expr out;
    switch (n.op()) {
      case Op::Const:
        out = Expr(0.0);
        break;
      case Op::Var:
        out = Expr(n.name() == v ? 1.0 : 0.0);
        break;
      case Op::Add:
        out = d(n.lhs()) + d(n.rhs());
        break;
      case Op::Sub:
        out = d(n.lhs()) - d(n.rhs());
        break;
      case Op::Neg:
        out = -d(n.arg());
        break;
      case Op::Mul:
        out = d(n.lhs()) * n.rhs() + n.lhs() * d(n.rhs());
        break;
      case Op::Div: {
        const Expr a = n.lhs(), b = n.rhs();
        const Expr da = d(a), db = d(b);
        if (!b.depends_on(v)) {
          out = da / b;
        } else {
          out = (da * b - a * db) / pow(b, 2.0);
        }
        break;
      }
      case Op::Pow: {
        const Expr b = n.lhs(), c = n.rhs();
        if (!c.depends_on(v)) {
          out = c * pow(b, c - Expr(1.0)) * d(b);
        } else {
          out = n * (d(c) * ln(b) + c * d(b) / b);
        }
        break;
      }
      case Op::Exp:
        out = n * d(n.arg());
        break;
      case Op::Ln:
        out = d(n.arg()) / n.arg();
        break;
      case Op::Sqrt:
        out = d(n.arg()) / (Expr(2.0) * n);
        break;
      case Op::Sin:
        out = cos(n.arg()) * d(n.arg());
        break;
      case Op::Cos:
        out = -(sin(n.arg()) * d(n.arg()));
        break;
      case Op::Tanh:
        out = (Expr(1.0) - pow(n, 2.0)) * d(n.arg());
        break;
      case Op::Atan:
        out = d(n.arg()) / (Expr(1.0) + pow(n.arg(), 2.0));
        break;
      case Op::Special:
        out = n.special()->derivative(n.arg()) * d(n.arg());
        break;
    }
    memo.emplace(n.id(), out);
    return out;
  };
  return d(e);
}

inline Expr diff(const Expr& e, const std::string& v, int order) {
  if (order < 1) throw std::invalid_argument("diff: order must be >= 1");
  Expr out = e;
  for (int k = 0; k < order; ++k) out = diff(out, v);
  return out;
}

// ---------------------------------------------------------------------------
// Printing. The output re-parses to a structurally equal tree.

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

inline int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    case Op::Const:
      return e.value() < 0.0 || std::signbit(e.value()) ? 3 : 5;
    default:
      return 5;
  }
}

inline void print(std::string& out, const Expr& e);

inline void print_child(std::string& out, const Expr& child, bool parens) {
  if (parens) out += '(';
  print(out, child);
  if (parens) out += ')';
}

inline void print(std::string& out, const Expr& e) {
  switch (e.op()) {
    case Op::Const:
      out += format_number(e.value());
      return;
    case Op::Var:
      out += e.name();
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const int p = precedence(e);
      const char* sym = e.op() == Op::Add ? " + " : e.op() == Op::Sub ? " - " : e.op() == Op::Mul ? "*" : "/";
      const Expr l = e.lhs(), r = e.rhs();
      print_child(out, l, precedence(l) < p || precedence(l) == 3);
      out += sym;
      print_child(out, r, precedence(r) <= p || precedence(r) == 3);
      return;
    }
    case Op::Pow: {
      const Expr l = e.lhs(), r = e.rhs();
      print_child(out, l, precedence(l) <= 4);
      out += '^';
      print_child(out, r, precedence(r) < 5);
      return;
    }
    case Op::Neg: {
      const Expr a = e.arg();
      out += '-';
      print_child(out, a, precedence(a) < 4);
      return;
    }
    case Op::Special:
      out += e.special()->name();
      out += '(';
      print(out, e.arg());
      out += ')';
      return;
    default:
      out += function_name(e.op());
      out += '(';
      print(out, e.arg());
      out += ')';
      return;
  }
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print(out, e);
  return out;
}

inline std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

}  // namespace kawahara
