#pragma once

// Numerical evaluation: compiled tapes with common-subexpression sharing,
// low-discrepancy sampling and the numerical zero test.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "kawahara/expr.hpp"

namespace kawahara {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnboundVariable : public EvalError {
 public:
  explicit UnboundVariable(std::string name)
      : EvalError("unbound variable '" + name + "'"), name_(std::move(name)) {}
  const std::string& variable() const { return name_; }

 private:
  std::string name_;
};

class DomainError : public EvalError {
 public:
  DomainError(const std::string& what, std::string subexpression)
      : EvalError(what + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}
  const std::string& subexpression() const { return subexpression_; }

 private:
  std::string subexpression_;
};

class DomainTooSingular : public EvalError {
 public:
  using EvalError::EvalError;
};

using Bindings = std::map<std::string, double>;

class Program {
 public:
  Program() = default;

  Program(const std::vector<Expr>& outputs, std::vector<std::string> variables)
      : variables_(std::move(variables)), roots_(outputs) {
    std::unordered_map<const Node*, std::uint32_t> slots;
    std::map<std::tuple<Op, std::uint32_t, std::uint32_t, std::uint64_t, const void*>, std::uint32_t> cse;
    std::function<std::uint32_t(const Expr&)> emit = [&](const Expr& e) -> std::uint32_t {
      if (auto it = slots.find(e.id()); it != slots.end()) return it->second;
      Instruction ins;
      ins.op = e.op();
      ins.source = e.node();
      std::uint64_t bits = 0;
      switch (e.op()) {
        case Op::Const:
          ins.constant = e.value();
          std::memcpy(&bits, &ins.constant, sizeof bits);
          break;
        case Op::Var: {
          auto it = std::find(variables_.begin(), variables_.end(), e.name());
          if (it == variables_.end()) throw UnboundVariable(e.name());
          ins.a = static_cast<std::uint32_t>(it - variables_.begin());
          break;
        }
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Pow:
          ins.a = emit(e.lhs());
          ins.b = emit(e.rhs());
          break;
        case Op::Special:
          ins.a = emit(e.arg());
          ins.special = e.special().get();
          break;
        default:
          ins.a = emit(e.arg());
          break;
      }
      auto key = std::make_tuple(ins.op, ins.a, ins.b, bits, static_cast<const void*>(ins.special));
      std::uint32_t slot;
      if (auto it = cse.find(key); it != cse.end()) {
        slot = it->second;
      } else {
        slot = static_cast<std::uint32_t>(code_.size());
        code_.push_back(std::move(ins));
        cse.emplace(key, slot);
      }
      slots.emplace(e.id(), slot);
      return slot;
    };
    for (const auto& e : outputs) outputs_.push_back(emit(e));
  }

  Program(const Expr& output, std::vector<std::string> variables)
      : Program(std::vector<Expr>{output}, std::move(variables)) {}

  const std::vector<std::string>& variables() const { return variables_; }
  std::size_t output_count() const { return outputs_.size(); }
  std::size_t size() const { return code_.size(); }

  void evaluate(std::span<const double> inputs, std::span<double> outputs) const {
    std::vector<double> regs(code_.size());
    run(inputs, regs);
    for (std::size_t k = 0; k < outputs_.size(); ++k) outputs[k] = regs[outputs_[k]];
  }

  std::vector<double> evaluate(std::span<const double> inputs) const {
    std::vector<double> out(outputs_.size());
    evaluate(inputs, out);
    return out;
  }

  double operator()(std::span<const double> inputs) const {
    std::vector<double> regs(code_.size());
    run(inputs, regs);
    return regs[outputs_.at(0)];
  }

  double operator()(std::initializer_list<double> inputs) const {
    return (*this)(std::span<const double>(inputs.begin(), inputs.size()));
  }

  struct Scaled {
    double value;
    double scale;  // largest magnitude of any intermediate value
  };

  Scaled evaluate_scaled(std::span<const double> inputs, std::size_t output = 0) const {
    std::vector<double> regs(code_.size());
    run(inputs, regs);
    double scale = 0.0;
    for (double r : regs) scale = std::max(scale, std::abs(r));
    return {regs[outputs_.at(output)], scale};
  }

 private:
  struct Instruction {
    Op op = Op::Const;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double constant = 0.0;
    const SpecialFunction* special = nullptr;
    std::shared_ptr<const Node> source;
  };

  [[noreturn]] static void domain_fail(const std::string& what, const Instruction& ins) {
    std::string text = to_string(Expr::from_node(ins.source));
    if (text.size() > 240) text = text.substr(0, 237) + "...";
    throw DomainError(what, text);
  }

  void run(std::span<const double> in, std::vector<double>& r) const {
    if (in.size() < variables_.size()) throw std::invalid_argument("Program: too few inputs");
    for (std::size_t i = 0; i < code_.size(); ++i) {
      const Instruction& ins = code_[i];
      double v = 0.0;
      switch (ins.op) {
        case Op::Const: v = ins.constant; break;
        case Op::Var: v = in[ins.a]; break;
        case Op::Add: v = r[ins.a] + r[ins.b]; break;
        case Op::Sub: v = r[ins.a] - r[ins.b]; break;
        case Op::Mul: v = r[ins.a] * r[ins.b]; break;
        case Op::Div:
          if (r[ins.b] == 0.0) domain_fail("division by zero", ins);
          v = r[ins.a] / r[ins.b];
          break;
        case Op::Pow: {
          const double b = r[ins.a], e = r[ins.b];
          if (b < 0.0 && !detail::is_integer(e)) domain_fail("negative base with non-integer exponent", ins);
          if (b == 0.0 && e < 0.0) domain_fail("zero base with negative exponent", ins);
          v = e == 2.0 ? b * b : std::pow(b, e);
          break;
        }
        case Op::Neg: v = -r[ins.a]; break;
        case Op::Exp: v = std::exp(r[ins.a]); break;
        case Op::Ln:
          if (r[ins.a] <= 0.0) domain_fail("logarithm of non-positive value", ins);
          v = std::log(r[ins.a]);
          break;
        case Op::Sqrt:
          if (r[ins.a] < 0.0) domain_fail("square root of negative value", ins);
          v = std::sqrt(r[ins.a]);
          break;
        case Op::Sin: v = std::sin(r[ins.a]); break;
        case Op::Cos: v = std::cos(r[ins.a]); break;
        case Op::Tanh: v = std::tanh(r[ins.a]); break;
        case Op::Atan: v = std::atan(r[ins.a]); break;
        case Op::Special: v = ins.special->evaluate(r[ins.a]); break;
      }
      if (!std::isfinite(v)) domain_fail("non-finite value", ins);
      r[i] = v;
    }
  }

  std::vector<std::string> variables_;
  std::vector<Expr> roots_;
  std::vector<Instruction> code_;
  std::vector<std::uint32_t> outputs_;
};

// Evaluates e with the given bindings; every free variable must be bound.
inline double eval(const Expr& e, const Bindings& bindings) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& v : free_variables(e)) {
    auto it = bindings.find(v);
    if (it == bindings.end()) throw UnboundVariable(v);
    names.push_back(v);
    values.push_back(it->second);
  }
  return Program(e, names)(values);
}

inline double eval(const Expr& e) { return eval(e, Bindings{}); }

// ---------------------------------------------------------------------------
// Sampling

struct Domain {
  std::string variable = "t";
  double lo = 1.0;
  double hi = 2.0;
  std::vector<double> exclusions;

  void validate() const {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
      throw std::invalid_argument("Domain: require finite lo < hi for " + variable);
  }
  bool excluded(double v) const {
    const double w = 1e-9 * (hi - lo);
    return std::any_of(exclusions.begin(), exclusions.end(), [&](double e) { return std::abs(v - e) <= w; });
  }
};

inline double radical_inverse(unsigned index, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * (index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

// Van der Corput points strictly inside the domain.
inline std::vector<double> sample_points(const Domain& d, int count) {
  d.validate();
  std::vector<double> out;
  out.reserve(count);
  for (unsigned i = 1; static_cast<int>(out.size()) < count && i < 64u * count + 64u; ++i) {
    const double v = d.lo + (d.hi - d.lo) * radical_inverse(i, 2);
    if (!d.excluded(v)) out.push_back(v);
  }
  return out;
}

inline std::atomic<double>& zero_tolerance_storage() {
  static std::atomic<double> tol{1e-9};
  return tol;
}

inline double zero_tolerance() { return zero_tolerance_storage().load(); }
inline void set_zero_tolerance(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("zero tolerance must be positive");
  zero_tolerance_storage().store(eps);
}

struct ZeroTest {
  bool zero = false;
  int evaluated = 0;
  int skipped = 0;
  double worst_ratio = 0.0;  // max |value| / (1 + scale)
};

namespace detail {

inline ZeroTest zero_test_points(const Expr& e, const std::vector<std::string>& vars,
                                 const std::vector<std::vector<double>>& points, const Bindings& params,
                                 double eps) {
  std::vector<std::string> names = vars;
  std::vector<double> fixed;
  for (const auto& v : free_variables(e)) {
    if (std::find(vars.begin(), vars.end(), v) != vars.end()) continue;
    auto it = params.find(v);
    if (it == params.end()) throw UnboundVariable(v);
    names.push_back(v);
    fixed.push_back(it->second);
  }
  Program prog(e, names);
  ZeroTest out;
  std::vector<double> in(names.size());
  std::copy(fixed.begin(), fixed.end(), in.begin() + vars.size());
  for (const auto& p : points) {
    std::copy(p.begin(), p.end(), in.begin());
    try {
      auto s = prog.evaluate_scaled(in);
      ++out.evaluated;
      out.worst_ratio = std::max(out.worst_ratio, std::abs(s.value) / (1.0 + s.scale));
    } catch (const DomainError&) {
      ++out.skipped;
    }
  }
  if (out.evaluated * 2 < static_cast<int>(points.size()))
    throw DomainTooSingular("zero test: more than half of the sample points are singular");
  out.zero = out.worst_ratio <= eps;
  return out;
}

}  // namespace detail

inline ZeroTest zero_test(const Expr& e, const Domain& d, const Bindings& params = {},
                          std::optional<double> eps = std::nullopt, int count = 64) {
  std::vector<std::vector<double>> pts;
  for (double v : sample_points(d, count)) pts.push_back({v});
  return detail::zero_test_points(e, {d.variable}, pts, params, eps.value_or(zero_tolerance()));
}

// Two-dimensional Halton sampling (bases 2 and 3).
inline ZeroTest zero_test_grid(const Expr& e, const Domain& d1, const Domain& d2, const Bindings& params = {},
                          std::optional<double> eps = std::nullopt, int count = 64) {
  d1.validate();
  d2.validate();
  std::vector<std::vector<double>> pts;
  for (unsigned i = 1; static_cast<int>(pts.size()) < count && i < 64u * count; ++i) {
    const double a = d1.lo + (d1.hi - d1.lo) * radical_inverse(i, 2);
    const double b = d2.lo + (d2.hi - d2.lo) * radical_inverse(i, 3);
    if (d1.excluded(a) || d2.excluded(b)) continue;
    pts.push_back({a, b});
  }
  return detail::zero_test_points(e, {d1.variable, d2.variable}, pts, params, eps.value_or(zero_tolerance()));
}

inline bool is_zero(const Expr& e, const Domain& d, const Bindings& params = {},
                    std::optional<double> eps = std::nullopt) {
  if (e.is_const()) return std::abs(e.value()) <= eps.value_or(zero_tolerance());
  return zero_test(e, d, params, eps).zero;
}

inline bool is_zero_grid(const Expr& e, const Domain& d1, const Domain& d2, const Bindings& params = {},
                    std::optional<double> eps = std::nullopt) {
  if (e.is_const()) return std::abs(e.value()) <= eps.value_or(zero_tolerance());
  return zero_test_grid(e, d1, d2, params, eps).zero;
}

// Sup of |e| over an N x N midpoint grid, with the largest intermediate
// magnitude seen as scale.
struct GridResidual {
  double residual = 0.0;
  double scale = 0.0;
  int flagged = 0;  // points where evaluation failed
  double relative() const { return residual / (1.0 + scale); }
  bool ok(double tol = 1e-9) const { return residual <= tol * (1.0 + scale); }
};

inline GridResidual grid_residual(const std::vector<Expr>& exprs, const Domain& d1, const Domain& d2, int N = 16,
                                  const Bindings& params = {}) {
  std::vector<std::string> vars{d1.variable, d2.variable};
  std::vector<double> fixed;
  for (const auto& [k, v] : params) {
    if (k == d1.variable || k == d2.variable) continue;
    vars.push_back(k);
    fixed.push_back(v);
  }
  std::vector<Program> progs;
  for (const Expr& e : exprs) progs.emplace_back(e, vars);
  std::vector<double> in(vars.size());
  std::copy(fixed.begin(), fixed.end(), in.begin() + 2);
  GridResidual out;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      in[0] = d1.lo + (d1.hi - d1.lo) * (i + 0.5) / N;
      in[1] = d2.lo + (d2.hi - d2.lo) * (j + 0.5) / N;
      for (const Program& p : progs) {
        try {
          auto r = p.evaluate_scaled(in);
          out.residual = std::max(out.residual, std::abs(r.value));
          out.scale = std::max(out.scale, r.scale);
        } catch (const DomainError&) {
          ++out.flagged;
        }
      }
    }
  }
  return out;
}

// Relative agreement used by tests and verifiers.
inline bool close(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

}  // namespace kawahara
