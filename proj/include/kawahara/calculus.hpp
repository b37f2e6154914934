#pragma once

// Antiderivatives, quadrature-backed integrals and inverses of time maps.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kawahara/eval.hpp"
#include "kawahara/expr.hpp"

namespace kawahara {

namespace detail {

// Coefficients of e as a polynomial in v, or nullopt.
inline std::optional<std::vector<Expr>> as_polynomial(const Expr& e, const std::string& v) {
  if (!e.depends_on(v)) return std::vector<Expr>{e};
  auto add = [](std::vector<Expr> a, const std::vector<Expr>& b, double sign) {
    if (a.size() < b.size()) a.resize(b.size(), Expr(0.0));
    for (std::size_t i = 0; i < b.size(); ++i) a[i] = sign > 0 ? a[i] + b[i] : a[i] - b[i];
    return a;
  };
  auto mul = [](const std::vector<Expr>& a, const std::vector<Expr>& b) {
    std::vector<Expr> out(a.size() + b.size() - 1, Expr(0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) out[i + j] = out[i + j] + a[i] * b[j];
    return out;
  };
  switch (e.op()) {
    case Op::Var:
      return std::vector<Expr>{Expr(0.0), Expr(1.0)};
    case Op::Add:
    case Op::Sub: {
      auto a = as_polynomial(e.lhs(), v), b = as_polynomial(e.rhs(), v);
      if (!a || !b) return std::nullopt;
      return add(*a, *b, e.op() == Op::Add ? 1.0 : -1.0);
    }
    case Op::Neg: {
      auto a = as_polynomial(e.arg(), v);
      if (!a) return std::nullopt;
      for (auto& c : *a) c = -c;
      return a;
    }
    case Op::Mul: {
      auto a = as_polynomial(e.lhs(), v), b = as_polynomial(e.rhs(), v);
      if (!a || !b) return std::nullopt;
      return mul(*a, *b);
    }
    case Op::Div: {
      if (e.rhs().depends_on(v)) return std::nullopt;
      auto a = as_polynomial(e.lhs(), v);
      if (!a) return std::nullopt;
      for (auto& c : *a) c = c / e.rhs();
      return a;
    }
    case Op::Pow: {
      const Expr k = e.rhs();
      if (!k.is_const() || !is_integer(k.value()) || k.value() < 0 || k.value() > 12) return std::nullopt;
      auto b = as_polynomial(e.lhs(), v);
      if (!b) return std::nullopt;
      std::vector<Expr> out{Expr(1.0)};
      for (int i = 0; i < static_cast<int>(k.value()); ++i) out = mul(out, *b);
      return out;
    }
    default:
      return std::nullopt;
  }
}

// Slope of e if e is affine in v (structurally), else nullopt.
inline std::optional<Expr> affine_slope(const Expr& e, const std::string& v) {
  if (!e.depends_on(v)) return std::nullopt;
  Expr s = diff(e, v);
  if (s.depends_on(v)) return std::nullopt;
  return s;
}

}  // namespace detail

// Symbolic antiderivative for polynomials, powers, exp, sin and cos of
// affine arguments, and constant multiples and sums of these.
inline std::optional<Expr> antiderivative(const Expr& e, const std::string& v) {
  const Expr x = Expr::variable(v);
  if (!e.depends_on(v)) return e * x;
  switch (e.op()) {
    case Op::Var:
      return pow(x, 2.0) / 2.0;
    case Op::Add:
    case Op::Sub: {
      auto a = antiderivative(e.lhs(), v), b = antiderivative(e.rhs(), v);
      if (!a || !b) return std::nullopt;
      return e.op() == Op::Add ? *a + *b : *a - *b;
    }
    case Op::Neg: {
      auto a = antiderivative(e.arg(), v);
      if (!a) return std::nullopt;
      return -*a;
    }
    case Op::Mul: {
      if (!e.lhs().depends_on(v)) {
        auto b = antiderivative(e.rhs(), v);
        if (b) return e.lhs() * *b;
        return std::nullopt;
      }
      if (!e.rhs().depends_on(v)) {
        auto a = antiderivative(e.lhs(), v);
        if (a) return *a * e.rhs();
        return std::nullopt;
      }
      break;
    }
    case Op::Div: {
      const Expr a = e.lhs(), b = e.rhs();
      if (!b.depends_on(v)) {
        auto fa = antiderivative(a, v);
        if (fa) return *fa / b;
        return std::nullopt;
      }
      if (a.depends_on(v)) break;
      if (auto s = detail::affine_slope(b, v)) return a * ln(b) / *s;
      if (b.op() == Op::Pow && !b.rhs().depends_on(v)) {
        auto r = antiderivative(pow(b.lhs(), -b.rhs()), v);
        if (r) return a * *r;
      }
      if (b.op() == Op::Exp) {
        auto r = antiderivative(exp(-b.arg()), v);
        if (r) return a * *r;
      }
      if (b.op() == Op::Sqrt) {
        auto r = antiderivative(pow(b.arg(), -0.5), v);
        if (r) return a * *r;
      }
      return std::nullopt;
    }
    case Op::Pow: {
      const Expr b = e.lhs(), c = e.rhs();
      if (!c.depends_on(v)) {
        if (auto s = detail::affine_slope(b, v)) {
          if (c.is_const(-1.0)) return ln(b) / *s;
          return pow(b, c + 1.0) / ((c + 1.0) * *s);
        }
        break;
      }
      if (!b.depends_on(v)) {
        if (auto s = detail::affine_slope(c, v)) return e / (ln(b) * *s);
      }
      break;
    }
    case Op::Exp:
      if (auto s = detail::affine_slope(e.arg(), v)) return e / *s;
      return std::nullopt;
    case Op::Sin:
      if (auto s = detail::affine_slope(e.arg(), v)) return -cos(e.arg()) / *s;
      return std::nullopt;
    case Op::Cos:
      if (auto s = detail::affine_slope(e.arg(), v)) return sin(e.arg()) / *s;
      return std::nullopt;
    case Op::Sqrt:
      if (auto s = detail::affine_slope(e.arg(), v)) return 2.0 * pow(e.arg(), 1.5) / (3.0 * *s);
      return std::nullopt;
    default:
      return std::nullopt;
  }
  if (auto p = detail::as_polynomial(e, v)) {
    Expr out(0.0);
    for (std::size_t k = 0; k < p->size(); ++k)
      out = out + (*p)[k] * pow(x, static_cast<double>(k + 1)) / static_cast<double>(k + 1);
    return out;
  }
  return std::nullopt;
}

// Adaptive Gauss-Kronrod quadrature (absolute tolerance, relative fallback).
inline double quadrature(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-12) {
  if (a == b) return 0.0;
  double err = 0.0;
  const double r =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 20, 1e-13, &err);
  if (!std::isfinite(r)) throw EvalError("quadrature: non-finite result");
  if (err > abs_tol && err > 1e-10 * std::abs(r)) throw EvalError("quadrature: tolerance not met");
  return r;
}

// s -> integral of f(v) dv from base to s, evaluated numerically.
class IntegralFunction : public SpecialFunction {
 public:
  IntegralFunction(Expr integrand, std::string variable, double base)
      : integrand_(std::move(integrand)),
        variable_(std::move(variable)),
        base_(base),
        program_(integrand_, {variable_}) {
    auto fv = free_variables(integrand_);
    fv.erase(variable_);
    if (!fv.empty()) throw UnboundVariable(*fv.begin());
  }

  std::string name() const override { return "integral[" + to_string(integrand_) + "]"; }

  double evaluate(double s) const override {
    try {
      return quadrature([&](double tau) { return program_({tau}); }, base_, s);
    } catch (const DomainError&) {
      throw;
    } catch (const EvalError& e) {
      throw DomainError(e.what(), name());
    }
  }

  Expr derivative(const Expr& arg) const override { return substitute(integrand_, variable_, arg); }

 private:
  Expr integrand_;
  std::string variable_;
  double base_;
  Program program_;
};

// Antiderivative of e in v, falling back to quadrature from base.
inline Expr integral(const Expr& e, const std::string& v, double base) {
  if (auto a = antiderivative(e, v)) return *a;
  return apply_special(std::make_shared<IntegralFunction>(e, v, base), Expr::variable(v));
}

// Numerical inverse of a strictly monotone map T on [lo, hi].
class InverseFunction : public SpecialFunction, public std::enable_shared_from_this<InverseFunction> {
 public:
  InverseFunction(Expr forward, std::string variable, double lo, double hi)
      : forward_(std::move(forward)),
        variable_(std::move(variable)),
        lo_(lo),
        hi_(hi),
        program_(std::vector<Expr>{forward_, diff(forward_, variable_)}, {variable_}) {
    f_lo_ = program_({lo_});
    f_hi_ = program_({hi_});
    if (f_lo_ == f_hi_) throw EvalError("inverse: map is not monotone on the domain");
  }

  std::string name() const override { return "inverse[" + to_string(forward_) + "]"; }

  double evaluate(double s) const override {
    const double a = std::min(f_lo_, f_hi_), b = std::max(f_lo_, f_hi_);
    const double slack = 1e-12 * std::max(1.0, b - a);
    if (s < a - slack || s > b + slack) throw DomainError("argument outside the image of the time map", name());
    double guess = lo_ + (hi_ - lo_) * (s - f_lo_) / (f_hi_ - f_lo_);
    guess = std::clamp(guess, lo_, hi_);
    std::uintmax_t iters = 200;
    return boost::math::tools::newton_raphson_iterate(
        [&](double t) {
          auto r = program_.evaluate(std::vector<double>{t});
          return std::make_pair(r[0] - s, r[1]);
        },
        guess, lo_, hi_, std::numeric_limits<double>::digits - 4, iters);
  }

  Expr derivative(const Expr& arg) const override {
    const Expr inner = apply_special(shared_from_this(), arg);
    return 1.0 / substitute(diff(forward_, variable_), variable_, inner);
  }

 private:
  Expr forward_;
  std::string variable_;
  double lo_, hi_;
  Program program_;
  double f_lo_ = 0.0, f_hi_ = 0.0;
};

struct TimeInverse {
  Expr inverse;      // expression in the same variable
  std::string kind;  // affine, exp, power, log, mobius or numeric
};

// Inverse of a time map T(t) on the domain. Closed forms are recognised by
// fitting affine, exponential, power, logarithmic and Moebius templates
// and verifying them with the zero test; otherwise a numerical inverse is
// returned.
inline TimeInverse invert_time_map(const Expr& T, const Domain& dom) {
  const std::string& v = dom.variable;
  const Expr t = Expr::variable(v);
  if (!T.depends_on(v)) throw EvalError("time map does not depend on " + v);
  const Expr T1 = diff(T, v), T2 = diff(T1, v);
  const double ts = dom.lo + 0.5 * (dom.hi - dom.lo) * (1.0 + 1.0 / std::sqrt(5.0));
  auto at = [&](const Expr& e) { return eval(e, Bindings{{v, ts}}); };
  auto zero = [&](const Expr& e) {
    try {
      return is_zero(e, dom);
    } catch (const EvalError&) {
      return false;
    }
  };

  // Candidate forward maps are confirmed by relative agreement with T.
  Program forward(T, {v});
  std::vector<double> probe = sample_points(dom, 32), tv(probe.size());
  double tmax = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    tv[i] = forward({probe[i]});
    tmax = std::max(tmax, std::abs(tv[i]));
  }
  auto fits = [&](const Expr& cand) {
    Program c(cand, {v});
    for (std::size_t i = 0; i < probe.size(); ++i)
      if (!(std::abs(c({probe[i]}) - tv[i]) <= 1e-11 * tmax)) return false;
    return true;
  };

  try {
    if (zero(T2)) {
      const double a = at(T1), b = at(T) - a * ts;
      if (fits(a * t + b)) return {(t - b) / a, "affine"};
    }
    {
      const double k = at(T2) / at(T1);
      if (k != 0.0 && zero(T2 - k * T1)) {
        const double c = at(T1) / (k * std::exp(k * ts));
        const double b = at(T) - c * std::exp(k * ts);
        if (fits(c * exp(k * t) + b)) return {ln((t - b) / c) / k, "exp"};
      }
    }
    if (dom.lo > 0.0) {
      const double q = ts * at(T2) / at(T1);
      if (zero(t * T2 - q * T1)) {
        const double p = q + 1.0;
        if (std::abs(p) > 1e-12) {
          const double c = at(T1) / (p * std::pow(ts, p - 1.0));
          const double b = at(T) - c * std::pow(ts, p);
          if (fits(c * pow(t, p) + b)) return {pow((t - b) / c, 1.0 / p), "power"};
        } else {
          const double c = ts * at(T1);
          const double b = at(T) - c * std::log(ts);
          if (fits(c * ln(t) + b)) return {exp((t - b) / c), "log"};
        }
      }
    }
    {
      const Expr m = -2.0 * T1 / T2;
      if (zero(diff(m, v) - 1.0)) {
        const double e = at(m) - ts;
        const double B = -at(T1) * (ts + e) * (ts + e);
        const double A = at(T) - B / (ts + e);
        if (fits(A + B / (t + e))) return {B / (t - A) - e, "mobius"};
      }
    }
  } catch (const EvalError&) {
  }
  auto inv = std::make_shared<InverseFunction>(T, v, dom.lo, dom.hi);
  return {apply_special(inv, t), "numeric"};
}

}  // namespace kawahara
