#pragma once

// Closed-form solution families, exact residual evaluation and the two
// zero-order conservation laws.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "kawahara/calculus.hpp"
#include "kawahara/eval.hpp"
#include "kawahara/model.hpp"

namespace kawahara {

class SolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExactSolution {
  KawaharaEq eq;  // the equation the solution targets
  ClosedFormSolution solution;
  std::string family;
  std::map<std::string, double> parameters;

  const Expr& u() const { return solution.u; }
};

// Rectangular sampling grid, endpoints included.
struct SampleGrid {
  Domain t{"t", 1.0, 2.0, {}};
  Domain x{"x", -5.0, 5.0, {}};
  int nt = 21;
  int nx = 21;

  void validate() const {
    t.validate();
    x.validate();
    if (nt < 2 || nx < 2) throw std::invalid_argument("grid: need at least 2 points per axis");
  }
  double t_at(int i) const { return t.lo + (t.hi - t.lo) * i / (nt - 1); }
  double x_at(int j) const { return x.lo + (x.hi - x.lo) * j / (nx - 1); }

  static SampleGrid on(const ClosedFormSolution& s, int nt = 21, int nx = 21) {
    return SampleGrid{s.t_domain, s.x_domain, nt, nx};
  }
};

struct Residual {
  double max_abs = 0.0;
  double scale = 0.0;  // largest single-term magnitude
  int evaluated = 0;
  int flagged = 0;  // points where some term was undefined

  double normalized() const { return scale > 0.0 ? max_abs / scale : max_abs; }
};

namespace detail {

// Sup over the grid of |sum of terms|, with the largest term as scale.
inline Residual sum_residual(const std::vector<Expr>& terms, const SampleGrid& g) {
  g.validate();
  Program p(terms, {"t", "x"});
  std::vector<double> out(terms.size());
  Residual r;
  for (int i = 0; i < g.nt; ++i) {
    for (int j = 0; j < g.nx; ++j) {
      try {
        const double in[2] = {g.t_at(i), g.x_at(j)};
        p.evaluate(in, out);
      } catch (const EvalError&) {
        ++r.flagged;
        continue;
      }
      double sum = 0.0;
      bool finite = true;
      for (double v : out) {
        finite = finite && std::isfinite(v);
        sum += v;
        r.scale = std::max(r.scale, std::abs(v));
      }
      if (!finite) {
        ++r.flagged;
        continue;
      }
      ++r.evaluated;
      r.max_abs = std::max(r.max_abs, std::abs(sum));
    }
  }
  return r;
}

inline Expr power_n(const Expr& u, double n) { return n == 1.0 ? u : pow(u, n); }

inline void require_nonvanishing(const Expr& e, const Domain& d, const std::string& what) {
  Program p(e, {d.variable});
  int sign = 0;
  for (int i = 0; i <= 512; ++i) {
    const double tv = d.lo + (d.hi - d.lo) * i / 512.0;
    double v = 0.0;
    try {
      v = p({tv});
    } catch (const EvalError& err) {
      throw SolutionError(what + " is undefined on the domain: " + err.what());
    }
    if (!std::isfinite(v) || v == 0.0) throw SolutionError(what + " vanishes on the domain");
    const int s = v > 0 ? 1 : -1;
    if (sign != 0 && s != sign) throw SolutionError(what + " changes sign on the domain");
    sign = s;
  }
}

// Checks that e is constant on the domain and returns its value.
inline double constant_value(const Expr& e, const Domain& d, const std::string& what) {
  const double v = eval(e, {{d.variable, 0.5 * (d.lo + d.hi)}});
  if (!is_zero(e / v - 1.0, d, {}, 1e-9)) throw SolutionError(what + " is not constant on the domain");
  return v;
}

}  // namespace detail

// u_t, alpha u^n u_x, beta u_xxx, sigma u_xxxxx for u in (t, x).
inline std::vector<Expr> pde_terms(const KawaharaEq& eq, const Expr& u) {
  return {diff(u, "t"), eq.alpha * detail::power_n(u, eq.n) * diff(u, "x"), eq.beta * diff(u, "x", 3),
          eq.sigma * diff(u, "x", 5)};
}

inline Expr pde_residual_expr(const KawaharaEq& eq, const Expr& u) {
  auto t = pde_terms(eq, u);
  return t[0] + t[1] + t[2] + t[3];
}

inline Residual pde_residual(const KawaharaEq& eq, const Expr& u, const SampleGrid& g = {}) {
  return detail::sum_residual(pde_terms(eq, u), g);
}

inline Residual pde_residual(const KawaharaEq& eq, const ClosedFormSolution& s, const SampleGrid& g) {
  return pde_residual(eq, s.u, g);
}

inline Residual pde_residual(const ExactSolution& s) { return pde_residual(s.eq, s.u(), SampleGrid::on(s.solution)); }

// Divergences of the conserved vectors with characteristics 1 and u.
struct ConservationResidual {
  Residual momentum;  // density u
  Residual energy;    // density u^2/2
};

inline std::vector<Expr> momentum_terms(const KawaharaEq& eq, const Expr& u) {
  const double n = eq.n;
  return {diff(u, "t"), diff(eq.alpha * pow(u, n + 1.0) / (n + 1.0), "x"), diff(eq.beta * diff(u, "x", 2), "x"),
          diff(eq.sigma * diff(u, "x", 4), "x")};
}

inline std::vector<Expr> energy_terms(const KawaharaEq& eq, const Expr& u) {
  const double n = eq.n;
  const Expr ux = diff(u, "x"), uxx = diff(ux, "x"), u3 = diff(uxx, "x"), u4 = diff(u3, "x");
  return {diff(pow(u, 2.0) / 2.0, "t"), diff(eq.alpha * pow(u, n + 2.0) / (n + 2.0), "x"),
          diff(eq.beta * (u * uxx - pow(ux, 2.0) / 2.0), "x"),
          diff(eq.sigma * (u * u4 - ux * u3 + pow(uxx, 2.0) / 2.0), "x")};
}

inline ConservationResidual conservation_check(const KawaharaEq& eq, const Expr& u, const SampleGrid& g = {}) {
  return {detail::sum_residual(momentum_terms(eq, u), g), detail::sum_residual(energy_terms(eq, u), g)};
}

inline ConservationResidual conservation_check(const ExactSolution& s) {
  return conservation_check(s.eq, s.u(), SampleGrid::on(s.solution));
}

// ---------------------------------------------------------------------------
// Families

// u = (x + c)/(integral(alpha) + a), any beta and sigma, n = 1.
inline ExactSolution degenerate_solution(const KawaharaEq& eq, double c, double a) {
  if (!eq.is_n1()) throw SolutionError("degenerate solution requires n = 1");
  const Expr I = integral(eq.alpha, eq.domain.variable, eq.domain.lo);
  const Expr den = I + a;
  detail::require_nonvanishing(den, eq.domain, "integral(alpha) + a");
  ExactSolution s;
  s.eq = eq;
  s.family = "degenerate";
  s.parameters = {{"c", c}, {"a", a}};
  s.solution.u = (x_var() + c) / den;
  s.solution.t_domain = eq.domain;
  s.solution.label = "degenerate";
  return s;
}

// u_t + alpha u^n u_x + tb alpha u_xxx + ts alpha u_xxxxx = 0.
inline KawaharaEq proportional_equation(const Expr& alpha, double n, double tilde_beta, double tilde_sigma,
                                        const Domain& d = Domain{"t", 1.0, 2.0, {}}) {
  KawaharaEq eq;
  eq.n = n;
  eq.alpha = alpha;
  eq.beta = tilde_beta * alpha;
  eq.sigma = tilde_sigma * alpha;
  eq.domain = d;
  return eq;
}

inline ExactSolution tanh_solution_n2(const KawaharaEq& eq, double tilde_beta, double tilde_sigma, double k,
                                      double chi) {
  if (eq.n != 2.0) throw SolutionError("tanh solution requires n = 2");
  if (!(tilde_sigma < 0.0)) throw SolutionError("tanh solution requires tilde_sigma < 0");
  const Domain& d = eq.domain;
  if (!is_zero(eq.beta - tilde_beta * eq.alpha, d, {}, 1e-9) || !is_zero(eq.sigma - tilde_sigma * eq.alpha, d, {}, 1e-9))
    throw SolutionError("equation coefficients are not beta = tilde_beta alpha, sigma = tilde_sigma alpha");
  const double r = std::sqrt(-10.0 * tilde_sigma);
  const double speed = k / (10.0 * tilde_sigma) * (240.0 * std::pow(k, 4) * tilde_sigma * tilde_sigma + tilde_beta * tilde_beta);
  const Expr I = integral(eq.alpha, d.variable, d.lo);
  const Expr phase = k * x_var() + speed * I + chi;
  ExactSolution s;
  s.eq = eq;
  s.family = "tanh_n2";
  s.parameters = {{"tilde_beta", tilde_beta}, {"tilde_sigma", tilde_sigma}, {"k", k}, {"chi", chi}};
  const double base = (40.0 * k * k * tilde_sigma - tilde_beta) / r;
  s.solution.u = k == 0.0 ? Expr(base) : base + 6.0 * k * k * r * pow(tanh(phase), 2.0);
  s.solution.t_domain = d;
  s.solution.label = "tanh_n2";
  return s;
}

inline double kudryashov_kappa(double tilde_beta, double tilde_sigma, int branch) {
  if (branch < 1 || branch > 6) throw SolutionError("Kudryashov branch must be 1..6");
  if (branch > 2)
    throw SolutionError("Kudryashov branches 3-6 have complex kappa and give complex-valued solutions; "
                        "only the real branches 1 and 2 are evaluated");
  if (!(tilde_beta * tilde_sigma < 0.0)) throw SolutionError("real Kudryashov branches need tilde_beta tilde_sigma < 0");
  const double k = std::sqrt(-13.0 * tilde_beta * tilde_sigma) / (26.0 * tilde_sigma);
  return branch == 1 ? k : -k;
}

namespace detail {

// alpha~ u~ for the constant-coefficient solitary wave, as a function of
// the given (t~, x~) expressions.
inline Expr kudryashov_profile(double tb, double ts, double kappa, double mu, double chi, const Expr& tt, const Expr& xt) {
  const double k2 = kappa * kappa, k3 = k2 * kappa, k4 = k2 * k2, k5 = k4 * kappa;
  const double c0 =
      -(264992.0 * ts * ts * k5 - 7280.0 * tb * ts * k3 - 31.0 * tb * tb * kappa + 507.0 * ts * mu) / (507.0 * ts * kappa);
  const double c2 = -280.0 * k2 * (tb - 104.0 * ts * k2) / 13.0;
  const double c4 = -1680.0 * ts * k4;
  const Expr th = tanh(kappa * xt + mu * tt + chi);
  return c0 + c2 * pow(th, 2.0) + c4 * pow(th, 4.0);
}

}  // namespace detail

// Solitary wave of u_t + alpha u u_x + beta u_xxx + sigma u_xxxxx = 0 with
// constant coefficients.
inline ExactSolution kudryashov_family(double tilde_alpha, double tilde_beta, double tilde_sigma, int branch, double mu,
                                       double chi, const Domain& d = Domain{"t", 1.0, 2.0, {}}) {
  if (tilde_alpha == 0.0) throw SolutionError("tilde_alpha must be nonzero");
  const double kappa = kudryashov_kappa(tilde_beta, tilde_sigma, branch);
  ExactSolution s;
  s.eq.n = 1.0;
  s.eq.alpha = Expr(tilde_alpha);
  s.eq.beta = Expr(tilde_beta);
  s.eq.sigma = Expr(tilde_sigma);
  s.eq.domain = d;
  s.family = "kudryashov";
  s.parameters = {{"tilde_alpha", tilde_alpha}, {"tilde_beta", tilde_beta}, {"tilde_sigma", tilde_sigma},
                  {"branch", branch},           {"kappa", kappa},           {"mu", mu},
                  {"chi", chi}};
  s.solution.u = detail::kudryashov_profile(tilde_beta, tilde_sigma, kappa, mu, chi, t_var(), x_var()) / tilde_alpha;
  s.solution.t_domain = d;
  s.solution.label = "kudryashov";
  return s;
}

// Solution of u_t + alpha u u_x + tb alpha W u_xxx + ts alpha W^3 u_xxxxx = 0
// with W = d3 integral(alpha) + d4.
inline ExactSolution mapped_kudryashov(const KawaharaEq& eq, double delta1, double delta3, double delta4, double mu,
                                       double chi, int branch) {
  if (!eq.is_n1()) throw SolutionError("mapped Kudryashov solution requires n = 1");
  if (delta3 == 0.0 && delta4 == 0.0) throw SolutionError("delta3 and delta4 cannot both vanish");
  const Domain& d = eq.domain;
  auto I = antiderivative(eq.alpha, d.variable);
  if (!I) throw SolutionError("mapped Kudryashov solution needs a closed-form antiderivative of alpha");
  const Expr W = delta3 * *I + delta4;
  detail::require_nonvanishing(W, d, "delta3 integral(alpha) + delta4");
  const double tb = detail::constant_value(eq.beta / (eq.alpha * W), d, "beta/(alpha W)");
  const double ts = detail::constant_value(eq.sigma / (eq.alpha * pow(W, 3.0)), d, "sigma/(alpha W^3)");
  const double kappa = kudryashov_kappa(tb, ts, branch);
  const Expr xt = (x_var() + delta1) / W;
  const Expr tt = delta3 != 0.0 ? -1.0 / (delta3 * W) : *I / (delta4 * delta4);
  ExactSolution s;
  s.eq = eq;
  s.family = "mapped_kudryashov";
  s.parameters = {{"delta1", delta1}, {"delta3", delta3}, {"delta4", delta4},   {"mu", mu},
                  {"chi", chi},       {"branch", branch}, {"tilde_beta", tb}, {"tilde_sigma", ts},
                  {"kappa", kappa}};
  s.solution.u = (delta3 * (x_var() + delta1) + detail::kudryashov_profile(tb, ts, kappa, mu, chi, tt, xt)) / W;
  s.solution.t_domain = d;
  s.solution.label = "mapped_kudryashov";
  return s;
}

}  // namespace kawahara
