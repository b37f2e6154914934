#pragma once

// Similarity reductions to fifth-order ODEs and reconstruction of u(t, x).

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "kawahara/classify.hpp"
#include "kawahara/ode.hpp"

namespace kawahara {

class ReduceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// delta phi''''' + lambda phi''' + (phi^n + c1 w + c0) phi' + c2 phi + c3 w + c4 = 0
struct OdeCoefficients {
  double delta = 1.0;
  double lambda = 1.0;
  double n = 1.0;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
};

inline std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string signed_term(double c, const std::string& name) {
  std::string s = (c < 0.0 ? " - " : " + ") + format_number(std::abs(c));
  return name.empty() ? s : s + "*" + name;
}

// u = scale(t) * phi(omega) + shift(t, x), omega = omega(t, x).
struct Reduction {
  std::string case_tag;
  std::string subalgebra;
  Bindings parameters;
  Expr omega = x_var();
  Expr scale{1.0};
  Expr shift{0.0};
  OdeCoefficients ode;
  bool first_order = false;  // (omega + a) phi' + phi = 0
  double first_order_a = 0.0;
  std::optional<Expr> closed_form;  // u with free constant C
  std::vector<std::string> notes;

  std::size_t order() const { return first_order ? 1 : 5; }

  Expr ansatz(const Expr& phi) const { return scale * substitute(phi, "omega", omega) + shift; }

  // Reduced ODE left-hand side for phi given as an expression in omega.
  Expr ode_lhs(const Expr& phi) const {
    const Expr w = omega_var();
    if (first_order) return (w + first_order_a) * diff(phi, "omega") + phi;
    const Expr pn = ode.n == 1.0 ? phi : pow(phi, ode.n);
    return ode.delta * diff(phi, "omega", 5) + ode.lambda * diff(phi, "omega", 3) +
           (pn + ode.c1 * w + ode.c0) * diff(phi, "omega") + ode.c2 * phi + ode.c3 * w + ode.c4;
  }

  double highest_derivative(double w, const double* y) const {
    if (first_order) return -y[0] / (w + first_order_a);
    const double pn = ode.n == 1.0 ? y[0] : std::pow(y[0], ode.n);
    return -(ode.lambda * y[3] + (pn + ode.c1 * w + ode.c0) * y[1] + ode.c2 * y[0] + ode.c3 * w + ode.c4) / ode.delta;
  }

  // First-order system in (phi, phi', ..., phi'''').
  Rhs rhs() const {
    const Reduction self = *this;
    if (first_order) {
      return [self](double w, const double* y, double* dy) { dy[0] = self.highest_derivative(w, y); };
    }
    return [self](double w, const double* y, double* dy) {
      dy[0] = y[1];
      dy[1] = y[2];
      dy[2] = y[3];
      dy[3] = y[4];
      dy[4] = self.highest_derivative(w, y);
    };
  }

  std::string ansatz_text() const {
    std::string s = "u = ";
    if (!scale.is_const(1.0)) s += "(" + to_string(scale) + ")*";
    s += "phi(omega)";
    if (!shift.is_const(0.0)) s += " + " + to_string(shift);
    return s + ", omega = " + to_string(omega);
  }

  std::string ode_text() const {
    if (first_order) return "(omega" + signed_term(first_order_a, "") + ")*phi' + phi = 0";
    std::string s = format_number(ode.delta) + "*phi'''''" + signed_term(ode.lambda, "phi'''") + " + (" +
                    (ode.n == 1.0 ? std::string("phi") : "phi^" + format_number(ode.n));
    if (ode.c1 != 0.0) s += signed_term(ode.c1, "omega");
    if (ode.c0 != 0.0) s += signed_term(ode.c0, "");
    s += ")*phi'";
    if (ode.c2 != 0.0) s += signed_term(ode.c2, "phi");
    if (ode.c3 != 0.0) s += signed_term(ode.c3, "omega");
    if (ode.c4 != 0.0) s += signed_term(ode.c4, "");
    return s + " = 0";
  }
};

// Scaling reduction for beta = lambda t^rho, sigma = delta t^((5 rho + 2)/3).
inline Reduction power_reduction(double n, double rho, double lambda, double delta) {
  const Expr t = t_var(), x = x_var();
  Reduction r;
  r.case_tag = n == 1.0 ? "1'" : "1";
  r.subalgebra = n == 1.0 ? "g1'.1" : "g1.1";
  r.omega = x * pow(t, -(rho + 1.0) / 3.0);
  r.scale = pow(t, (rho - 2.0) / (3.0 * n));
  r.ode = {delta, lambda, n, 0.0, -(rho + 1.0) / 3.0, (rho - 2.0) / (3.0 * n), 0.0, 0.0};
  return r;
}

inline Reduction build_reduction(const std::string& tag, double n, const std::map<std::string, double>& prm,
                                 const std::string& label, const Bindings& params = {}) {
  const auto subs = optimal_subalgebras(tag, n, prm);
  auto it = std::find_if(subs.begin(), subs.end(), [&](const Subalgebra& s) { return s.label == label; });
  if (it == subs.end()) throw ReduceError("subalgebra " + label + " does not belong to case " + tag);
  if (label == "g0") throw ReduceError("g0 = <d_x> leads to constant solutions only");
  auto get = [&](const char* k) {
    auto f = prm.find(k);
    return f == prm.end() ? 0.0 : f->second;
  };
  auto need = [&](const char* k) {
    auto f = params.find(k);
    if (f == params.end()) throw ReduceError("subalgebra " + label + " needs parameter " + k);
    return f->second;
  };
  const double lambda = get("lambda"), delta = get("delta"), rho = get("rho"), nu = get("nu");
  const Expr t = t_var(), x = x_var();
  Reduction r;
  r.case_tag = tag;
  r.subalgebra = label;
  r.ode = {delta, lambda, n, 0.0, 0.0, 0.0, 0.0, 0.0};
  if (label == "g1.1" || label == "g1'.1") {
    r = power_reduction(n, rho, lambda, delta);
    r.case_tag = tag;
  } else if (label == "g1.2" || label == "g1'.2") {
    const double a = need("a");
    r.parameters["a"] = a;
    r.omega = x - (a / n) * ln(t);
    r.scale = pow(t, -1.0 / n);
    r.ode.c0 = -a / n;
    r.ode.c2 = -1.0 / n;
  } else if (label == "g1'.3") {
    // reduction of the rho = -1 equation linked by t' = 1/t, x' = -x/t, u' = tu - x
    const double a = need("a");
    r.parameters["a"] = a;
    r.omega = a * ln(t) - x / t;
    r.shift = x / t;
    r.ode.c0 = -a;
    r.ode.c2 = -1.0;
    r.notes.push_back("built from the rho = -1 reduction via t' = 1/t, x' = -x/t, u' = tu - x");
  } else if (label == "g2" || label == "g2'") {
    r.omega = x * exp(-t / 3.0);
    r.scale = exp(t / (3.0 * n));
    r.ode.c1 = -1.0 / 3.0;
    r.ode.c2 = 1.0 / (3.0 * n);
  } else if (label == "g3") {
    const double a = need("a");
    r.parameters["a"] = a;
    r.omega = x - a * t;
    r.ode.c0 = -a;
  } else if (label == "g3'.1") {
    r.omega = x;
  } else if (label == "g3'.2") {
    const double a = need("a");
    if (a == 0.0) throw ReduceError("g3'.2 requires a != 0 (the ansatz divides by a)");
    r.parameters["a"] = a;
    r.omega = x - pow(t, 2.0) / a;
    r.shift = 2.0 * t / a;
    r.ode.c4 = 2.0 / a;
  } else if (label == "g4'") {
    const Expr root = sqrt(pow(t, 2.0) + 1.0);
    r.omega = x * exp(-nu * atan(t)) / root;
    r.scale = exp(nu * atan(t)) / root;
    r.shift = x * t / (pow(t, 2.0) + 1.0);
    r.ode.c1 = -nu;
    r.ode.c2 = nu;
    r.ode.c3 = 1.0;
  } else if (label == "g0'") {
    double a = 0.0;
    if (tag == "0'") {
      a = need("a");
      r.parameters["a"] = a;
    } else if (tag != "2'") {
      a = need("s0");
      if (a != -1.0 && a != 0.0 && a != 1.0) throw ReduceError("s0 must be -1, 0 or 1");
      r.parameters["s0"] = a;
    }
    r.first_order = true;
    r.first_order_a = a;
    r.omega = t;
    r.shift = x / (t + a);
    r.closed_form = (x + var("C")) / (t + a);
  } else {
    throw ReduceError("no reduction for subalgebra " + label);
  }
  if (!r.first_order && r.ode.delta == 0.0) throw ReduceError("reduction needs delta != 0");
  return r;
}

inline Reduction build_reduction(const ClassificationResult& res, const std::string& label,
                                 const Bindings& params = {}) {
  return build_reduction(res.case_tag, res.n, res.parameters, label, params);
}

// PDE residual of the ansatz minus the matching multiple of the reduced ODE,
// for phi given as an expression in omega. Vanishes identically.
inline Expr ansatz_residual(const KawaharaEq& eq, const Reduction& red, const Expr& phi) {
  const Expr u = red.ansatz(phi);
  const Expr un = eq.n == 1.0 ? u : pow(u, eq.n);
  const Expr pde = diff(u, "t") + eq.alpha * un * diff(u, "x") + eq.beta * diff(u, "x", 3) + eq.sigma * diff(u, "x", 5);
  const Expr lhs = substitute(red.ode_lhs(phi), "omega", red.omega);
  if (red.first_order) return pde - lhs / (red.omega + red.first_order_a);
  const Expr wx = diff(red.omega, "x");
  return pde - eq.sigma * red.scale * pow(wx, 5.0) / red.ode.delta * lhs;
}

// ---------------------------------------------------------------------------
// Invariant boundary value problems

struct InvariantBVP {
  double n = 1.0;
  double rho = 0.5;
  double lambda = 1.0;
  double delta = 1.0;
  std::array<double, 5> gamma{};
  double t0 = 1.0;

  KawaharaEq equation(double t_hi = 2.0) const {
    KawaharaEq eq;
    eq.n = n;
    eq.beta = lambda * pow(t_var(), rho);
    eq.sigma = delta * pow(t_var(), (5.0 * rho + 2.0) / 3.0);
    eq.domain = Domain{"t", t0, std::max(t_hi, t0 + 1.0), {}};
    return eq;
  }

  // Prescribed d^i u / dx^i at x = 0.
  double boundary_value(int i, double t) const {
    return gamma[i] * std::pow(t, (rho - 2.0 - n * (rho + 1.0) * i) / (3.0 * n));
  }
};

struct InitialValueProblem {
  Reduction reduction;
  State y0;
};

inline InitialValueProblem bvp_to_ivp(const InvariantBVP& bvp) {
  if (bvp.gamma[0] == 0.0) throw ReduceError("invariant BVP needs gamma0 != 0");
  if (bvp.lambda == 0.0 || bvp.delta == 0.0) throw ReduceError("invariant BVP needs lambda*delta != 0");
  if (bvp.n == 0.0) throw ReduceError("invariant BVP needs n != 0");
  if (!(bvp.t0 > 0.0)) throw ReduceError("invariant BVP needs t0 > 0");
  InitialValueProblem out{power_reduction(bvp.n, bvp.rho, bvp.lambda, bvp.delta), State(bvp.gamma.begin(), bvp.gamma.end())};
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction

struct GridSolution {
  std::vector<double> t, x, u;
  std::vector<char> valid;  // 0 where omega leaves the integrated span
  std::string case_tag, subalgebra, ansatz;

  std::size_t flagged() const { return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 0)); }

  std::string to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "t,x,u\n";
    for (std::size_t i = 0; i < u.size(); ++i) {
      os << t[i] << ',' << x[i] << ',';
      if (valid[i]) {
        os << u[i];
      } else {
        os << "nan";
      }
      os << '\n';
    }
    return os.str();
  }
};

inline GridSolution reconstruct(const Reduction& red, const ODESolution& phi, const std::vector<double>& ts,
                                const std::vector<double>& xs) {
  GridSolution g;
  g.case_tag = red.case_tag;
  g.subalgebra = red.subalgebra;
  g.ansatz = red.ansatz_text();
  Program prog(std::vector<Expr>{red.omega, red.scale, red.shift}, {"t", "x"});
  for (double tv : ts) {
    for (double xv : xs) {
      g.t.push_back(tv);
      g.x.push_back(xv);
      const auto v = prog.evaluate(std::vector<double>{tv, xv});
      if (!phi.contains(v[0])) {
        g.u.push_back(std::numeric_limits<double>::quiet_NaN());
        g.valid.push_back(0);
        continue;
      }
      g.u.push_back(v[1] * phi(v[0])[0] + v[2]);
      g.valid.push_back(1);
    }
  }
  return g;
}

// d^i u / dx^i for i = 0..4 at (t, x) through the ansatz.
inline std::array<double, 5> x_derivatives(const Reduction& red, const ODESolution& phi, double t, double x) {
  if (red.first_order) throw ReduceError("x_derivatives: needs a fifth-order reduction");
  std::vector<Expr> outs{red.omega, red.scale, diff(red.omega, "x")};
  Expr h = red.shift;
  for (int i = 0; i < 5; ++i) {
    outs.push_back(h);
    h = diff(h, "x");
  }
  Program prog(outs, {"t", "x"});
  const auto v = prog.evaluate(std::vector<double>{t, x});
  if (!phi.contains(v[0])) throw ReduceError("x_derivatives: omega outside the integrated span");
  const State s = phi(v[0]);
  std::array<double, 5> out{};
  for (int i = 0; i < 5; ++i) out[i] = v[1] * std::pow(v[2], i) * s[i] + v[3 + i];
  return out;
}

struct OdeResidual {
  double residual = 0.0;  // sup of the ODE left-hand side
  double scale = 0.0;     // sup of the largest term magnitude
  double relative() const { return scale == 0.0 ? residual : residual / scale; }
};

// ODE left-hand side along the dense output, with the top derivative taken
// from the interpolant of the last component.
inline OdeResidual ode_residual(const Reduction& red, const ODESolution& sol, int probes = 200) {
  OdeResidual out;
  const double a = sol.start(), b = sol.reached();
  if (a == b) return out;
  const std::size_t top = red.order() - 1;
  for (int k = 0; k < probes; ++k) {
    const double w = a + (b - a) * (k + 0.5) / probes;
    const State y = sol(w);
    const double d = sol.derivative(w)[top];
    double lhs, big;
    if (red.first_order) {
      const double t1 = (w + red.first_order_a) * d;
      lhs = t1 + y[0];
      big = std::max(std::abs(t1), std::abs(y[0]));
    } else {
      const auto& c = red.ode;
      const double pn = c.n == 1.0 ? y[0] : std::pow(y[0], c.n);
      const double terms[] = {c.delta * d, c.lambda * y[3], (pn + c.c1 * w + c.c0) * y[1], c.c2 * y[0],
                              c.c3 * w + c.c4};
      lhs = 0.0;
      big = 0.0;
      for (double tt : terms) {
        lhs += tt;
        big = std::max(big, std::abs(tt));
      }
    }
    out.residual = std::max(out.residual, std::abs(lhs));
    out.scale = std::max(out.scale, big);
  }
  return out;
}

}  // namespace kawahara
