#pragma once

// Equations u_t + alpha(t) u^n u_x + beta(t) u_xxx + sigma(t) u_xxxxx = 0,
// point transformations between them and the equivalence groups.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "kawahara/calculus.hpp"
#include "kawahara/eval.hpp"
#include "kawahara/expr.hpp"

namespace kawahara {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KawaharaEq {
  double n = 1.0;
  Expr alpha{1.0};
  Expr beta{1.0};
  Expr sigma{1.0};
  Domain domain{"t", 1.0, 2.0, {}};

  bool is_n1() const { return n == 1.0; }

  // Throws unless n is nonzero and every coefficient is a nonvanishing
  // function of t on the domain.
  void validate() const {
    if (n == 0.0 || !std::isfinite(n)) throw ModelError("equation: n must be a nonzero real");
    domain.validate();
    const std::pair<const char*, const Expr*> coeffs[] = {{"alpha", &alpha}, {"beta", &beta}, {"sigma", &sigma}};
    for (const auto& [label, e] : coeffs) {
      for (const auto& v : free_variables(*e))
        if (v != domain.variable) throw ModelError(std::string(label) + " depends on '" + v + "'");
      Program p(*e, {domain.variable});
      int sign = 0;
      for (double tv : sample_points(domain, 64)) {
        double val = 0.0;
        try {
          val = p({tv});
        } catch (const EvalError& err) {
          throw ModelError(std::string(label) + " is undefined on the domain: " + err.what());
        }
        if (std::abs(val) <= 1e-12) throw ModelError(std::string(label) + " vanishes on the domain");
        const int s = val > 0 ? 1 : -1;
        if (sign != 0 && s != sign) throw ModelError(std::string(label) + " changes sign on the domain");
        sign = s;
      }
    }
  }
};

// A solution u(t, x) of some equation, valid on a (t, x) rectangle.
struct ClosedFormSolution {
  Expr u;
  Domain t_domain{"t", 1.0, 2.0, {}};
  Domain x_domain{"x", -5.0, 5.0, {}};
  std::string label;
};

// t~ = T(t), x~ = X1(t) x + X0(t), u~ = U1(t) u + U0(t, x).
struct PointTransform {
  Expr T = t_var();
  Expr X1{1.0};
  Expr X0{0.0};
  Expr U1{1.0};
  Expr U0{0.0};
  Expr T_inverse = t_var();  // t as a function of t~ (named t)
  std::string inverse_kind = "affine";
  Domain domain{"t", 1.0, 2.0, {}};

  bool closed_form_inverse() const { return inverse_kind != "numeric"; }

  Domain image_domain() const {
    const double a = eval(T, {{"t", domain.lo}}), b = eval(T, {{"t", domain.hi}});
    return Domain{"t", std::min(a, b), std::max(a, b), {}};
  }

  // Checks T_t X1 U1 != 0 at the sample points.
  void validate() const {
    Program p(diff(T, "t") * X1 * U1, {"t", "x"});
    for (double tv : sample_points(domain, 32)) {
      const double v = p({tv, 0.0});
      if (std::abs(v) <= 1e-14) throw ModelError("transform: T_t*X1*U1 vanishes on the domain");
    }
  }

  Expr at_inverse(const Expr& e) const { return substitute(e, "t", T_inverse); }

  PointTransform inverse() const {
    PointTransform r;
    const Expr x1 = at_inverse(X1), x0 = at_inverse(X0), u1 = at_inverse(U1);
    r.T = T_inverse;
    r.X1 = 1.0 / x1;
    r.X0 = -x0 / x1;
    r.U1 = 1.0 / u1;
    const Expr old_x = (x_var() - x0) / x1;
    r.U0 = -substitute(U0, Substitution{{"t", T_inverse}, {"x", old_x}}) / u1;
    r.T_inverse = T;
    r.inverse_kind = "forward";
    r.domain = image_domain();
    return r;
  }

  // The transform applying *this first and then next.
  PointTransform then(const PointTransform& next) const {
    PointTransform r;
    auto at_T = [&](const Expr& e) { return substitute(e, "t", T); };
    r.T = at_T(next.T);
    r.X1 = at_T(next.X1) * X1;
    r.X0 = at_T(next.X1) * X0 + at_T(next.X0);
    r.U1 = at_T(next.U1) * U1;
    r.U0 = at_T(next.U1) * U0 + substitute(next.U0, Substitution{{"t", T}, {"x", X1 * x_var() + X0}});
    r.T_inverse = substitute(T_inverse, "t", next.T_inverse);
    r.inverse_kind = closed_form_inverse() && next.closed_form_inverse() ? "composed" : "numeric";
    r.domain = domain;
    return r;
  }

  static PointTransform identity(const Domain& d) {
    PointTransform r;
    r.domain = d;
    return r;
  }
};

// Builds a transform, computing the inverse of T on the domain.
inline PointTransform make_transform(const Expr& T, const Expr& X1, const Expr& X0, const Expr& U1,
                                     const Expr& U0, const Domain& domain) {
  PointTransform r;
  r.T = T;
  r.X1 = X1;
  r.X0 = X0;
  r.U1 = U1;
  r.U0 = U0;
  r.domain = domain;
  auto inv = invert_time_map(T, domain);
  r.T_inverse = inv.inverse;
  r.inverse_kind = inv.kind;
  r.validate();
  return r;
}

// Replaces an expression in t by its value when it is numerically constant.
inline Expr snap_constant(const Expr& e, const Domain& d) {
  if (e.is_const()) return e;
  try {
    if (!is_zero(diff(e, d.variable), d)) return e;
    Program p(e, {d.variable});
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, big = 0.0;
    for (double tv : sample_points(d, 32)) {
      const double v = p({tv});
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      big = std::max(big, std::abs(v));
    }
    if (hi - lo > 1e-10 * big) return e;
    const double mid = 0.5 * (d.lo + d.hi);
    for (double probe : {mid, d.lo + 0.37 * (d.hi - d.lo), d.lo + 0.81 * (d.hi - d.lo)}) {
      try {
        return Expr(eval(e, {{d.variable, probe}}));
      } catch (const EvalError&) {
      }
    }
  } catch (const EvalError&) {
  }
  return e;
}

// Residuals of the conditions under which tr maps the equation class into
// itself, as expressions in (t, x).
inline std::vector<Expr> class_conditions(const PointTransform& tr, const KawaharaEq& eq) {
  const Expr Tt = diff(tr.T, "t");
  std::vector<Expr> out{diff(tr.U1, "x"), diff(tr.X1, "x"), diff(tr.X0, "x")};
  if (!eq.is_n1()) {
    out.push_back(tr.U0);
    out.push_back(diff(tr.U1, "t"));
    out.push_back(diff(tr.X1, "t"));
    out.push_back(diff(tr.X0, "t"));
  } else {
    const Expr at = eq.alpha * tr.X1 / (Tt * tr.U1);  // transformed alpha, in t
    const Expr bt = eq.beta * pow(tr.X1, 3.0) / Tt;
    const Expr st = eq.sigma * pow(tr.X1, 5.0) / Tt;
    const Expr U0x = diff(tr.U0, "x");
    const Expr X1 = tr.X1;
    const Expr shift = diff(X1, "t") * x_var() + diff(tr.X0, "t");
    out.push_back(diff(tr.U1, "t") * X1 + at * Tt * tr.U1 * U0x);
    out.push_back(at * Tt * tr.U0 - shift);
    out.push_back(diff(tr.U0, "t") * pow(X1, 5.0) - shift * U0x * pow(X1, 4.0) +
                  at * Tt * tr.U0 * U0x * pow(X1, 4.0) + bt * Tt * diff(tr.U0, "x", 3) * pow(X1, 2.0) +
                  st * Tt * diff(tr.U0, "x", 5));
  }
  return out;
}

// Image of the equation under tr. Coefficients of the result are
// expressions in the new time (named t) on the image domain.
inline KawaharaEq transform(const KawaharaEq& eq, const PointTransform& tr) {
  const Domain xd{"x", -1.0, 1.0, {}};
  for (const Expr& c : class_conditions(tr, eq)) {
    if (!is_zero_grid(c, tr.domain, xd))
      throw ModelError("transform does not preserve the equation class: " + to_string(c).substr(0, 200));
  }
  const Expr Tt = diff(tr.T, "t");
  const Expr a = eq.is_n1() ? eq.alpha * tr.X1 / (Tt * tr.U1) : eq.alpha * tr.X1 / (Tt * pow(tr.U1, eq.n));
  const Expr b = eq.beta * pow(tr.X1, 3.0) / Tt;
  const Expr s = eq.sigma * pow(tr.X1, 5.0) / Tt;
  KawaharaEq out;
  out.n = eq.n;
  out.domain = tr.image_domain();
  out.alpha = snap_constant(tr.at_inverse(snap_constant(a, tr.domain)), out.domain);
  out.beta = snap_constant(tr.at_inverse(snap_constant(b, tr.domain)), out.domain);
  out.sigma = snap_constant(tr.at_inverse(snap_constant(s, tr.domain)), out.domain);
  return out;
}

// Maps a solution of the source equation to one of the transformed equation.
inline ClosedFormSolution push_solution(const PointTransform& tr, const ClosedFormSolution& sol) {
  const Expr image = tr.U1 * sol.u + tr.U0;
  const Expr back_x = substitute(image, "x", (x_var() - tr.X0) / tr.X1);
  ClosedFormSolution out;
  out.u = substitute(back_x, "t", tr.T_inverse);
  out.t_domain = tr.image_domain();
  double xlo = INFINITY, xhi = -INFINITY;
  Program px(tr.X1 * x_var() + tr.X0, {"t", "x"});
  for (double tv : sample_points(tr.domain, 16))
    for (double xv : {sol.x_domain.lo, sol.x_domain.hi}) {
      const double v = px({tv, xv});
      xlo = std::min(xlo, v);
      xhi = std::max(xhi, v);
    }
  out.x_domain = Domain{"x", xlo, xhi, {}};
  out.label = sol.label.empty() ? "pushed" : sol.label + " (pushed)";
  return out;
}

// ---------------------------------------------------------------------------
// Equivalence groups

struct UsualEquivParams {  // any n
  double d1 = 1.0, d2 = 0.0, d3 = 1.0;
  Expr T = t_var();
};

struct ExtendedEquivParams {  // n = 1
  double d0 = 0.0, d1 = 0.0, d2 = 1.0, d3 = 0.0, d4 = 1.0;
  Expr T = t_var();
};

struct GaugedEquivParams {  // alpha = 1
  double d0 = 0.0, d1 = 1.0, d2 = 0.0, d3 = 1.0;
};

struct ProjectiveEquivParams {  // alpha = 1, n = 1
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0, e0 = 0.0, e1 = 0.0, e2 = 1.0;
  double delta() const { return a * d - b * c; }
};

using EquivParams = std::variant<UsualEquivParams, ExtendedEquivParams, GaugedEquivParams, ProjectiveEquivParams>;

inline ProjectiveEquivParams inverse_params(const ProjectiveEquivParams& p) {
  const double D = p.delta();
  ProjectiveEquivParams r;
  r.a = p.d;
  r.b = -p.b;
  r.c = -p.c;
  r.d = p.a;
  r.e2 = D / p.e2;
  r.e1 = (p.e0 * p.c - p.e1 * p.d) / p.e2;
  r.e0 = (p.e1 * p.b - p.e0 * p.a) / p.e2;
  return r;
}

// Parameters of "p then q" (matrix product of [[e2,e1,e0],[0,a,b],[0,c,d]]).
inline ProjectiveEquivParams compose_params(const ProjectiveEquivParams& p, const ProjectiveEquivParams& q) {
  ProjectiveEquivParams r;
  r.e2 = q.e2 * p.e2;
  r.e1 = q.e2 * p.e1 + q.e1 * p.a + q.e0 * p.c;
  r.e0 = q.e2 * p.e0 + q.e1 * p.b + q.e0 * p.d;
  r.a = q.a * p.a + q.b * p.c;
  r.b = q.a * p.b + q.b * p.d;
  r.c = q.c * p.a + q.d * p.c;
  r.d = q.c * p.b + q.d * p.d;
  return r;
}

inline GaugedEquivParams inverse_params(const GaugedEquivParams& p, double n) {
  const double k = p.d1 * std::pow(p.d3, -n);
  return GaugedEquivParams{-p.d0 / k, 1.0 / p.d1, -p.d2 / p.d1, 1.0 / p.d3};
}

inline PointTransform equivalence_transform(const KawaharaEq& eq, const EquivParams& params) {
  const Expr t = t_var(), x = x_var();
  return std::visit(
      [&](const auto& p) -> PointTransform {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, UsualEquivParams>) {
          if (p.d1 * p.d3 == 0.0) throw ModelError("equivalence: d1*d3 must be nonzero");
          return make_transform(p.T, Expr(p.d1), Expr(p.d2), Expr(p.d3), Expr(0.0), eq.domain);
        } else if constexpr (std::is_same_v<P, ExtendedEquivParams>) {
          if (!eq.is_n1()) throw ModelError("equivalence: the extended group requires n = 1");
          if (p.d2 * (p.d3 * p.d3 + p.d4 * p.d4) == 0.0)
            throw ModelError("equivalence: d2*(d3^2 + d4^2) must be nonzero");
          const Expr A = integral(eq.alpha, "t", eq.domain.lo);
          const Expr X1 = 1.0 / (p.d3 * A + p.d4);
          return make_transform(p.T, X1, p.d1 * X1 + p.d0, p.d2 / X1, -p.d2 * p.d3 * (x + p.d1), eq.domain);
        } else if constexpr (std::is_same_v<P, GaugedEquivParams>) {
          if (p.d1 * p.d3 == 0.0) throw ModelError("equivalence: d1*d3 must be nonzero");
          const double k = p.d1 * std::pow(p.d3, -eq.n);
          if (!std::isfinite(k)) throw ModelError("equivalence: d3^-n is undefined");
          return make_transform(k * t + p.d0, Expr(p.d1), Expr(p.d2), Expr(p.d3), Expr(0.0), eq.domain);
        } else {
          if (!eq.is_n1()) throw ModelError("equivalence: the projective group requires n = 1");
          if (p.delta() == 0.0 || p.e2 == 0.0) throw ModelError("equivalence: need ad - bc != 0 and e2 != 0");
          const Expr den = p.c * t + p.d;
          return make_transform((p.a * t + p.b) / den, p.e2 / den, (p.e1 * t + p.e0) / den,
                                p.e2 * den / p.delta(), (-p.e2 * p.c * x - p.e0 * p.c + p.e1 * p.d) / p.delta(),
                                eq.domain);
        }
      },
      params);
}

struct Mapped {
  KawaharaEq eq;
  PointTransform transform;
};

inline Mapped apply_equiv(const KawaharaEq& eq, const EquivParams& params) {
  PointTransform tr = equivalence_transform(eq, params);
  return {transform(eq, tr), tr};
}

// t^ = integral of alpha, x^ = x, u^ = u.
inline Mapped gauge_alpha1(const KawaharaEq& eq) {
  eq.validate();
  if (eq.alpha.is_const(1.0)) return {eq, PointTransform::identity(eq.domain)};
  const Expr T = integral(eq.alpha, "t", eq.domain.lo);
  PointTransform tr = make_transform(T, Expr(1.0), Expr(0.0), Expr(1.0), Expr(0.0), eq.domain);
  KawaharaEq out = transform(eq, tr);
  out.alpha = Expr(1.0);
  return {out, tr};
}

// ---------------------------------------------------------------------------
// Reducibility to constant coefficients

struct Reducibility {
  bool reducible = false;
  std::string failed;        // first failed criterion
  std::vector<double> witness;  // (beta/alpha, sigma/alpha) or (c1, c0, sigma alpha^2/beta^3)
  Expr integral_alpha;       // antiderivative of alpha used for c0
};

namespace detail {

inline double sample_value(const Expr& e, const Domain& d) {
  return eval(e, {{d.variable, d.lo + (d.hi - d.lo) * 0.5}});
}

}  // namespace detail

inline Reducibility reducibility(const KawaharaEq& eq) {
  Reducibility r;
  const Domain& d = eq.domain;
  const Expr ba = eq.beta / eq.alpha, sa = eq.sigma / eq.alpha;
  r.integral_alpha = integral(eq.alpha, "t", d.lo);
  if (!eq.is_n1()) {
    if (!is_zero(diff(ba, "t") / ba, d)) {
      r.failed = "(beta/alpha)_t = 0";
      return r;
    }
    if (!is_zero(diff(sa, "t") / sa, d)) {
      r.failed = "(sigma/alpha)_t = 0";
      return r;
    }
    r.reducible = true;
    r.witness = {detail::sample_value(ba, d), detail::sample_value(sa, d)};
    return r;
  }
  const double scale = std::abs(detail::sample_value(ba, d));
  const Expr g = diff(ba / scale, "t") / eq.alpha;
  if (!is_zero(diff(g, "t"), d)) {
    r.failed = "((1/alpha)(beta/alpha)_t)_t = 0";
    return r;
  }
  const Expr s = eq.sigma * pow(eq.alpha, 2.0) / pow(eq.beta, 3.0);
  if (!is_zero(diff(s, "t") / s, d)) {
    r.failed = "(sigma alpha^2/beta^3)_t = 0";
    return r;
  }
  const double c1 = detail::sample_value(g, d) * scale;
  const Expr c0e = ba - c1 * r.integral_alpha;
  if (!is_zero(diff(c0e / scale, "t"), d)) {
    r.failed = "beta/alpha - c1*integral(alpha) constant";
    return r;
  }
  r.reducible = true;
  r.witness = {c1, detail::sample_value(c0e, d), detail::sample_value(s, d)};
  return r;
}

struct ConstantMap {
  KawaharaEq eq;  // constant coefficients
  PointTransform transform;
  double d1 = 0.0, d3 = 0.0, d4 = 0.0;
};

inline ConstantMap map_to_constant(const KawaharaEq& eq) {
  eq.validate();
  Reducibility red = reducibility(eq);
  if (!red.reducible) throw ModelError("equation is not reducible to constant coefficients: " + red.failed);
  ConstantMap out;
  if (!eq.is_n1()) {
    Mapped g = gauge_alpha1(eq);
    out.transform = g.transform;
    out.eq = g.eq;
    out.eq.beta = Expr(red.witness[0]);
    out.eq.sigma = Expr(red.witness[1]);
    return out;
  }
  const double c1 = red.witness[0], c0 = red.witness[1], s = red.witness[2];
  double bt = 0.0;
  if (std::abs(c1) > 1e-12 * std::max(1.0, std::abs(c0))) {
    out.d3 = 1.0;
    out.d4 = c0 / c1;
    bt = c1;
  } else {
    out.d3 = 0.0;
    out.d4 = 1.0;
    bt = c0;
  }
  const Expr A = red.integral_alpha;
  const Expr W = out.d3 * A + out.d4;
  const Expr T = out.d3 != 0.0 ? -1.0 / (out.d3 * W) : A / (out.d4 * out.d4);
  const Expr x = x_var();
  out.transform = make_transform(T, 1.0 / W, Expr(0.0), W, -out.d3 * (x + out.d1), eq.domain);
  KawaharaEq mapped = transform(eq, out.transform);
  out.eq.n = 1.0;
  out.eq.domain = mapped.domain;
  out.eq.alpha = Expr(1.0);
  out.eq.beta = Expr(bt);
  out.eq.sigma = Expr(s * bt * bt * bt);
  const Domain& md = mapped.domain;
  if (!is_zero(mapped.alpha - out.eq.alpha, md, {}, 1e-8) || !is_zero(mapped.beta / bt - 1.0, md, {}, 1e-8) ||
      !is_zero(mapped.sigma / (s * bt * bt * bt) - 1.0, md, {}, 1e-8))
    throw ModelError("map_to_constant: mapped coefficients are not the expected constants");
  return out;
}

// ---------------------------------------------------------------------------
// Sea-ice example

inline KawaharaEq ice_preset() {
  KawaharaEq eq;
  eq.n = 1.0;
  eq.alpha = Expr(1.0);
  eq.beta = 2.20215e-5 * pow(t_var(), 0.5);
  eq.sigma = 1.05566e-8 * pow(t_var(), 1.5);
  eq.domain = Domain{"t", 1.0, 240.0, {}};
  return eq;
}

struct IcePhysical {
  double a = 0.1;             // wave amplitude
  double H = 10.0;            // water depth
  double h0 = 0.04;           // ice thickness h = h0 sqrt(t)
  double E = 3e9;             // Young's modulus
  double nu = 0.3;            // Poisson ratio
  double rho_w = 1025.0;      // water density
  double rho_i = 917.0;       // ice density
  double sigma0 = 1e5;        // compressive stress
  double sigma_xx = 0.0;      // longitudinal stress
  double lambda_wave = 10.0;  // wavelength
};

struct IceCoefficients {
  double epsilon;
  Expr varkappa;  // in t
  Expr gamma;     // in t
};

inline IceCoefficients ice_coefficients(const IcePhysical& p) {
  const double vals[] = {p.a, p.H, p.h0, p.E, p.nu, p.rho_w, p.rho_i, p.lambda_wave};
  for (double v : vals)
    if (!(v > 0.0)) throw ModelError("ice_coefficients: inputs must be positive");
  const double g = 9.81;
  const Expr h = p.h0 * sqrt(t_var());
  IceCoefficients c;
  c.epsilon = p.a / p.H;
  c.varkappa = h * (p.sigma0 - p.sigma_xx) / (p.rho_w * g * p.lambda_wave * p.lambda_wave);
  c.gamma = p.E * pow(h, 3.0) / (12.0 * (1.0 - p.nu * p.nu) * p.rho_w * g * std::pow(p.lambda_wave, 4));
  return c;
}

}  // namespace kawahara
