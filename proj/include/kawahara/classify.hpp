#pragma once

// Lie symmetry classification of u_t + alpha u^n u_x + beta u_xxx + sigma u_xxxxx = 0.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kawahara/model.hpp"

namespace kawahara {

class ClassifyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Coefficients of (pt+q) beta_t = r beta, (pt+q) sigma_t = (5r+2p)/3 sigma
// for n != 1, or (pt^2+qt+r) beta_t = (pt+s) beta,
// (pt^2+qt+r) sigma_t = (3pt + (5s+2q)/3) sigma for n = 1.
struct Quadruple {
  double p = 0.0, q = 0.0, r = 0.0, s = 0.0;
  bool n1 = false;
  double discriminant() const { return q * q - 4.0 * p * r; }
};

// Q = tau d_t + xi d_x + eta d_u
struct SymmetryGenerator {
  Expr tau{0.0};
  Expr xi{0.0};
  Expr eta{0.0};
  std::string label;
};

inline std::string to_string(const SymmetryGenerator& g) {
  std::string out;
  auto term = [&](const Expr& c, const char* d) {
    if (c.is_const(0.0)) return;
    if (!out.empty()) out += " + ";
    if (c.is_const(1.0)) {
      out += d;
    } else {
      out += "(" + to_string(c) + ")*" + d;
    }
  };
  term(g.tau, "d_t");
  term(g.xi, "d_x");
  term(g.eta, "d_u");
  return out.empty() ? "0" : out;
}

struct ClassifyOptions {
  int samples = 8;
  double svd_threshold = 1e-9;
  double verify_tolerance = 1e-8;
  int verify_points = 64;
};

namespace detail {

inline Eigen::MatrixXd classifying_rows(const KawaharaEq& eq, const std::vector<double>& ts, bool n1) {
  const Expr bt = diff(eq.beta, "t"), st = diff(eq.sigma, "t");
  Program prog(std::vector<Expr>{eq.beta, bt, eq.sigma, st}, {"t"});
  const int cols = n1 ? 4 : 3;
  Eigen::MatrixXd A(2 * ts.size(), cols);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double t = ts[i];
    auto v = prog.evaluate(std::vector<double>{t});
    const double b = v[0], b1 = v[1], s = v[2], s1 = v[3];
    if (n1) {
      A.row(2 * i) << t * t * b1 - t * b, t * b1, b1, -b;
      A.row(2 * i + 1) << t * t * s1 - 3.0 * t * s, t * s1 - 2.0 / 3.0 * s, s1, -5.0 / 3.0 * s;
    } else {
      A.row(2 * i) << t * b1, b1, -b;
      A.row(2 * i + 1) << t * s1 - 2.0 / 3.0 * s, s1, -5.0 / 3.0 * s;
    }
  }
  return A;
}

}  // namespace detail

// Relative sup-norm residual of both classifying equations.
inline double classifying_residual(const KawaharaEq& eq, const Quadruple& qd, int points = 64) {
  Eigen::Vector4d v(qd.p, qd.q, qd.r, qd.s);
  const bool n1 = qd.n1;
  Eigen::MatrixXd A = detail::classifying_rows(eq, sample_points(eq.domain, points), n1);
  double res = 0.0, scale = 0.0;
  for (int i = 0; i < A.rows(); ++i) {
    double r = 0.0, m = 0.0;
    for (int j = 0; j < A.cols(); ++j) {
      r += A(i, j) * v[j];
      m += std::abs(A(i, j) * v[j]);
    }
    res = std::max(res, std::abs(r));
    scale = std::max(scale, m);
  }
  return scale == 0.0 ? 0.0 : res / scale;
}

// Nontrivial solution (p, q, r[, s]) of the classifying system for an
// equation with alpha = 1, or nullopt when only the kernel survives.
inline std::optional<Quadruple> solve_classifying_system(const KawaharaEq& eq, const ClassifyOptions& opt = {}) {
  if (!is_zero(eq.alpha - 1.0, eq.domain)) throw ClassifyError("classifying system needs alpha = 1");
  const bool n1 = eq.is_n1();
  Eigen::MatrixXd A = detail::classifying_rows(eq, sample_points(eq.domain, opt.samples), n1);
  for (int i = 0; i < A.rows(); ++i) {
    const double nr = A.row(i).norm();
    if (nr > 0) A.row(i) /= nr;
  }
  Eigen::VectorXd colscale(A.cols());
  for (int j = 0; j < A.cols(); ++j) {
    colscale[j] = A.col(j).norm();
    if (colscale[j] == 0.0) colscale[j] = 1.0;
    A.col(j) /= colscale[j];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv[0];
  int nullity = 0;
  for (int j = 0; j < sv.size(); ++j)
    if (sv[j] <= opt.svd_threshold * smax) ++nullity;
  if (nullity == 0) return std::nullopt;
  if (nullity >= 2) throw ClassifyError("over-determined fit: classifying system has a null space of dimension >= 2");
  Eigen::VectorXd v = svd.matrixV().col(A.cols() - 1);
  for (int j = 0; j < v.size(); ++j) v[j] /= colscale[j];
  const double vmax = v.cwiseAbs().maxCoeff();
  for (int j = 0; j < v.size(); ++j)
    if (std::abs(v[j]) <= 1e-11 * vmax) v[j] = 0.0;
  const int lead = std::abs(v[0]) > 0 ? 0 : std::abs(v[1]) > 0 ? 1 : 2;
  if (v[lead] == 0.0) return std::nullopt;
  v /= v[lead];
  Quadruple qd{v[0], v[1], v[2], n1 ? v[3] : 0.0, n1};
  if (classifying_residual(eq, qd, opt.verify_points) > opt.verify_tolerance) return std::nullopt;
  return qd;
}

// ---------------------------------------------------------------------------
// Canonical forms

struct Canonical {
  std::string tag;
  std::map<std::string, double> parameters;  // rho, rho_raw, nu, m
  EquivParams to_canonical;                  // acts on the gauged equation
};

inline Canonical canonicalize(const Quadruple& qd, double n, const Domain& domain) {
  Canonical c;
  if (!qd.n1) {
    if (n == 1.0) throw ClassifyError("canonicalize: n = 1 needs a quadruple");
    if (qd.p != 0.0) {
      const double shift = qd.q / qd.p;
      c.tag = "1";
      c.parameters["rho"] = qd.r / qd.p;
      const bool reflect = domain.lo + shift < 0.0;
      c.to_canonical = GaugedEquivParams{reflect ? -shift : shift, reflect ? -1.0 : 1.0, 0.0, 1.0};
    } else if (qd.q == 0.0) {
      throw ClassifyError("canonicalize: degenerate quadruple");
    } else if (qd.r != 0.0) {
      const double m = qd.r / qd.q;
      c.tag = "2";
      c.parameters["m"] = m;
      c.to_canonical = GaugedEquivParams{0.0, m, 0.0, 1.0};
    } else {
      c.tag = "3";
      c.to_canonical = GaugedEquivParams{};
    }
    return c;
  }
  if (n != 1.0) throw ClassifyError("canonicalize: quadruple with s requires n = 1");
  const double p = qd.p, q = qd.q, r = qd.r, s = qd.s;
  const double D = qd.discriminant();
  const double dscale = q * q + 4.0 * std::abs(p * r);
  ProjectiveEquivParams m;
  auto reflect_if_negative = [&](ProjectiveEquivParams& mp) {
    const double t0 = domain.lo;
    const double img = (mp.a * t0 + mp.b) / (mp.c * t0 + mp.d);
    if (img < 0.0) {
      mp.a = -mp.a;
      mp.b = -mp.b;
    }
  };
  if (std::abs(D) <= 1e-7 * dscale) {
    if (p != 0.0) {
      const double t0 = -q / (2.0 * p);
      const double M = (p * t0 + s) / p;
      if (std::abs(s - q / 2.0) > 1e-9 * std::max({std::abs(s), std::abs(q), std::abs(p), 1e-300})) {
        c.tag = "2'";
        c.parameters["m"] = M;
        m = ProjectiveEquivParams{0.0, -M, 1.0, -t0, 0.0, 0.0, 1.0};
      } else {
        c.tag = "3'";
        m = ProjectiveEquivParams{0.0, -1.0, 1.0, -t0, 0.0, 0.0, 1.0};
      }
    } else {
      if (s != 0.0) {
        c.tag = "2'";
        c.parameters["m"] = s / r;
        m = ProjectiveEquivParams{s / r, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0};
      } else {
        c.tag = "3'";
        m = ProjectiveEquivParams{};
      }
    }
  } else if (D > 0.0) {
    c.tag = "1'";
    double rho_raw = 0.0, rho = 0.0;
    if (p == 0.0) {
      const double z = -r / q;
      rho_raw = s / q;
      if (rho_raw >= 0.5) {
        rho = rho_raw;
        m = ProjectiveEquivParams{1.0, -z, 0.0, 1.0, 0.0, 0.0, 1.0};
      } else {
        rho = 1.0 - rho_raw;
        m = ProjectiveEquivParams{0.0, 1.0, 1.0, -z, 0.0, 0.0, 1.0};
      }
    } else {
      const double sq = std::sqrt(D);
      const double t1 = (-q + sq) / (2.0 * p), t2 = (-q - sq) / (2.0 * p);
      rho_raw = (p * t1 + s) / (p * (t1 - t2));
      double z = t1, w = t2;
      rho = rho_raw;
      if (rho_raw < 0.5) {
        std::swap(z, w);
        rho = 1.0 - rho_raw;
      }
      m = ProjectiveEquivParams{1.0, -z, 1.0, -w, 0.0, 0.0, 1.0};
    }
    reflect_if_negative(m);
    c.parameters["rho"] = rho;
    c.parameters["rho_raw"] = rho_raw;
  } else {
    if (p == 0.0) throw ClassifyError("canonicalize: negative discriminant with p = 0");
    c.tag = "4'";
    const double mu = -q / (2.0 * p), theta = std::sqrt(-D) / (2.0 * std::abs(p));
    double nu = (p * mu + s) / (3.0 * p * theta);
    m = ProjectiveEquivParams{1.0 / theta, -mu / theta, 0.0, 1.0, 0.0, 0.0, 1.0};
    if (nu < 0.0) {
      nu = -nu;
      m.a = -m.a;
      m.b = -m.b;
    }
    c.parameters["nu"] = nu;
  }
  c.to_canonical = m;
  return c;
}

// ---------------------------------------------------------------------------
// Generators

inline std::vector<SymmetryGenerator> kernel_basis(double n) {
  std::vector<SymmetryGenerator> out{{Expr(0.0), Expr(1.0), Expr(0.0), "d_x"}};
  if (n == 1.0) out.push_back({Expr(0.0), t_var(), Expr(1.0), "t d_x + d_u"});
  return out;
}

// Table-1 basis for the case in canonical coordinates.
inline std::vector<SymmetryGenerator> table_basis(const std::string& tag, double n,
                                                  const std::map<std::string, double>& prm) {
  const Expr t = t_var(), x = x_var(), u = u_var();
  auto get = [&](const char* k) {
    auto it = prm.find(k);
    return it == prm.end() ? 0.0 : it->second;
  };
  std::vector<SymmetryGenerator> out = kernel_basis(n);
  const double rho = get("rho"), nu = get("nu");
  if (tag == "1") {
    out.push_back({3.0 * n * t, (rho + 1.0) * n * x, (rho - 2.0) * u, "3nt d_t + (rho+1)nx d_x + (rho-2)u d_u"});
  } else if (tag == "2") {
    out.push_back({Expr(3.0 * n), n * x, u, "3n d_t + nx d_x + u d_u"});
  } else if (tag == "3" || tag == "3'") {
    out.push_back({Expr(1.0), Expr(0.0), Expr(0.0), "d_t"});
  } else if (tag == "1'") {
    out.push_back({3.0 * t, (rho + 1.0) * x, (rho - 2.0) * u, "3t d_t + (rho+1)x d_x + (rho-2)u d_u"});
  } else if (tag == "2'") {
    out.push_back({Expr(3.0), x, u, "3 d_t + x d_x + u d_u"});
  } else if (tag == "4'") {
    out.push_back({pow(t, 2.0) + 1.0, (t + nu) * x, (nu - t) * u + x,
                   "(t^2+1) d_t + (t+nu)x d_x + ((nu-t)u + x) d_u"});
  }
  return out;
}

// Generator in source variables whose image under tr is g.
inline SymmetryGenerator pull_back(const SymmetryGenerator& g, const PointTransform& tr) {
  const Substitution phi{{"t", tr.T}, {"x", tr.X1 * x_var() + tr.X0}, {"u", tr.U1 * u_var() + tr.U0}};
  const Expr tau = substitute(g.tau, phi) / diff(tr.T, "t");
  const Expr xi = (substitute(g.xi, phi) - tau * (diff(tr.X1, "t") * x_var() + diff(tr.X0, "t"))) / tr.X1;
  const Expr eta = (substitute(g.eta, phi) - tau * (diff(tr.U1, "t") * u_var() + diff(tr.U0, "t")) -
                    xi * (diff(tr.U1, "x") * u_var() + diff(tr.U0, "x"))) /
                   tr.U1;
  return {tau, xi, eta, g.label};
}

using GeneratorCheck = GridResidual;

// The determining equations of the symmetry condition, split by powers of u,
// as expressions in (t, x).
inline std::vector<Expr> determining_equations(const KawaharaEq& eq, const SymmetryGenerator& g) {
  const Expr tau = g.tau, xi = g.xi;
  const Expr eta1 = diff(g.eta, "u");
  const Expr eta0 = substitute(g.eta, "u", Expr(0.0));
  const Expr& a = eq.alpha;
  const Expr& b = eq.beta;
  const Expr& s = eq.sigma;
  const double n = eq.n;
  auto dx = [](const Expr& e, int k) { return diff(e, "x", k); };
  std::vector<Expr> out;
  out.push_back(dx(eta1, 1) - 2.0 * dx(xi, 2));
  out.push_back(3.0 * (dx(eta1, 1) - dx(xi, 2)) * b + 5.0 * (2.0 * dx(eta1, 3) - dx(xi, 4)) * s);
  out.push_back(tau * diff(s, "t") - (5.0 * dx(xi, 1) - diff(tau, "t")) * s);
  out.push_back(tau * diff(b, "t") - (3.0 * dx(xi, 1) - diff(tau, "t")) * b - 10.0 * (dx(xi, 3) - dx(eta1, 2)) * s);
  std::map<double, Expr> e5, e6;
  auto add = [](std::map<double, Expr>& m, double k, const Expr& c) {
    auto it = m.find(k);
    if (it == m.end()) {
      m.emplace(k, c);
    } else {
      it->second = it->second + c;
    }
  };
  add(e5, n + 1.0, a * dx(eta1, 1));
  add(e5, n, a * dx(eta0, 1));
  add(e5, 1.0, diff(eta1, "t") + dx(eta1, 3) * b + dx(eta1, 5) * s);
  add(e5, 0.0, diff(eta0, "t") + dx(eta0, 3) * b + dx(eta0, 5) * s);
  add(e6, n, tau * diff(a, "t") + a * (diff(tau, "t") - dx(xi, 1) + n * eta1));
  add(e6, n - 1.0, n * a * eta0);
  add(e6, 0.0, (3.0 * dx(eta1, 2) - dx(xi, 3)) * b + (5.0 * dx(eta1, 4) - dx(xi, 5)) * s - diff(xi, "t"));
  for (auto& [k, c] : e5) out.push_back(c);
  for (auto& [k, c] : e6) out.push_back(c);
  for (Expr& e : out) e = substitute(e, "u", Expr(0.0));
  return out;
}

inline GeneratorCheck verify_generator(const KawaharaEq& eq, const SymmetryGenerator& g,
                                       const Bindings& params = {}, const Domain& xdom = {"x", -2.0, 2.0, {}}) {
  const Expr t_dep[] = {diff(g.tau, "x"), diff(g.tau, "u"), diff(g.xi, "u"), diff(g.eta, "u", 2)};
  for (const Expr& e : t_dep) {
    if (e.is_const(0.0)) continue;
    Expr probe = substitute(e, "u", Expr(0.7));
    if (!is_zero_grid(probe, eq.domain, xdom, params))
      throw ClassifyError("generator violates tau = tau(t), xi = xi(t, x), eta affine in u");
  }
  return grid_residual(determining_equations(eq, g), eq.domain, xdom, 16, params);
}

// ---------------------------------------------------------------------------
// Classification

struct ClassificationResult {
  std::string case_tag;
  double n = 1.0;
  std::map<std::string, double> parameters;     // rho, rho_raw, nu, m, lambda, delta
  std::optional<Quadruple> quadruple;
  std::vector<SymmetryGenerator> basis;          // in the variables of the input equation
  std::vector<SymmetryGenerator> canonical_basis;
  std::vector<GeneratorCheck> checks;
  KawaharaEq canonical_eq;
  PointTransform gauge;         // input -> alpha = 1
  PointTransform to_canonical;  // input -> canonical coordinates
  std::vector<std::string> notes;
};

namespace detail {

inline double fit_ratio(const Expr& coeff, const Expr& shape, const Domain& d, const char* what) {
  const double tv = d.lo + 0.5 * (d.hi - d.lo);
  const double k = eval(coeff / shape, {{"t", tv}});
  if (!is_zero(coeff / (k * shape) - 1.0, d, {}, 1e-8))
    throw ClassifyError(std::string("fitted ") + what + " is not constant in canonical coordinates");
  return k;
}

}  // namespace detail

inline ClassificationResult classify(const KawaharaEq& eq, const ClassifyOptions& opt = {}) {
  eq.validate();
  ClassificationResult res;
  res.n = eq.n;
  Mapped g = gauge_alpha1(eq);
  res.gauge = g.transform;
  const KawaharaEq& geq = g.eq;
  res.quadruple = solve_classifying_system(geq, opt);
  const Expr t = t_var();
  if (!res.quadruple) {
    res.case_tag = eq.is_n1() ? "0'" : "0";
    res.canonical_eq = geq;
    res.to_canonical = g.transform;
  } else {
    Canonical c = canonicalize(*res.quadruple, eq.n, geq.domain);
    res.case_tag = c.tag;
    res.parameters = c.parameters;
    Mapped m = apply_equiv(geq, c.to_canonical);
    res.canonical_eq = m.eq;
    res.to_canonical = g.transform.then(m.transform);
    const Domain& cd = m.eq.domain;
    const std::string& tag = c.tag;
    Expr bshape(1.0), sshape(1.0);
    if (tag == "1" || tag == "1'") {
      const double rho = c.parameters["rho"];
      bshape = pow(t, rho);
      sshape = pow(t, (5.0 * rho + 2.0) / 3.0);
    } else if (tag == "2" || tag == "2'") {
      bshape = exp(t);
      sshape = exp(5.0 / 3.0 * t);
    } else if (tag == "4'") {
      const double nu = c.parameters["nu"];
      bshape = sqrt(pow(t, 2.0) + 1.0) * exp(3.0 * nu * atan(t));
      sshape = pow(pow(t, 2.0) + 1.0, 1.5) * exp(5.0 * nu * atan(t));
    }
    if (!is_zero(m.eq.alpha - 1.0, cd, {}, 1e-8)) throw ClassifyError("canonical form lost alpha = 1");
    res.parameters["lambda"] = detail::fit_ratio(m.eq.beta, bshape, cd, "lambda");
    res.parameters["delta"] = detail::fit_ratio(m.eq.sigma, sshape, cd, "delta");
    if (tag == "1'" && std::abs(res.parameters["rho"] - 2.0) < 1e-9)
      res.notes.push_back("case 1' with rho = 2 is equivalent to rho = -1 via t' = 1/t, x' = -x/t, u' = tu - x");
  }
  res.canonical_basis = table_basis(res.case_tag, eq.n, res.parameters);
  for (const auto& cg : res.canonical_basis) res.basis.push_back(pull_back(cg, res.to_canonical));
  for (const auto& b : res.basis) {
    GeneratorCheck chk = verify_generator(eq, b);
    if (!chk.ok(1e-8))
      throw ClassifyError("internal: generator " + b.label + " fails the determining equations (residual " +
                          std::to_string(chk.relative()) + ")");
    res.checks.push_back(chk);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Optimal systems of one-dimensional subalgebras

struct Subalgebra {
  std::string label;
  SymmetryGenerator generator;          // canonical coordinates; may contain a and s0
  std::vector<std::string> parameters;  // free parameters in the generator
  std::string parameter_domain;
};

inline std::vector<Subalgebra> optimal_subalgebras(const std::string& tag, double n,
                                                   const std::map<std::string, double>& prm) {
  const Expr t = t_var(), x = x_var(), u = u_var(), a = var("a"), s0 = var("s0");
  auto get = [&](const char* k) {
    auto it = prm.find(k);
    return it == prm.end() ? 0.0 : it->second;
  };
  const double rho = get("rho"), nu = get("nu");
  const std::string any_a = "a in R";
  const std::string sigma_set = "s0 in {-1, 0, 1}";
  std::vector<Subalgebra> out{{"g0", {Expr(0.0), Expr(1.0), Expr(0.0), "d_x"}, {}, ""}};
  auto g0p_s = Subalgebra{"g0'", {Expr(0.0), t + s0, Expr(1.0), "(t+s0) d_x + d_u"}, {"s0"}, sigma_set};
  if (tag == "0") return out;
  if (tag == "0'") {
    out.push_back({"g0'", {Expr(0.0), t + a, Expr(1.0), "(t+a) d_x + d_u"}, {"a"}, any_a});
  } else if (tag == "1") {
    if (std::abs(rho + 1.0) < 1e-9) {
      out.push_back({"g1.2", {n * t, a, -u, "nt d_t + a d_x - u d_u"}, {"a"}, any_a});
    } else {
      out.push_back({"g1.1", {3.0 * n * t, (rho + 1.0) * n * x, (rho - 2.0) * u,
                              "3nt d_t + (rho+1)nx d_x + (rho-2)u d_u"}, {}, ""});
    }
  } else if (tag == "2") {
    out.push_back({"g2", {Expr(3.0 * n), n * x, u, "3n d_t + nx d_x + u d_u"}, {}, ""});
  } else if (tag == "3") {
    out.push_back({"g3", {Expr(1.0), a, Expr(0.0), "d_t + a d_x"}, {"a"}, any_a});
  } else if (tag == "1'") {
    out.push_back(g0p_s);
    if (std::abs(rho + 1.0) < 1e-9) {
      out.push_back({"g1'.2", {t, a, -u, "t d_t + a d_x - u d_u"}, {"a"}, any_a});
    } else if (std::abs(rho - 2.0) < 1e-9) {
      out.push_back({"g1'.3", {t, x + a * t, a, "t d_t + (x + at) d_x + a d_u"}, {"a"}, any_a});
    } else {
      out.push_back({"g1'.1", {3.0 * t, (rho + 1.0) * x, (rho - 2.0) * u,
                               "3t d_t + (rho+1)x d_x + (rho-2)u d_u"}, {}, ""});
    }
  } else if (tag == "2'") {
    out.push_back({"g0'", {Expr(0.0), t, Expr(1.0), "t d_x + d_u"}, {}, ""});
    out.push_back({"g2'", {Expr(3.0), x, u, "3 d_t + x d_x + u d_u"}, {}, ""});
  } else if (tag == "3'") {
    out.push_back({"g3'.1", {Expr(1.0), Expr(0.0), Expr(0.0), "d_t"}, {}, ""});
    out.push_back({"g3'.2", {a, 2.0 * t, Expr(2.0), "a d_t + 2t d_x + 2 d_u"}, {"a"}, any_a});
  } else if (tag == "4'") {
    out.push_back({"g4'", {pow(t, 2.0) + 1.0, (t + nu) * x, x + (nu - t) * u,
                           "(t^2+1) d_t + (t+nu)x d_x + (x + (nu-t)u) d_u"}, {}, ""});
  } else {
    throw ClassifyError("optimal_subalgebras: unknown case " + tag);
  }
  return out;
}

inline std::vector<Subalgebra> optimal_subalgebras(const ClassificationResult& r) {
  return optimal_subalgebras(r.case_tag, r.n, r.parameters);
}

}  // namespace kawahara
