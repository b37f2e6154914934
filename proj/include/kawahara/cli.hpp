#pragma once

// Commands behind the kawahara executable. Each command maps a JSON job
// configuration to a JSON report plus optional CSV artifacts.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kawahara/classify.hpp"
#include "kawahara/model.hpp"
#include "kawahara/ode.hpp"
#include "kawahara/parse.hpp"
#include "kawahara/reduce.hpp"
#include "kawahara/solutions.hpp"

namespace kawahara::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { ok = 0, config_error = 2, math_failure = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MathFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::optional<double> rtol;
  std::optional<std::pair<int, int>> grid;  // nt, nx
  std::optional<std::string> case_tag;
  std::optional<std::string> subalgebra;
  std::optional<std::string> out_dir;
};

struct CommandResult {
  int exit_code = ok;
  Json report;
  std::map<std::string, std::string> files;  // name -> contents
};

// ---------------------------------------------------------------------------
// Deterministic JSON text

inline std::string number_text(double v) {
  if (!std::isfinite(v)) return "null";
  if (v == 0.0) return std::signbit(v) ? "-0.0" : "0.0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline void write_json(std::string& out, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        write_json(out, it.value(), indent, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        write_json(out, j[i], indent, depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case Json::value_t::number_float:
      out += number_text(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

inline std::string to_text(const Json& j) {
  std::string out;
  write_json(out, j, 2, 0);
  return out + "\n";
}

// ---------------------------------------------------------------------------
// Configuration parsing

inline double get_number(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

inline double require_number(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing '") + key + "'");
  return get_number(j, key, 0.0);
}

inline std::map<std::string, double> parameter_map(const Json& j) {
  std::map<std::string, double> out;
  if (!j.contains("parameters")) return out;
  if (!j["parameters"].is_object()) throw ConfigError("'parameters' must be an object");
  for (auto it = j["parameters"].begin(); it != j["parameters"].end(); ++it) {
    if (!it.value().is_number()) throw ConfigError("parameter '" + it.key() + "' must be a number");
    out[it.key()] = it.value().get<double>();
  }
  return out;
}

inline Expr parse_field(const Json& j, const char* key, const std::map<std::string, double>& prm,
                        const std::string& fallback = "") {
  std::string text = fallback;
  if (j.contains(key)) {
    if (j[key].is_number()) {
      return Expr(j[key].get<double>());
    }
    if (!j[key].is_string()) throw ConfigError(std::string("'") + key + "' must be an expression string");
    text = j[key].get<std::string>();
  } else if (fallback.empty()) {
    throw ConfigError(std::string("missing '") + key + "'");
  }
  try {
    return parse(text, prm);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("cannot parse ") + key + " = \"" + text + "\": " + e.what());
  }
}

inline Domain parse_range(const Json& j, const char* key, Domain fallback, int* count = nullptr) {
  if (!j.contains(key)) return fallback;
  const Json& r = j[key];
  if (!r.is_array() || r.size() < 2 || r.size() > 3) throw ConfigError(std::string("'") + key + "' must be [lo, hi] or [lo, hi, n]");
  for (const auto& v : r)
    if (!v.is_number()) throw ConfigError(std::string("'") + key + "' entries must be numbers");
  fallback.lo = r[0].get<double>();
  fallback.hi = r[1].get<double>();
  if (!(fallback.lo < fallback.hi)) throw ConfigError(std::string("'") + key + "' needs lo < hi");
  if (r.size() == 3) {
    if (!count) throw ConfigError(std::string("'") + key + "' takes no point count here");
    *count = r[2].get<int>();
    if (*count < 2) throw ConfigError(std::string("'") + key + "' needs at least 2 points");
  }
  return fallback;
}

inline KawaharaEq parse_equation(const Json& cfg) {
  if (!cfg.contains("equation")) throw ConfigError("missing 'equation'");
  const Json& j = cfg["equation"];
  if (!j.is_object()) throw ConfigError("'equation' must be an object");
  if (j.contains("preset")) {
    if (j["preset"] != "ice") throw ConfigError("unknown equation preset " + j["preset"].dump());
    KawaharaEq eq = ice_preset();
    eq.domain = parse_range(j, "domain", eq.domain);
    return eq;
  }
  const auto prm = parameter_map(j);
  KawaharaEq eq;
  eq.n = get_number(j, "n", 1.0);
  eq.alpha = parse_field(j, "alpha", prm, "1");
  eq.beta = parse_field(j, "beta", prm);
  eq.sigma = parse_field(j, "sigma", prm);
  eq.domain = parse_range(j, "domain", eq.domain);
  try {
    eq.validate();
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
  return eq;
}

inline const Json& section(const Json& cfg, const char* name) {
  static const Json empty = Json::object();
  if (!cfg.contains(name)) return empty;
  if (!cfg[name].is_object()) throw ConfigError(std::string("'") + name + "' must be an object");
  return cfg[name];
}

// ---------------------------------------------------------------------------
// Report fragments

inline Json equation_json(const KawaharaEq& eq) {
  return Json{{"n", eq.n},
              {"alpha", to_string(eq.alpha)},
              {"beta", to_string(eq.beta)},
              {"sigma", to_string(eq.sigma)},
              {"domain", Json::array({eq.domain.lo, eq.domain.hi})}};
}

inline Json generator_json(const SymmetryGenerator& g) {
  return Json{{"label", g.label}, {"tau", to_string(g.tau)}, {"xi", to_string(g.xi)}, {"eta", to_string(g.eta)}};
}

inline Json transform_json(const PointTransform& tr) {
  return Json{{"T", to_string(tr.T)},   {"X1", to_string(tr.X1)}, {"X0", to_string(tr.X0)},
              {"U1", to_string(tr.U1)}, {"U0", to_string(tr.U0)}, {"t_inverse", to_string(tr.T_inverse)}};
}

inline Json residual_json(const Residual& r) {
  return Json{{"max_abs", r.max_abs},
              {"scale", r.scale},
              {"normalized", r.normalized()},
              {"evaluated", r.evaluated},
              {"flagged", r.flagged}};
}

inline std::string table_row(const std::string& tag) {
  if (tag == "0") return "kernel <d_x>";
  if (tag == "0'") return "kernel <d_x, t d_x + d_u>";
  if (tag == "1" || tag == "1'") return "beta = lambda t^rho, sigma = delta t^((5 rho + 2)/3)";
  if (tag == "2" || tag == "2'") return "beta = lambda e^t, sigma = delta e^(5t/3)";
  if (tag == "3" || tag == "3'") return "beta = lambda, sigma = delta";
  if (tag == "4'") return "beta = lambda sqrt(t^2+1) e^(3 nu atan t), sigma = delta (t^2+1)^(3/2) e^(5 nu atan t)";
  return "";
}

inline std::string summary(const ClassificationResult& r) {
  if (r.case_tag == "0" || r.case_tag == "0'") return "case " + r.case_tag + " (" + table_row(r.case_tag) + ")";
  std::string s = "case " + r.case_tag;
  for (const char* k : {"rho", "nu"}) {
    auto it = r.parameters.find(k);
    if (it == r.parameters.end()) continue;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", it->second);
    s += std::string(", ") + k + "=" + buf;
  }
  return s;
}

inline Json classification_json(const ClassificationResult& r) {
  Json j;
  j["case"] = r.case_tag;
  j["summary"] = summary(r);
  j["table_row"] = table_row(r.case_tag);
  j["n"] = r.n;
  j["parameters"] = Json::object();
  for (const auto& [k, v] : r.parameters) j["parameters"][k] = v;
  if (r.quadruple) {
    const auto& q = *r.quadruple;
    j["quadruple"] = Json{{"p", q.p}, {"q", q.q}, {"r", q.r}, {"s", q.s}};
  } else {
    j["quadruple"] = nullptr;
  }
  j["generators"] = Json::array();
  for (std::size_t i = 0; i < r.basis.size(); ++i) {
    Json g = generator_json(r.basis[i]);
    g["residual"] = r.checks[i].residual;
    g["scale"] = r.checks[i].scale;
    j["generators"].push_back(g);
  }
  j["canonical_generators"] = Json::array();
  for (const auto& g : r.canonical_basis) j["canonical_generators"].push_back(generator_json(g));
  j["canonical_equation"] = equation_json(r.canonical_eq);
  j["to_canonical"] = transform_json(r.to_canonical);
  j["notes"] = r.notes;
  return j;
}

inline ClassificationResult run_classify(const KawaharaEq& eq, const Json& cfg, const Overrides& ov) {
  const Json& c = section(cfg, "classify");
  ClassifyOptions opt;
  opt.svd_threshold = get_number(c, "svd_threshold", opt.svd_threshold);
  opt.verify_tolerance = get_number(c, "verify_tolerance", opt.verify_tolerance);
  if (!(opt.svd_threshold > 0.0 && opt.verify_tolerance > 0.0)) throw ConfigError("tolerances must be positive");
  ClassificationResult r = classify(eq, opt);
  std::optional<std::string> demanded = ov.case_tag;
  if (!demanded && c.contains("case")) demanded = c["case"].get<std::string>();
  if (demanded && *demanded != r.case_tag)
    throw MathFailure("requested case " + *demanded + " but the equation classifies as case " + r.case_tag);
  return r;
}

// ---------------------------------------------------------------------------
// Commands

inline CommandResult cmd_classify(const Json& cfg, const Overrides& ov) {
  const KawaharaEq eq = parse_equation(cfg);
  CommandResult out;
  out.report["command"] = "classify";
  out.report["equation"] = equation_json(eq);
  out.report["classification"] = classification_json(run_classify(eq, cfg, ov));
  return out;
}

inline Json reduction_json(const Reduction& red, const PointTransform& to_canonical) {
  Json j;
  j["case"] = red.case_tag;
  j["subalgebra"] = red.subalgebra;
  j["parameters"] = Json::object();
  for (const auto& [k, v] : red.parameters) j["parameters"][k] = v;
  j["ansatz"] = red.ansatz_text();
  j["omega"] = to_string(red.omega);
  j["scale"] = to_string(red.scale);
  j["shift"] = to_string(red.shift);
  j["order"] = red.order();
  j["ode"] = red.ode_text();
  if (red.first_order) {
    j["coefficients"] = Json{{"a", red.first_order_a}};
  } else {
    const auto& c = red.ode;
    j["coefficients"] = Json{{"delta", c.delta}, {"lambda", c.lambda}, {"n", c.n}, {"c0", c.c0},
                             {"c1", c.c1},       {"c2", c.c2},         {"c3", c.c3}, {"c4", c.c4}};
  }
  j["closed_form"] = red.closed_form ? Json(to_string(*red.closed_form)) : Json(nullptr);
  // the same ansatz in the coordinates of the input equation
  const PointTransform& tr = to_canonical;
  const Substitution to_new{{"t", tr.T}, {"x", tr.X1 * x_var() + tr.X0}};
  j["input_coordinates"] = Json{{"omega", to_string(substitute(red.omega, to_new))},
                                {"scale", to_string(substitute(red.scale, to_new) / tr.U1)},
                                {"shift", to_string((substitute(red.shift, to_new) - tr.U0) / tr.U1)}};
  j["notes"] = red.notes;
  return j;
}

inline CommandResult cmd_reduce(const Json& cfg, const Overrides& ov) {
  const KawaharaEq eq = parse_equation(cfg);
  const Json& c = section(cfg, "reduce");
  std::string label;
  if (ov.subalgebra) {
    label = *ov.subalgebra;
  } else if (c.contains("subalgebra")) {
    label = c["subalgebra"].get<std::string>();
  } else {
    throw ConfigError("reduce needs a subalgebra ('reduce.subalgebra' or --subalgebra)");
  }
  const ClassificationResult res = run_classify(eq, cfg, ov);
  Reduction red;
  try {
    red = build_reduction(res, label, parameter_map(c));
  } catch (const ReduceError& e) {
    throw ConfigError(e.what());
  }
  CommandResult out;
  out.report["command"] = "reduce";
  out.report["equation"] = equation_json(eq);
  out.report["classification"] = Json{{"case", res.case_tag}, {"summary", summary(res)}};
  out.report["subalgebras"] = Json::array();
  for (const auto& s : optimal_subalgebras(res)) out.report["subalgebras"].push_back(s.label);
  out.report["reduction"] = reduction_json(red, res.to_canonical);
  return out;
}

inline std::vector<double> linspace(const Domain& d, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = d.lo + (d.hi - d.lo) * i / (n - 1);
  return v;
}

// Invariant BVP parameters read off the classification of the input.
inline InvariantBVP bvp_from_equation(const KawaharaEq& eq, const ClassificationResult& res) {
  if (res.case_tag != "1" && res.case_tag != "1'")
    throw MathFailure("invariant boundary value problems need case 1 or 1', got case " + res.case_tag);
  InvariantBVP bvp;
  bvp.n = eq.n;
  bvp.rho = res.parameters.at("rho");
  bvp.lambda = res.parameters.at("lambda");
  bvp.delta = res.parameters.at("delta");
  bvp.t0 = eq.domain.lo;
  const KawaharaEq form = bvp.equation(eq.domain.hi);
  const Domain& d = eq.domain;
  if (!is_zero(eq.alpha - 1.0, d, {}, 1e-9) || !is_zero(eq.beta / form.beta - 1.0, d, {}, 1e-8) ||
      !is_zero(eq.sigma / form.sigma - 1.0, d, {}, 1e-8))
    throw MathFailure("equation is of case " + res.case_tag +
                      " but not in the invariant form alpha = 1, beta = lambda t^rho, sigma = delta t^((5rho+2)/3); "
                      "map it with the classification transform first");
  return bvp;
}

struct SolveOutcome {
  InvariantBVP bvp;
  InitialValueProblem ivp;
  ODESolution phi;
  GridSolution grid;
  OdeResidual residual;
  double bc_error = 0.0;
  OdeOptions options;
};

inline SolveOutcome run_solve(const KawaharaEq& eq, const Json& cfg, const Overrides& ov) {
  const Json& c = section(cfg, "solve");
  const ClassificationResult res = run_classify(eq, cfg, ov);
  SolveOutcome s;
  s.bvp = bvp_from_equation(eq, res);
  if (!c.contains("gamma") || !c["gamma"].is_array() || c["gamma"].size() != 5)
    throw ConfigError("'solve.gamma' must list the five boundary values");
  for (int i = 0; i < 5; ++i) s.bvp.gamma[static_cast<std::size_t>(i)] = c["gamma"][static_cast<std::size_t>(i)].get<double>();
  try {
    s.ivp = bvp_to_ivp(s.bvp);
  } catch (const ReduceError& e) {
    throw ConfigError(e.what());
  }
  s.options.rtol = ov.rtol ? *ov.rtol : get_number(c, "rtol", 1e-8);
  s.options.atol = get_number(c, "atol", 1e-2 * s.options.rtol);
  s.options.max_steps = static_cast<std::size_t>(get_number(c, "max_steps", 1e6));
  if (!(s.options.rtol > 0.0 && s.options.atol > 0.0)) throw ConfigError("tolerances must be positive");
  const double omega_max = get_number(c, "omega_max", 5.0);
  if (!(omega_max > 0.0)) throw ConfigError("'solve.omega_max' must be positive");
  try {
    s.phi = integrate(s.ivp.reduction.rhs(), s.ivp.y0, 0.0, omega_max, s.options);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  s.residual = ode_residual(s.ivp.reduction, s.phi);
  int nt = 21, nx = 21;
  Domain td = parse_range(c, "t", eq.domain, &nt);
  Domain xd = parse_range(c, "x", Domain{"x", 0.0, omega_max, {}}, &nx);
  if (ov.grid) std::tie(nt, nx) = *ov.grid;
  const auto ts = linspace(td, nt), xs = linspace(xd, nx);
  s.grid = reconstruct(s.ivp.reduction, s.phi, ts, xs);
  for (double tv : ts) {
    const auto d = x_derivatives(s.ivp.reduction, s.phi, tv, 0.0);
    for (int i = 0; i < 5; ++i) {
      const double want = s.bvp.boundary_value(i, tv);
      const double err = want != 0.0 ? std::abs(d[static_cast<std::size_t>(i)] - want) / std::abs(want)
                                     : std::abs(d[static_cast<std::size_t>(i)]);
      s.bc_error = std::max(s.bc_error, err);
    }
  }
  return s;
}

inline std::string phi_csv(const ODESolution& phi) {
  std::ostringstream os;
  os << "omega,phi,phi1,phi2,phi3,phi4\n";
  for (std::size_t i = 0; i < phi.mesh().size(); ++i) {
    os << number_text(phi.mesh()[i]);
    for (double v : phi.states()[i]) os << ',' << number_text(v);
    os << '\n';
  }
  return os.str();
}

inline std::string grid_csv(const GridSolution& g) {
  std::ostringstream os;
  os << "t,x,u\n";
  for (std::size_t i = 0; i < g.u.size(); ++i)
    os << number_text(g.t[i]) << ',' << number_text(g.x[i]) << ',' << (g.valid[i] ? number_text(g.u[i]) : "nan") << '\n';
  return os.str();
}

inline CommandResult cmd_solve(const Json& cfg, const Overrides& ov) {
  const KawaharaEq eq = parse_equation(cfg);
  SolveOutcome s = run_solve(eq, cfg, ov);
  CommandResult out;
  Json& r = out.report;
  r["command"] = "solve";
  r["equation"] = equation_json(eq);
  r["ivp"] = Json{{"ode", s.ivp.reduction.ode_text()},
                  {"ansatz", s.ivp.reduction.ansatz_text()},
                  {"initial_values", s.ivp.y0},
                  {"rho", s.bvp.rho},
                  {"lambda", s.bvp.lambda},
                  {"delta", s.bvp.delta}};
  r["integration"] = Json{{"status", to_string(s.phi.status())},
                          {"message", s.phi.message()},
                          {"start", s.phi.start()},
                          {"target", s.phi.target()},
                          {"reached", s.phi.reached()},
                          {"steps", s.phi.stats().steps},
                          {"rejections", s.phi.stats().rejections},
                          {"rhs_evaluations", s.phi.stats().rhs_evaluations},
                          {"rtol", s.options.rtol},
                          {"atol", s.options.atol}};
  r["ode_residual"] = Json{{"residual", s.residual.residual}, {"scale", s.residual.scale}, {"relative", s.residual.relative()}};
  r["boundary_conditions"] = Json{{"max_rel_error", s.bc_error}};
  r["grid"] = Json{{"points", s.grid.u.size()}, {"flagged", s.grid.flagged()}};
  out.files["phi.csv"] = phi_csv(s.phi);
  out.files["grid.csv"] = grid_csv(s.grid);
  if (!s.phi.success()) {
    r["error"] = "integration stopped at omega = " + number_text(s.phi.reached()) + " before omega = " +
                 number_text(s.phi.target()) + " (" + to_string(s.phi.status()) + ")";
    out.exit_code = math_failure;
  }
  return out;
}

struct FigurePreset {
  const char* alpha;
  double chi;
};

inline ExactSolution build_exact(const Json& cfg) {
  const Json& c = section(cfg, "exact");
  if (!c.contains("family")) throw ConfigError("missing 'exact.family'");
  const std::string family = c["family"].get<std::string>();
  try {
    if (family == "degenerate") {
      return degenerate_solution(parse_equation(cfg), get_number(c, "c", 0.0), get_number(c, "a", 0.0));
    }
    if (family == "tanh_n2") {
      const double tb = get_number(c, "tilde_beta", -1.0), ts = get_number(c, "tilde_sigma", -0.1);
      double chi = get_number(c, "chi", 0.0);
      Expr alpha;
      Domain d{"t", 1.0, 2.0, {}};
      if (c.contains("figure")) {
        static const FigurePreset figs[] = {{"1/t", 0.0}, {"1/t^2", -17.0}, {"sqrt(t)", 15.0}};
        const int f = c["figure"].get<int>();
        if (f < 1 || f > 3) throw ConfigError("'exact.figure' must be 1, 2 or 3");
        alpha = parse(figs[f - 1].alpha);
        if (!c.contains("chi")) chi = figs[f - 1].chi;
      } else {
        alpha = parse_field(c, "alpha", parameter_map(c));
      }
      d = parse_range(c, "domain", d);
      return tanh_solution_n2(proportional_equation(alpha, 2.0, tb, ts, d), tb, ts, get_number(c, "k", 1.0), chi);
    }
    if (family == "kudryashov") {
      return kudryashov_family(get_number(c, "tilde_alpha", 1.0), require_number(c, "tilde_beta"),
                               require_number(c, "tilde_sigma"), static_cast<int>(get_number(c, "branch", 1)),
                               get_number(c, "mu", 0.0), get_number(c, "chi", 0.0),
                               parse_range(c, "domain", Domain{"t", 1.0, 2.0, {}}));
    }
    if (family == "mapped_kudryashov") {
      return mapped_kudryashov(parse_equation(cfg), get_number(c, "delta1", 0.0), require_number(c, "delta3"),
                               require_number(c, "delta4"), get_number(c, "mu", 0.0), get_number(c, "chi", 0.0),
                               static_cast<int>(get_number(c, "branch", 1)));
    }
  } catch (const SolutionError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown exact family '" + family + "'");
}

inline SampleGrid grid_from(const Json& c, SampleGrid g, const Overrides& ov) {
  g.t = parse_range(c, "t", g.t, &g.nt);
  g.x = parse_range(c, "x", g.x, &g.nx);
  if (ov.grid) std::tie(g.nt, g.nx) = *ov.grid;
  if (g.nt < 2 || g.nx < 2) throw ConfigError("grid needs at least 2 points per axis");
  return g;
}

inline std::string exact_csv(const Expr& u, const SampleGrid& g) {
  Program p(u, {"t", "x"});
  std::ostringstream os;
  os << "t,x,u\n";
  for (int i = 0; i < g.nt; ++i) {
    for (int j = 0; j < g.nx; ++j) {
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        v = p({g.t_at(i), g.x_at(j)});
      } catch (const EvalError&) {
      }
      os << number_text(g.t_at(i)) << ',' << number_text(g.x_at(j)) << ',' << (std::isfinite(v) ? number_text(v) : "nan")
         << '\n';
    }
  }
  return os.str();
}

inline CommandResult cmd_exact(const Json& cfg, const Overrides& ov) {
  const ExactSolution s = build_exact(cfg);
  const Json& c = section(cfg, "exact");
  const SampleGrid g = grid_from(c, SampleGrid::on(s.solution), ov);
  const double tol = get_number(c, "tolerance", 1e-7);
  const Residual r = pde_residual(s.eq, s.u(), g);
  const ConservationResidual cons = conservation_check(s.eq, s.u(), g);
  CommandResult out;
  Json& j = out.report;
  j["command"] = "exact";
  j["family"] = s.family;
  j["equation"] = equation_json(s.eq);
  j["parameters"] = Json::object();
  for (const auto& [k, v] : s.parameters) j["parameters"][k] = v;
  j["u"] = to_string(s.u());
  j["grid"] = Json{{"t", Json::array({g.t.lo, g.t.hi, g.nt})}, {"x", Json::array({g.x.lo, g.x.hi, g.nx})}};
  j["pde_residual"] = residual_json(r);
  j["conservation"] = Json{{"momentum", residual_json(cons.momentum)}, {"energy", residual_json(cons.energy)}};
  j["tolerance"] = tol;
  const bool verified = r.flagged == 0 && r.normalized() <= tol;
  j["verified"] = verified;
  if (!verified) {
    j["error"] = "candidate failed the residual check; no grid emitted";
    out.exit_code = math_failure;
    return out;
  }
  out.files["exact.csv"] = exact_csv(s.u(), g);
  return out;
}

inline CommandResult cmd_verify(const Json& cfg, const Overrides& ov) {
  const KawaharaEq eq = parse_equation(cfg);
  const Json& c = section(cfg, "verify");
  if (!c.contains("candidate") || !c["candidate"].is_string()) throw ConfigError("missing 'verify.candidate'");
  const std::string text = c["candidate"].get<std::string>();
  Expr u;
  try {
    u = parse(text, parameter_map(c));
  } catch (const ParseError& e) {
    throw ConfigError("cannot parse candidate \"" + text + "\": " + e.what());
  }
  for (const auto& v : free_variables(u))
    if (v != "t" && v != "x") throw ConfigError("candidate depends on unknown variable '" + v + "'");
  SampleGrid g0;
  g0.t = eq.domain;
  const SampleGrid g = grid_from(c, g0, ov);
  const Residual r = pde_residual(eq, u, g);
  const ConservationResidual cons = conservation_check(eq, u, g);
  CommandResult out;
  Json& j = out.report;
  j["command"] = "verify";
  j["equation"] = equation_json(eq);
  j["candidate"] = to_string(u);
  j["grid"] = Json{{"t", Json::array({g.t.lo, g.t.hi, g.nt})}, {"x", Json::array({g.x.lo, g.x.hi, g.nx})}};
  j["pde"] = residual_json(r);
  j["momentum"] = residual_json(cons.momentum);
  j["energy"] = residual_json(cons.energy);
  return out;
}

inline CommandResult cmd_map_to_constant(const Json& cfg, const Overrides&) {
  const KawaharaEq eq = parse_equation(cfg);
  ConstantMap cm;
  try {
    cm = map_to_constant(eq);
  } catch (const ModelError& e) {
    throw MathFailure(e.what());
  }
  CommandResult out;
  Json& j = out.report;
  j["command"] = "map-to-constant";
  j["equation"] = equation_json(eq);
  j["constant_equation"] = equation_json(cm.eq);
  j["transform"] = transform_json(cm.transform);
  if (eq.is_n1()) j["delta"] = Json{{"delta1", cm.d1}, {"delta3", cm.d3}, {"delta4", cm.d4}};
  // Known solutions of the constant equation, pulled back to the input.
  std::vector<ExactSolution> probes;
  const double tb = eval(cm.eq.beta), ts = eval(cm.eq.sigma);
  const Domain& cd = cm.eq.domain;
  if (cm.eq.is_n1()) {
    probes.push_back(degenerate_solution(cm.eq, 0.3, 1.0 - cd.lo));
    if (tb * ts < 0.0) probes.push_back(kudryashov_family(1.0, tb, ts, 1, 0.1, 0.2, cd));
  } else if (cm.eq.n == 2.0 && ts < 0.0) {
    probes.push_back(tanh_solution_n2(cm.eq, tb, ts, 0.5, 0.1));
  }
  if (probes.empty()) {
    ExactSolution c;
    c.eq = cm.eq;
    c.family = "constant";
    c.solution.u = Expr(1.5);
    c.solution.t_domain = cd;
    probes.push_back(c);
  }
  const PointTransform back = cm.transform.inverse();
  j["checks"] = Json::array();
  bool all = true;
  for (const auto& p : probes) {
    const ClosedFormSolution pushed = push_solution(back, p.solution);
    SampleGrid g;
    g.t = eq.domain;
    const Residual r = pde_residual(eq, pushed.u, g);
    const bool pass = r.flagged == 0 && r.normalized() <= 1e-7;
    all = all && pass;
    j["checks"].push_back(Json{{"family", p.family}, {"u", to_string(pushed.u)}, {"residual", residual_json(r)}, {"pass", pass}});
  }
  if (!all) {
    j["error"] = "a pulled-back solution failed the residual check";
    out.exit_code = math_failure;
  }
  return out;
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"classify", "reduce", "solve", "exact", "verify", "map-to-constant"};
  return names;
}

inline void apply_environment() {
  if (const char* v = std::getenv("KAWAHARA_SEED_TOL")) {
    char* end = nullptr;
    const double eps = std::strtod(v, &end);
    if (end == v || *end != '\0' || !(eps > 0.0)) throw ConfigError("KAWAHARA_SEED_TOL must be a positive number");
    set_zero_tolerance(eps);
  }
}

// Runs one command. Errors are reported in the JSON with the matching exit code.
inline CommandResult run(const std::string& command, const Json& cfg, const Overrides& ov = {}) {
  CommandResult out;
  auto fail = [&](int code, const std::string& kind, const std::string& msg) {
    out = CommandResult{};
    out.exit_code = code;
    out.report["command"] = command;
    out.report["error"] = msg;
    out.report["error_kind"] = kind;
  };
  try {
    apply_environment();
    if (!cfg.is_object()) throw ConfigError("configuration must be a JSON object");
    if (ov.rtol && !(*ov.rtol > 0.0)) throw ConfigError("--rtol must be positive");
    if (command == "classify") {
      out = cmd_classify(cfg, ov);
    } else if (command == "reduce") {
      out = cmd_reduce(cfg, ov);
    } else if (command == "solve") {
      out = cmd_solve(cfg, ov);
    } else if (command == "exact") {
      out = cmd_exact(cfg, ov);
    } else if (command == "verify") {
      out = cmd_verify(cfg, ov);
    } else if (command == "map-to-constant") {
      out = cmd_map_to_constant(cfg, ov);
    } else {
      throw ConfigError("unknown command '" + command + "'");
    }
  } catch (const ConfigError& e) {
    fail(config_error, "config", e.what());
  } catch (const Json::exception& e) {
    fail(config_error, "config", e.what());
  } catch (const ParseError& e) {
    fail(config_error, "config", e.what());
  } catch (const MathFailure& e) {
    fail(math_failure, "math", e.what());
  } catch (const ClassifyError& e) {
    fail(math_failure, "math", e.what());
  } catch (const std::exception& e) {
    fail(math_failure, "math", e.what());
  }
  return out;
}

inline Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
}

inline void write_outputs(const CommandResult& r, const std::string& command, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const auto& [name, text] : r.files) std::ofstream(fs::path(dir) / name) << text;
  std::ofstream(fs::path(dir) / (command + ".json")) << to_text(r.report);
}

}  // namespace kawahara::cli
