#include <gtest/gtest.h>

#include <cmath>

#include "kawahara/parse.hpp"
#include "kawahara/reduce.hpp"

using namespace kawahara;

namespace {

KawaharaEq make_eq(double n, const std::string& b, const std::string& s) {
  KawaharaEq eq;
  eq.n = n;
  eq.beta = parse(b);
  eq.sigma = parse(s);
  eq.validate();
  return eq;
}

const Domain xd{"x", -2.0, 2.0, {}};

// degree-6 manufactured profile, positive for |omega| <= 4
const Expr manufactured = parse("2 + 0.3*omega + 0.1*omega^2 - 0.05*omega^3 + 0.02*omega^4 + 0.01*omega^5 + 0.003*omega^6");

struct RowCase {
  std::string tag;
  double n;
  std::string beta, sigma;
  std::map<std::string, double> prm;
  std::string label;
  Bindings params;
};

std::vector<RowCase> table_rows() {
  return {
      {"1", 2.0, "1.5*t", "0.5*t^(7/3)", {{"rho", 1.0}, {"lambda", 1.5}, {"delta", 0.5}}, "g1.1", {}},
      {"1", 3.0, "1.5*t^(-1)", "0.5*t^(-1)", {{"rho", -1.0}, {"lambda", 1.5}, {"delta", 0.5}}, "g1.2", {{"a", 0.7}}},
      {"2", 2.0, "2*exp(t)", "-1*exp(5/3*t)", {{"lambda", 2.0}, {"delta", -1.0}}, "g2", {}},
      {"3", 2.0, "0.7", "1.3", {{"lambda", 0.7}, {"delta", 1.3}}, "g3", {{"a", -0.4}}},
      {"0'", 1.0, "t", "exp(t)", {}, "g0'", {{"a", 0.5}}},
      {"1'", 1.0, "t^1.5", "2*t^(19/6)", {{"rho", 1.5}, {"lambda", 1.0}, {"delta", 2.0}}, "g1'.1", {}},
      {"1'", 1.0, "0.8*t^(-1)", "1.1*t^(-1)", {{"rho", -1.0}, {"lambda", 0.8}, {"delta", 1.1}}, "g1'.2", {{"a", 1.3}}},
      {"1'", 1.0, "0.8*t^2", "1.1*t^4", {{"rho", 2.0}, {"lambda", 0.8}, {"delta", 1.1}}, "g1'.3", {{"a", 1.3}}},
      {"1'", 1.0, "t^1.5", "2*t^(19/6)", {{"rho", 1.5}, {"lambda", 1.0}, {"delta", 2.0}}, "g0'", {{"s0", -1.0}}},
      {"2'", 1.0, "0.5*exp(t)", "3*exp(5/3*t)", {{"lambda", 0.5}, {"delta", 3.0}}, "g2'", {}},
      {"3'", 1.0, "-2", "1", {{"lambda", -2.0}, {"delta", 1.0}}, "g3'.1", {}},
      {"3'", 1.0, "-2", "1", {{"lambda", -2.0}, {"delta", 1.0}}, "g3'.2", {{"a", 0.6}}},
      {"4'", 1.0, "(t^2+1)^0.5*exp(3*arctan(t))", "0.25*(t^2+1)^1.5*exp(5*arctan(t))",
       {{"nu", 1.0}, {"lambda", 1.0}, {"delta", 0.25}}, "g4'", {}},
  };
}

}  // namespace

TEST(BuildReduction, ExponentialRow) {
  auto r = build_reduction("2", 2.0, {{"lambda", 1.0}, {"delta", 1.0}}, "g2");
  EXPECT_NEAR(r.ode.c1, -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.ode.c2, 1.0 / 6.0, 1e-15);
  EXPECT_EQ(r.ode.c0, 0.0);
  EXPECT_EQ(r.ode.c3, 0.0);
  EXPECT_EQ(r.ode.c4, 0.0);
  EXPECT_NEAR(eval(r.omega, {{"t", 3.0}, {"x", 2.0}}), 2.0 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(eval(r.scale, {{"t", 3.0}, {"x", 2.0}}), std::exp(0.5), 1e-15);
}

TEST(BuildReduction, ArctanRow) {
  auto r = build_reduction("4'", 1.0, {{"nu", 0.7}, {"lambda", 1.0}, {"delta", 1.0}}, "g4'");
  EXPECT_EQ(r.ode.c0, 0.0);
  EXPECT_EQ(r.ode.c1, -0.7);
  EXPECT_EQ(r.ode.c2, 0.7);
  EXPECT_EQ(r.ode.c3, 1.0);
  EXPECT_EQ(r.ode.c4, 0.0);
  EXPECT_EQ(r.ode.n, 1.0);
}

TEST(BuildReduction, FirstOrderRowHasClosedForm) {
  auto r = build_reduction("0'", 1.0, {}, "g0'", {{"a", 2.0}});
  ASSERT_TRUE(r.first_order);
  ASSERT_TRUE(r.closed_form);
  const Expr u = *r.closed_form;
  EXPECT_NEAR(eval(u, {{"t", 1.0}, {"x", 4.0}, {"C", 5.0}}), 3.0, 1e-15);
  // phi = C/(omega + a) solves the reduced equation
  EXPECT_TRUE(is_zero(r.ode_lhs(parse("5/(omega + 2)")), Domain{"omega", 1.0, 2.0, {}}));
}

TEST(BuildReduction, Errors) {
  const std::map<std::string, double> prm{{"lambda", 1.0}, {"delta", 1.0}};
  EXPECT_THROW(build_reduction("3", 2.0, prm, "g0", {}), ReduceError);
  EXPECT_THROW(build_reduction("3", 2.0, prm, "g2", {}), ReduceError);
  EXPECT_THROW(build_reduction("3'", 1.0, prm, "g3'.2", {{"a", 0.0}}), ReduceError);
  EXPECT_THROW(build_reduction("3", 2.0, prm, "g3", {}), ReduceError);
  EXPECT_THROW(build_reduction("1'", 1.0, {{"rho", 1.5}, {"lambda", 1.0}, {"delta", 1.0}}, "g0'", {{"s0", 0.5}}),
               ReduceError);
}

TEST(BuildReduction, FromClassification) {
  auto res = classify(ice_preset());
  auto r = build_reduction(res, "g1'.1");
  EXPECT_NEAR(r.ode.c1, -0.5, 1e-12);
  EXPECT_NEAR(r.ode.c2, -0.5, 1e-12);
  EXPECT_NEAR(r.ode.lambda, 2.20215e-5, 1e-15);
  EXPECT_NEAR(r.ode.delta, 1.05566e-8, 1e-18);
}

// Substituting the ansatz into the equation reproduces the reduced ODE.
TEST(AnsatzCorrectness, EveryRow) {
  for (const RowCase& row : table_rows()) {
    SCOPED_TRACE(row.tag + " " + row.label);
    const KawaharaEq eq = make_eq(row.n, row.beta, row.sigma);
    const Reduction red = build_reduction(row.tag, row.n, row.prm, row.label, row.params);
    const Expr phi = red.first_order ? parse("1.7/(omega + 0.5)") : manufactured;
    Expr res = ansatz_residual(eq, red, phi);
    auto chk = grid_residual({res}, eq.domain, xd, 16);
    EXPECT_EQ(chk.flagged, 0);
    EXPECT_TRUE(chk.ok(1e-9)) << chk.residual << " scale " << chk.scale;
  }
}

// The property is sharp: a wrong ODE coefficient is detected.
TEST(AnsatzCorrectness, DetectsWrongCoefficient) {
  const KawaharaEq eq = make_eq(2.0, "1.5*t", "0.5*t^(7/3)");
  Reduction red = build_reduction("1", 2.0, {{"rho", 1.0}, {"lambda", 1.5}, {"delta", 0.5}}, "g1.1");
  red.ode.c2 += 1e-3;
  auto chk = grid_residual({ansatz_residual(eq, red, manufactured)}, eq.domain, xd, 16);
  EXPECT_FALSE(chk.ok(1e-9));
}

TEST(Bvp, IceExample) {
  InvariantBVP bvp;
  bvp.n = 1.0;
  bvp.rho = 0.5;
  bvp.lambda = 2.20215e-5;
  bvp.delta = 1.05566e-8;
  bvp.gamma = {1.0 / 120, 0, 0, 0, 0};
  auto ivp = bvp_to_ivp(bvp);
  EXPECT_EQ(ivp.reduction.ode.c1, -0.5);
  EXPECT_EQ(ivp.reduction.ode.c2, -0.5);
  EXPECT_EQ(ivp.y0, (State{1.0 / 120, 0, 0, 0, 0}));
}

TEST(Bvp, GenericCoefficientsAndErrors) {
  InvariantBVP bvp;
  bvp.n = 2.0;
  bvp.rho = 1.0;
  bvp.gamma = {1, 0, 0, 0, 0};
  auto ivp = bvp_to_ivp(bvp);
  EXPECT_NEAR(ivp.reduction.ode.c1, -2.0 / 3.0, 1e-15);
  EXPECT_NEAR(ivp.reduction.ode.c2, -1.0 / 6.0, 1e-15);
  bvp.gamma[0] = 0.0;
  EXPECT_THROW(bvp_to_ivp(bvp), ReduceError);
}

TEST(Reconstruct, ConstantProfileTravellingWave) {
  auto red = build_reduction("3", 2.0, {{"lambda", 1.0}, {"delta", 1.0}}, "g3", {{"a", 0.8}});
  const double c = 1.25;
  auto sol = integrate(red.rhs(), {c, 0, 0, 0, 0}, -10.0, 10.0);
  ASSERT_TRUE(sol.success());
  auto g = reconstruct(red, sol, {1.0, 1.5, 2.0}, {-2.0, 0.0, 3.0});
  for (double u : g.u) EXPECT_NEAR(u, c, 1e-10);
  EXPECT_EQ(g.flagged(), 0u);
  EXPECT_LT(ode_residual(red, sol).residual, 1e-10);
}

TEST(Reconstruct, UnitTimeAndFlagging) {
  auto red = power_reduction(2.0, 1.0, 1.0, 1.0);
  auto sol = integrate(red.rhs(), {0.5, 0.1, 0, 0, 0}, 0.0, 1.0);
  ASSERT_TRUE(sol.success());
  auto g = reconstruct(red, sol, {1.0}, {0.0, 0.25, 0.9, 1.5});
  for (int i = 0; i < 3; ++i) EXPECT_EQ(g.u[i], sol(g.x[i])[0]);
  EXPECT_FALSE(g.valid[3]);
  EXPECT_EQ(g.flagged(), 1u);
  EXPECT_NE(g.to_csv().find("nan"), std::string::npos);
}

TEST(Reconstruct, BoundaryConditionsAndDirectEvaluation) {
  InvariantBVP bvp;
  bvp.n = 2.0;
  bvp.rho = 1.0;
  bvp.lambda = 1.0;
  bvp.delta = 0.5;
  bvp.gamma = {0.3, -0.2, 0.1, 0.05, -0.02};
  auto ivp = bvp_to_ivp(bvp);
  auto sol = integrate(ivp.reduction.rhs(), ivp.y0, 0.0, 1.0);
  ASSERT_TRUE(sol.success());
  for (double t : {1.0, 1.7, 3.0}) {
    auto d = x_derivatives(ivp.reduction, sol, t, 0.0);
    for (int i = 0; i < 5; ++i) {
      const double want = bvp.boundary_value(i, t);
      EXPECT_NEAR(d[i], want, 1e-9 * std::abs(want)) << i;
    }
  }
  const std::vector<double> ts{1.0, 1.5, 2.0}, xs{0.0, 0.3, 0.6};
  auto g = reconstruct(ivp.reduction, sol, ts, xs);
  for (std::size_t k = 0; k < g.u.size(); ++k) {
    const double w = g.x[k] * std::pow(g.t[k], -2.0 / 3.0);
    const double direct = std::pow(g.t[k], -1.0 / 6.0) * sol(w)[0];
    EXPECT_NEAR(g.u[k], direct, 1e-10 * std::abs(direct));
  }
}

TEST(OdeResidual, DecreasesWithTolerance) {
  auto red = power_reduction(2.0, 1.0, 1.0, 0.5);
  const State y0{0.3, -0.2, 0.1, 0.05, -0.02};
  OdeOptions loose, tight;
  loose.rtol = 1e-6;
  loose.atol = 1e-8;
  tight.rtol = 1e-9;
  tight.atol = 1e-11;
  auto a = integrate(red.rhs(), y0, 0.0, 3.0, loose);
  auto b = integrate(red.rhs(), y0, 0.0, 3.0, tight);
  ASSERT_TRUE(a.success());
  ASSERT_TRUE(b.success());
  const auto ra = ode_residual(red, a), rb = ode_residual(red, b);
  EXPECT_GT(ra.residual, 10.0 * rb.residual);
  EXPECT_LT(rb.relative(), 1e-5);
}
