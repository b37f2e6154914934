#include <gtest/gtest.h>

#include <random>

#include "kawahara/model.hpp"
#include "kawahara/parse.hpp"

using namespace kawahara;

namespace {

const Domain xd{"x", -2.0, 2.0, {}};

KawaharaEq make_eq(double n, const char* a, const char* b, const char* s, double lo = 1.0, double hi = 2.0) {
  KawaharaEq eq;
  eq.n = n;
  eq.alpha = parse(a);
  eq.beta = parse(b);
  eq.sigma = parse(s);
  eq.domain = Domain{"t", lo, hi, {}};
  eq.validate();
  return eq;
}

// u_t + alpha u^n u_x + beta u_xxx + sigma u_xxxxx, written out directly.
Expr residual(const KawaharaEq& eq, const Expr& u) {
  const Expr un = eq.n == 1.0 ? u : pow(u, eq.n);
  return diff(u, "t") + eq.alpha * un * diff(u, "x") + eq.beta * diff(u, "x", 3) + eq.sigma * diff(u, "x", 5);
}

void expect_same(const Expr& a, const Expr& b, const Domain& d, double eps = 1e-9) {
  EXPECT_TRUE(is_zero(a - b, d, {}, eps)) << to_string(a) << " vs " << to_string(b);
}

void expect_same_eq(const KawaharaEq& a, const KawaharaEq& b, double eps = 1e-9) {
  EXPECT_EQ(a.n, b.n);
  EXPECT_NEAR(a.domain.lo, b.domain.lo, 1e-9);
  EXPECT_NEAR(a.domain.hi, b.domain.hi, 1e-9);
  expect_same(a.alpha, b.alpha, a.domain, eps);
  expect_same(a.beta, b.beta, a.domain, eps);
  expect_same(a.sigma, b.sigma, a.domain, eps);
}

// Target residual composed with the transform equals (U1/T_t) times the
// source residual, for an arbitrary test function u.
void expect_residual_intertwines(const KawaharaEq& src, const KawaharaEq& dst, const PointTransform& tr) {
  const Expr u = parse("sin(x + t^2)*t + 0.3*x^2");
  const Expr image = tr.U1 * u + tr.U0;
  const Expr ut = substitute(substitute(image, "x", (x_var() - tr.X0) / tr.X1), "t", tr.T_inverse);
  const Expr r_dst = residual(dst, ut);
  const Expr pulled = substitute(r_dst, Substitution{{"t", tr.T}, {"x", tr.X1 * x_var() + tr.X0}});
  const Expr expected = tr.U1 / diff(tr.T, "t") * residual(src, u);
  EXPECT_TRUE(is_zero_grid(pulled - expected, src.domain, xd, {}, 1e-8));
}

}  // namespace

TEST(Equation, Validation) {
  EXPECT_NO_THROW(make_eq(2, "1", "t", "t^3"));
  EXPECT_THROW(make_eq(2, "t - 1.5", "t", "t^3"), ModelError);
  EXPECT_THROW(make_eq(0, "1", "t", "t^3"), ModelError);
  EXPECT_THROW(make_eq(2, "1", "x", "t^3"), ModelError);
}

TEST(Gauge, AlreadyGauged) {
  auto eq = make_eq(2, "1", "t", "t^3");
  auto g = gauge_alpha1(eq);
  expect_same_eq(g.eq, eq);
  EXPECT_TRUE(structurally_equal(g.transform.T, t_var()));
}

TEST(Gauge, ProportionalCoefficients) {
  auto eq = make_eq(1, "exp(t)", "exp(t)", "exp(t)");
  auto g = gauge_alpha1(eq);
  EXPECT_TRUE(g.eq.alpha.is_const(1.0));
  EXPECT_TRUE(g.eq.beta.is_const());
  EXPECT_NEAR(g.eq.beta.value(), 1.0, 1e-12);
  EXPECT_NEAR(g.eq.sigma.value(), 1.0, 1e-12);
  expect_same(g.transform.T, parse("exp(t)"), eq.domain);
}

TEST(Gauge, ConstantAlpha) {
  auto eq = make_eq(1, "2", "2*t", "2*t^3");
  auto g = gauge_alpha1(eq);
  EXPECT_TRUE(g.eq.alpha.is_const(1.0));
  EXPECT_NEAR(g.eq.domain.lo, 2.0, 1e-12);
  EXPECT_NEAR(g.eq.domain.hi, 4.0, 1e-12);
  // beta/alpha = t and sigma/alpha = t^3 with t = T/2
  for (double th : {2.1, 2.9, 3.7}) {
    EXPECT_NEAR(eval(g.eq.beta, {{"t", th}}), th / 2, 1e-12);
    EXPECT_NEAR(eval(g.eq.sigma, {{"t", th}}), th * th * th / 8, 1e-12);
  }
}

TEST(Gauge, QuadratureAndNumericalInverse) {
  auto eq = make_eq(2, "exp(t^2)", "t*exp(t^2)", "exp(t^2)");
  auto g = gauge_alpha1(eq);
  EXPECT_EQ(g.transform.inverse_kind, "numeric");
  EXPECT_TRUE(g.eq.alpha.is_const(1.0));
  expect_residual_intertwines(eq, g.eq, g.transform);
}

TEST(Gauge, RejectsSignChange) { EXPECT_THROW(gauge_alpha1(KawaharaEq{2, parse("t - 1.5"), Expr(1.0), Expr(1.0)}), ModelError); }

TEST(Equivalence, UsualIdentity) {
  auto eq = make_eq(3, "t", "t^2 + 1", "exp(t)");
  auto m = apply_equiv(eq, UsualEquivParams{1.0, 0.0, 1.0, t_var()});
  expect_same_eq(m.eq, eq);
}

TEST(Equivalence, GaugedGroupScaling) {
  auto eq = make_eq(2, "1", "1.7", "0.3");
  auto m = apply_equiv(eq, GaugedEquivParams{0.0, 2.0, 0.0, 1.0});
  EXPECT_NEAR(eval(m.eq.beta), 4 * 1.7, 1e-12);
  EXPECT_NEAR(eval(m.eq.sigma), 16 * 0.3, 1e-12);
  EXPECT_NEAR(eval(m.eq.alpha), 1.0, 1e-12);
  expect_same(m.transform.T, parse("2*t"), eq.domain);
}

TEST(Equivalence, GaugedGroupFormulas) {
  // beta~ = d1^2 d3^n beta, sigma~ = d1^4 d3^n sigma, t~ = d1 d3^-n t + d0
  auto eq = make_eq(2, "1", "t", "t^2 + 1");
  GaugedEquivParams p{0.5, 1.5, -0.25, 0.8};
  auto m = apply_equiv(eq, p);
  const double k = 1.5 / (0.8 * 0.8);
  for (double tv : {1.1, 1.5, 1.9}) {
    const double tt = k * tv + 0.5;
    EXPECT_NEAR(eval(m.eq.beta, {{"t", tt}}), 1.5 * 1.5 * 0.64 * tv, 1e-12);
    EXPECT_NEAR(eval(m.eq.sigma, {{"t", tt}}), std::pow(1.5, 4) * 0.64 * (tv * tv + 1), 1e-11);
  }
  auto back = apply_equiv(m.eq, inverse_params(p, 2.0));
  expect_same_eq(back.eq, eq);
}

TEST(Equivalence, ProjectiveIdentity) {
  auto eq = make_eq(1, "1", "t", "t^3 + 1");
  auto m = apply_equiv(eq, ProjectiveEquivParams{});
  expect_same_eq(m.eq, eq);
}

TEST(Equivalence, ProjectiveFormulasAndIntertwining) {
  auto eq = make_eq(1, "1", "t^2", "1 + t");
  ProjectiveEquivParams p{2.0, 1.0, 0.3, 1.5, 0.2, -0.7, 1.3};
  auto m = apply_equiv(eq, p);
  const double D = p.delta();
  for (double tv : {1.2, 1.7}) {
    const double den = p.c * tv + p.d, tt = (p.a * tv + p.b) / den;
    EXPECT_NEAR(eval(m.eq.beta, {{"t", tt}}), std::pow(p.e2, 3) / den * tv * tv / D, 1e-11);
    EXPECT_NEAR(eval(m.eq.sigma, {{"t", tt}}), std::pow(p.e2, 5) / std::pow(den, 3) * (1 + tv) / D, 1e-11);
  }
  EXPECT_TRUE(m.eq.alpha.is_const());
  EXPECT_NEAR(m.eq.alpha.value(), 1.0, 1e-12);
  expect_residual_intertwines(eq, m.eq, m.transform);
}

TEST(Equivalence, ProjectiveRoundTripAndGroupLaw) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-0.4, 0.4), pos(1.0, 2.0);
  auto eq = make_eq(1, "1", "t + 0.5", "t^2");
  for (int trial = 0; trial < 5; ++trial) {
    ProjectiveEquivParams p{pos(rng), u(rng), u(rng) * 0.5, pos(rng), u(rng), u(rng), pos(rng)};
    ProjectiveEquivParams q{pos(rng), u(rng), u(rng) * 0.5, pos(rng), u(rng), u(rng), pos(rng)};
    auto m = apply_equiv(eq, p);
    auto back = apply_equiv(m.eq, inverse_params(p));
    expect_same_eq(back.eq, eq, 1e-8);
    auto two = apply_equiv(m.eq, q);
    auto once = apply_equiv(eq, compose_params(p, q));
    expect_same_eq(two.eq, once.eq, 1e-8);
  }
}

TEST(Equivalence, UsualRoundTripViaInverseTransform) {
  auto eq = make_eq(2, "t", "t^2 + 1", "exp(-t)");
  auto m = apply_equiv(eq, UsualEquivParams{1.5, 0.3, -2.0, parse("t^3 + t")});
  auto back = transform(m.eq, m.transform.inverse());
  expect_same_eq(back, eq, 1e-8);
  expect_residual_intertwines(eq, m.eq, m.transform);
}

TEST(Equivalence, ExtendedGroup) {
  auto eq = make_eq(1, "t", "t^2", "1 + t^2");
  ExtendedEquivParams p{0.2, 0.4, 1.5, 0.7, 0.9, parse("2*t + 1")};
  auto m = apply_equiv(eq, p);
  // alpha~ = X1^2 alpha/(d2 T_t) with X1 = 1/(d3 t^2/2 + d4)
  for (double tv : {1.1, 1.6}) {
    const double X1 = 1.0 / (0.7 * tv * tv / 2 + 0.9), tt = 2 * tv + 1;
    EXPECT_NEAR(eval(m.eq.alpha, {{"t", tt}}), X1 * X1 * tv / (1.5 * 2), 1e-12);
    EXPECT_NEAR(eval(m.eq.beta, {{"t", tt}}), std::pow(X1, 3) * tv * tv / 2, 1e-12);
    EXPECT_NEAR(eval(m.eq.sigma, {{"t", tt}}), std::pow(X1, 5) * (1 + tv * tv) / 2, 1e-12);
  }
  expect_residual_intertwines(eq, m.eq, m.transform);
  auto back = transform(m.eq, m.transform.inverse());
  expect_same_eq(back, eq, 1e-8);
  EXPECT_THROW(apply_equiv(make_eq(2, "1", "1", "1"), p), ModelError);
  EXPECT_THROW(apply_equiv(eq, ExtendedEquivParams{0, 0, 0, 1, 1, t_var()}), ModelError);
}

TEST(Equivalence, RejectsTransformsLeavingTheClass) {
  auto eq = make_eq(2, "1", "1", "1");
  PointTransform tr = make_transform(t_var(), t_var(), Expr(0.0), Expr(1.0), Expr(0.0), eq.domain);
  EXPECT_THROW(transform(eq, tr), ModelError);
}

TEST(Reducibility, Examples) {
  auto a = reducibility(make_eq(2, "exp(t)", "exp(t)", "exp(t)"));
  ASSERT_TRUE(a.reducible);
  EXPECT_NEAR(a.witness[0], 1.0, 1e-12);
  EXPECT_NEAR(a.witness[1], 1.0, 1e-12);
  EXPECT_TRUE(reducibility(make_eq(1, "1", "3*t + 2", "(3*t + 2)^3")).reducible);
  auto c = reducibility(make_eq(2, "1", "t", "1"));
  EXPECT_FALSE(c.reducible);
  EXPECT_EQ(c.failed, "(beta/alpha)_t = 0");
  EXPECT_FALSE(reducibility(make_eq(1, "1", "t", "t^2")).reducible);
  EXPECT_FALSE(reducibility(make_eq(1, "1", "t^2", "t^6")).reducible);
  // scale-independent: tiny but varying coefficients are not constant
  EXPECT_FALSE(reducibility(make_eq(2, "1", "1e-10*t", "1e-10")).reducible);
}

TEST(MapToConstant, AlreadyConstant) {
  auto eq = make_eq(2, "1", "1", "1");
  auto m = map_to_constant(eq);
  EXPECT_TRUE(m.eq.alpha.is_const(1.0));
  EXPECT_NEAR(m.eq.beta.value(), 1.0, 1e-12);
  EXPECT_NEAR(m.eq.sigma.value(), 1.0, 1e-12);
  expect_same(m.transform.T, t_var(), eq.domain);
}

TEST(MapToConstant, ProjectiveCase) {
  auto eq = make_eq(1, "1", "2*t", "5*t^3");
  auto m = map_to_constant(eq);
  EXPECT_NEAR(m.eq.beta.value(), 2.0, 1e-12);
  EXPECT_NEAR(m.eq.sigma.value(), 5.0, 1e-10);
  expect_same(m.transform.T, parse("-1/t"), eq.domain);
  EXPECT_TRUE(is_zero_grid(m.transform.X1 * x_var() + m.transform.X0 - parse("x/t"), eq.domain, xd));
  EXPECT_TRUE(is_zero_grid(m.transform.U1 * u_var() + m.transform.U0 - parse("t*u - x"), eq.domain,
                           Domain{"x", -1, 1, {}}, {{"u", 0.7}}));
  expect_residual_intertwines(eq, m.eq, m.transform);
}

TEST(MapToConstant, PowerGauge) {
  auto eq = make_eq(3, "t", "2*t", "7*t");
  auto m = map_to_constant(eq);
  EXPECT_NEAR(m.eq.beta.value(), 2.0, 1e-12);
  EXPECT_NEAR(m.eq.sigma.value(), 7.0, 1e-12);
  expect_same(m.transform.T, parse("t^2/2"), eq.domain);
  expect_residual_intertwines(eq, m.eq, m.transform);
}

TEST(MapToConstant, GeneralAlpha) {
  // beta = alpha (c1 A + c0), sigma = alpha (c1 A + c0)^3 s with A = integral of alpha
  auto eq = make_eq(1, "exp(t)", "exp(t)*(0.5*exp(t) + 2)", "3*exp(t)*(0.5*exp(t) + 2)^3");
  auto m = map_to_constant(eq);
  EXPECT_TRUE(m.eq.alpha.is_const(1.0));
  expect_residual_intertwines(eq, m.eq, m.transform);
  auto flat = make_eq(1, "t", "3*t", "2*t");
  auto f = map_to_constant(flat);
  EXPECT_NEAR(f.eq.beta.value(), 3.0, 1e-12);
  EXPECT_NEAR(f.eq.sigma.value(), 2.0, 1e-10);
  expect_residual_intertwines(flat, f.eq, f.transform);
  EXPECT_THROW(map_to_constant(make_eq(2, "1", "t", "1")), ModelError);
}

TEST(PushSolution, IdentityAndScaling) {
  auto eq = make_eq(2, "1", "1", "1");
  ClosedFormSolution s{parse("tanh(x - t)"), eq.domain, xd, "s"};
  auto same = push_solution(PointTransform::identity(eq.domain), s);
  EXPECT_TRUE(is_zero_grid(same.u - s.u, eq.domain, xd));
  auto m = apply_equiv(eq, UsualEquivParams{1.0, 0.0, 2.0, t_var()});
  auto c = push_solution(m.transform, ClosedFormSolution{Expr(1.5), eq.domain, xd, "c"});
  EXPECT_TRUE(is_zero_grid(c.u - 3.0, eq.domain, xd));
}

TEST(PushSolution, DegenerateSolutionThroughGauge) {
  auto eq = make_eq(1, "exp(t)", "1", "1");
  auto g = gauge_alpha1(eq);
  const Expr sol = parse("(x + c)/(t + a)", std::vector<std::string>{"a", "c"});
  ClosedFormSolution s{substitute(sol, {{"a", 0.5}, {"c", -1.0}}), g.eq.domain, xd, "degenerate"};
  auto back = push_solution(g.transform.inverse(), s);
  const Expr expected = parse("(x - 1)/(exp(t) + 0.5)");
  EXPECT_TRUE(is_zero_grid(back.u - expected, eq.domain, xd));
  EXPECT_TRUE(is_zero_grid(residual(eq, back.u), eq.domain, xd));
}

TEST(Ice, Preset) {
  auto eq = ice_preset();
  EXPECT_EQ(eq.n, 1.0);
  EXPECT_DOUBLE_EQ(eval(eq.beta, {{"t", 1.0}}), 2.20215e-5);
  EXPECT_DOUBLE_EQ(eval(eq.sigma, {{"t", 1.0}}), 1.05566e-8);
  EXPECT_EQ(eq.domain.lo, 1.0);
  EXPECT_EQ(eq.domain.hi, 240.0);
  EXPECT_NO_THROW(eq.validate());
}

TEST(Ice, Coefficients) {
  IcePhysical p;
  p.a = 0.1;
  p.H = 10.0;
  auto c = ice_coefficients(p);
  EXPECT_DOUBLE_EQ(c.epsilon, 0.01);
  IcePhysical q = p;
  q.h0 *= 2;
  auto c2 = ice_coefficients(q);
  EXPECT_NEAR(eval(c2.gamma, {{"t", 3.0}}) / eval(c.gamma, {{"t", 3.0}}), 8.0, 1e-12);
  IcePhysical r = p;
  r.sigma_xx = r.sigma0;
  EXPECT_EQ(eval(ice_coefficients(r).varkappa, {{"t", 2.0}}), 0.0);
  p.E = -1;
  EXPECT_THROW(ice_coefficients(p), ModelError);
}
