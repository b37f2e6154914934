#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kawahara/classify.hpp"
#include "kawahara/parse.hpp"

using namespace kawahara;

namespace {

KawaharaEq make_eq(double n, const std::string& a, const std::string& b, const std::string& s, double lo = 1.0,
                   double hi = 2.0) {
  KawaharaEq eq;
  eq.n = n;
  eq.alpha = parse(a);
  eq.beta = parse(b);
  eq.sigma = parse(s);
  eq.domain = Domain{"t", lo, hi, {}};
  eq.validate();
  return eq;
}

double cosine(const Quadruple& a, const Quadruple& b) {
  const double dot = a.p * b.p + a.q * b.q + a.r * b.r + a.s * b.s;
  const double na = std::sqrt(a.p * a.p + a.q * a.q + a.r * a.r + a.s * a.s);
  const double nb = std::sqrt(b.p * b.p + b.q * b.q + b.r * b.r + b.s * b.s);
  return std::abs(dot) / (na * nb);
}

struct Row {
  std::string tag;
  double n;
  std::string beta, sigma;
  std::map<std::string, double> params;
};

// Canonical representatives of every case.
std::vector<Row> canonical_rows() {
  return {
      {"0", 2.0, "t", "exp(t)", {}},
      {"1", 2.0, "1.5*t^1", "0.5*t^(7/3)", {{"rho", 1.0}, {"lambda", 1.5}, {"delta", 0.5}}},
      {"2", 3.0, "2*exp(t)", "-1*exp(5/3*t)", {{"lambda", 2.0}, {"delta", -1.0}}},
      {"3", 2.0, "0.7", "1.3", {{"lambda", 0.7}, {"delta", 1.3}}},
      {"0'", 1.0, "t", "exp(t)", {}},
      {"1'", 1.0, "t^1.5", "2*t^(19/6)", {{"rho", 1.5}, {"lambda", 1.0}, {"delta", 2.0}}},
      {"2'", 1.0, "0.5*exp(t)", "3*exp(5/3*t)", {{"lambda", 0.5}, {"delta", 3.0}}},
      {"3'", 1.0, "-2", "1", {{"lambda", -2.0}, {"delta", 1.0}}},
      {"4'", 1.0, "(t^2+1)^0.5*exp(3*arctan(t))", "0.25*(t^2+1)^1.5*exp(5*arctan(t))",
       {{"nu", 1.0}, {"lambda", 1.0}, {"delta", 0.25}}},
  };
}

void expect_params(const ClassificationResult& r, const std::map<std::string, double>& want, double rel) {
  for (const auto& [k, v] : want) {
    ASSERT_TRUE(r.parameters.count(k)) << k;
    EXPECT_NEAR(r.parameters.at(k), v, rel * std::max(1.0, std::abs(v))) << k;
  }
}

}  // namespace

TEST(ClassifyingSystem, PowerCaseForGeneralN) {
  auto qd = solve_classifying_system(make_eq(2, "1", "t^2", "t^4"));
  ASSERT_TRUE(qd);
  EXPECT_NEAR(qd->p, 1.0, 1e-10);
  EXPECT_NEAR(qd->q, 0.0, 1e-10);
  EXPECT_NEAR(qd->r, 2.0, 1e-9);
}

TEST(ClassifyingSystem, QuadraticCaseForNOne) {
  auto qd = solve_classifying_system(make_eq(1, "1", "(t^2+1)^(1/2)", "(t^2+1)^(3/2)"));
  ASSERT_TRUE(qd);
  EXPECT_TRUE(qd->n1);
  EXPECT_GE(cosine(*qd, Quadruple{1, 0, 1, 0, true}), 1.0 - 1e-8);
}

TEST(ClassifyingSystem, KernelOnly) {
  EXPECT_FALSE(solve_classifying_system(make_eq(2, "1", "t", "exp(t)")));
  EXPECT_FALSE(solve_classifying_system(make_eq(1, "1", "t", "exp(t)")));
}

TEST(ClassifyingSystem, RequiresGauge) {
  EXPECT_THROW(solve_classifying_system(make_eq(2, "t", "t", "t")), ClassifyError);
}

// Oracle: beta = (t+1)^A (t+3)^(1-A) solves (t+1)(t+3) beta_t = (t + 3A + (1-A)) beta.
TEST(ClassifyingSystem, TwoRootOracle) {
  for (double A : {0.3, 0.8, -0.4, 1.7}) {
    const double B = 1.0 - A;
    const std::string b = "(t+1)^" + std::to_string(A) + "*(t+3)^" + std::to_string(B);
    const std::string s = "(t+1)^(" + std::to_string((5 * A + 2) / 3) + ")*(t+3)^(" + std::to_string((5 * B + 2) / 3) + ")";
    auto qd = solve_classifying_system(make_eq(1, "1", b, s));
    ASSERT_TRUE(qd) << A;
    const Quadruple want{1.0, 4.0, 3.0, 3.0 * A + B, true};
    EXPECT_GE(cosine(*qd, want), 1.0 - 1e-10) << A;
  }
}

TEST(ClassifyingSystem, CosineSimilarityOnRandomPowers) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> rho_d(-2.0, 3.0), lam(0.2, 5.0), shift(-0.5, 3.0);
  for (int i = 0; i < 20; ++i) {
    const double rho = rho_d(rng), l = lam(rng), sh = shift(rng), d = lam(rng);
    char b[128], s[128];
    std::snprintf(b, sizeof b, "%.17g*(t+%.17g)^%.17g", l, sh, rho);
    std::snprintf(s, sizeof s, "%.17g*(t+%.17g)^%.17g", d, sh, (5 * rho + 2) / 3);
    for (double n : {1.0, 2.0}) {
      auto qd = solve_classifying_system(make_eq(n, "1", b, s));
      ASSERT_TRUE(qd);
      const Quadruple want = n == 1.0 ? Quadruple{0, 1, sh, rho, true} : Quadruple{1, sh, rho, 0, false};
      EXPECT_GE(cosine(*qd, want), 1.0 - 1e-8) << b;
    }
  }
}

TEST(Canonicalize, Examples) {
  const Domain d{"t", 1.0, 2.0, {}};
  auto c = canonicalize(Quadruple{0, 1, 0, 2, true}, 1.0, d);
  EXPECT_EQ(c.tag, "1'");
  EXPECT_DOUBLE_EQ(c.parameters["rho"], 2.0);
  EXPECT_EQ(canonicalize(Quadruple{0, 0, 1, 1, true}, 1.0, d).tag, "2'");
  EXPECT_EQ(canonicalize(Quadruple{0, 0, 1, 0, true}, 1.0, d).tag, "3'");
  c = canonicalize(Quadruple{1, 0, 1, 3, true}, 1.0, d);
  EXPECT_EQ(c.tag, "4'");
  EXPECT_DOUBLE_EQ(c.parameters["nu"], 1.0);
  c = canonicalize(Quadruple{1, 0, 1, -3, true}, 1.0, d);
  EXPECT_DOUBLE_EQ(c.parameters["nu"], 1.0);
  EXPECT_EQ(canonicalize(Quadruple{1, 0, -0.5, 0, false}, 2.0, d).tag, "1");
  EXPECT_EQ(canonicalize(Quadruple{0, 1, 1, 0, false}, 2.0, d).tag, "2");
  EXPECT_EQ(canonicalize(Quadruple{0, 1, 0, 0, false}, 2.0, d).tag, "3");
}

TEST(Canonicalize, ExponentBelowHalfIsReflected) {
  const Domain d{"t", 1.0, 2.0, {}};
  auto c = canonicalize(Quadruple{0, 1, 0, -1, true}, 1.0, d);
  EXPECT_EQ(c.tag, "1'");
  EXPECT_DOUBLE_EQ(c.parameters["rho"], 2.0);
  EXPECT_DOUBLE_EQ(c.parameters["rho_raw"], -1.0);
}

TEST(Classify, Examples) {
  auto r = classify(make_eq(2, "1", "t", "t^(7/3)"));
  EXPECT_EQ(r.case_tag, "1");
  EXPECT_NEAR(r.parameters["rho"], 1.0, 1e-9);
  EXPECT_EQ(r.basis.size(), 2u);

  r = classify(ice_preset());
  EXPECT_EQ(r.case_tag, "1'");
  EXPECT_NEAR(r.parameters["rho"], 0.5, 1e-9);
  EXPECT_NEAR(r.parameters["lambda"], 2.20215e-5, 1e-13);
  EXPECT_NEAR(r.parameters["delta"], 1.05566e-8, 1e-16);
  EXPECT_EQ(r.basis.size(), 3u);

  r = classify(make_eq(2, "1", "t", "exp(t)"));
  EXPECT_EQ(r.case_tag, "0");
  EXPECT_EQ(r.basis.size(), 1u);
}

TEST(Classify, RhoTwoCarriesNote) {
  auto r = classify(make_eq(1, "1", "t^(-1)", "t^(-1)"));
  EXPECT_EQ(r.case_tag, "1'");
  EXPECT_NEAR(r.parameters["rho"], 2.0, 1e-9);
  EXPECT_NEAR(r.parameters["rho_raw"], -1.0, 1e-9);
  EXPECT_EQ(r.notes.size(), 1u);
}

TEST(Classify, CanonicalRowsRoundTrip) {
  for (const Row& row : canonical_rows()) {
    SCOPED_TRACE(row.tag);
    auto r = classify(make_eq(row.n, "1", row.beta, row.sigma));
    EXPECT_EQ(r.case_tag, row.tag);
    expect_params(r, row.params, 1e-8);
    for (const auto& c : r.checks) EXPECT_TRUE(c.ok());
  }
}

TEST(Classify, NonConstantAlphaIsGauged) {
  auto r = classify(make_eq(2, "2*t", "2*t^3", "2*t^(17/3)"));
  EXPECT_EQ(r.case_tag, "1");
  EXPECT_NEAR(r.parameters["rho"], 1.0, 1e-8);
  auto r1 = classify(make_eq(1, "exp(t)", "exp(t)*(exp(t)+1)^0.5", "exp(t)*(exp(t)+1)^1.5"));
  EXPECT_EQ(r1.case_tag, "1'");
  EXPECT_NEAR(r1.parameters["rho"], 0.5, 1e-8);
}

// Equivalent equations share the case and its invariant parameters.
TEST(Classify, InvariantUnderProjectiveGroup) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (const Row& row : canonical_rows()) {
    if (row.n != 1.0) continue;
    SCOPED_TRACE(row.tag);
    const KawaharaEq eq = make_eq(row.n, "1", row.beta, row.sigma);
    int done = 0;
    while (done < 3) {
      ProjectiveEquivParams p{1.0 + 0.3 * coef(rng), coef(rng), 0.2 * coef(rng), 1.0 + 0.3 * coef(rng),
                              coef(rng), coef(rng), 1.0 + 0.5 * coef(rng)};
      const double pole = -p.d / p.c;
      if (std::abs(p.delta()) < 0.2 || (pole > 0.5 && pole < 2.5)) continue;
      Mapped m = apply_equiv(eq, p);
      auto r = classify(m.eq);
      EXPECT_EQ(r.case_tag, row.tag);
      for (const char* k : {"rho", "nu"}) {
        if (row.params.count(k)) {
          EXPECT_NEAR(r.parameters[k], row.params.at(k), 1e-8) << k;
        }
      }
      ++done;
    }
  }
}

TEST(Classify, InvariantUnderGaugedGroup) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> coef(0.5, 2.0);
  for (const Row& row : canonical_rows()) {
    if (row.n == 1.0) continue;
    SCOPED_TRACE(row.tag);
    const KawaharaEq eq = make_eq(row.n, "1", row.beta, row.sigma);
    for (int i = 0; i < 3; ++i) {
      GaugedEquivParams p{coef(rng) - 1.0, coef(rng), coef(rng), coef(rng)};
      auto r = classify(apply_equiv(eq, p).eq);
      EXPECT_EQ(r.case_tag, row.tag);
      if (row.params.count("rho")) {
        EXPECT_NEAR(r.parameters["rho"], row.params.at("rho"), 1e-8);
      }
    }
  }
}

TEST(VerifyGenerator, Examples) {
  const auto e2 = make_eq(2, "1", "t", "t");
  EXPECT_LE(verify_generator(e2, {Expr(0.0), Expr(1.0), Expr(0.0), ""}).residual, 0.0);
  EXPECT_GT(verify_generator(e2, {Expr(1.0), Expr(0.0), Expr(0.0), ""}).residual, 1e-3);
  const auto e1 = make_eq(1, "1", "t", "t");
  EXPECT_LE(verify_generator(e1, {Expr(0.0), t_var(), Expr(1.0), ""}).residual, 0.0);
}

TEST(VerifyGenerator, RejectsNonPointStructure) {
  const auto e2 = make_eq(2, "1", "t", "t");
  EXPECT_THROW(verify_generator(e2, {x_var(), Expr(0.0), Expr(0.0), ""}), ClassifyError);
  EXPECT_THROW(verify_generator(e2, {Expr(0.0), Expr(0.0), u_var() * u_var(), ""}), ClassifyError);
}

TEST(VerifyGenerator, ScalingForConstantCoefficients) {
  // u_t + u u_x + u_xxx = 0 style scaling fails once sigma is present.
  const auto e = make_eq(1, "1", "1", "1");
  const SymmetryGenerator kdv{3.0 * t_var(), x_var(), -2.0 * u_var(), ""};
  EXPECT_GT(verify_generator(e, kdv).relative(), 1e-3);
  EXPECT_TRUE(verify_generator(e, {Expr(1.0), Expr(0.0), Expr(0.0), ""}).ok());
}

TEST(OptimalSystems, GeneratorsAreSymmetries) {
  const std::vector<double> avals{-1.3, 0.0, 2.0};
  for (const Row& row : canonical_rows()) {
    SCOPED_TRACE(row.tag);
    const KawaharaEq eq = make_eq(row.n, "1", row.beta, row.sigma);
    auto r = classify(eq);
    auto subs = optimal_subalgebras(r);
    for (const auto& s : subs) {
      for (double a : avals) {
        Bindings b{{"a", a}, {"s0", std::round(a) > 0 ? 1.0 : std::round(a) < 0 ? -1.0 : 0.0}};
        EXPECT_TRUE(verify_generator(r.canonical_eq, s.generator, b).ok()) << s.label;
      }
    }
  }
}

TEST(OptimalSystems, SpecialRhoValues) {
  auto labels = [](const std::vector<Subalgebra>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) out.push_back(s.label);
    return out;
  };
  EXPECT_EQ(labels(optimal_subalgebras("1", 2.0, {{"rho", -1.0}})), (std::vector<std::string>{"g0", "g1.2"}));
  EXPECT_EQ(labels(optimal_subalgebras("1", 2.0, {{"rho", 1.0}})), (std::vector<std::string>{"g0", "g1.1"}));
  EXPECT_EQ(labels(optimal_subalgebras("1'", 1.0, {{"rho", 2.0}})),
            (std::vector<std::string>{"g0", "g0'", "g1'.3"}));
  EXPECT_EQ(labels(optimal_subalgebras("1'", 1.0, {{"rho", -1.0}})),
            (std::vector<std::string>{"g0", "g0'", "g1'.2"}));
  EXPECT_EQ(labels(optimal_subalgebras("3'", 1.0, {})), (std::vector<std::string>{"g0", "g3'.1", "g3'.2"}));
  EXPECT_EQ(optimal_subalgebras("0", 2.0, {}).size(), 1u);
  EXPECT_THROW(optimal_subalgebras("9", 2.0, {}), ClassifyError);

  // rho = -1 generators for 1' need the rho = -1 canonical equation.
  const auto eq = make_eq(1, "1", "t^(-1)", "t^(-1)");
  for (const auto& s : optimal_subalgebras("1'", 1.0, {{"rho", -1.0}}))
    EXPECT_TRUE(verify_generator(eq, s.generator, {{"a", 0.7}, {"s0", 1.0}}).ok()) << s.label;
}

TEST(PullBack, MapsSymmetriesToSymmetries) {
  const auto eq = ice_preset();
  auto r = classify(eq);
  for (const auto& g : r.canonical_basis) EXPECT_TRUE(verify_generator(r.canonical_eq, g).ok()) << g.label;
  for (const auto& g : r.basis) EXPECT_TRUE(verify_generator(eq, g).ok()) << g.label;
}
