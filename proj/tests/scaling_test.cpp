#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fields.hpp"
#include "fxts/catalog.hpp"
#include "fxts/scaling.hpp"

using namespace fxts;
using fxts::testing::vec;

TEST(PiecewiseConstants, FrozenValues) {
  const auto a = compute_c_and_exponents(0.5, -2.0);
  EXPECT_DOUBLE_EQ(a.p, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(a.q, 1.5);
  EXPECT_NEAR(a.c, 3.24460982343043, 1e-13);  // (8/3)^(6/5)
  const auto b = compute_c_and_exponents(0.5, -0.5);
  EXPECT_DOUBLE_EQ(b.q, 1.2);
  EXPECT_NEAR(b.c, 2.605951961070237, 1e-13);
}

TEST(PiecewiseConstants, BranchCoefficientsAgreeAtOne) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(0.01, 0.99);
  std::uniform_real_distribution<double> ub(-20.0, -0.01);
  for (int k = 0; k < 500; ++k) {
    const auto pr = compute_c_and_exponents(ua(rng), ub(rng));
    const double lo = std::pow(pr.c, 2.0 - pr.p) * (2.0 - pr.alpha);
    const double hi = std::pow(pr.c, 2.0 - pr.q) * (2.0 - pr.beta);
    EXPECT_NEAR(lo, hi, 1e-13 * std::max(1.0, lo));
    EXPECT_GT(pr.p, 0.0);
    EXPECT_LT(pr.p, 1.0);
    EXPECT_GT(pr.q, 1.0);
    EXPECT_LT(pr.q, 2.0);
  }
}

TEST(PiecewiseConstants, RejectsOutOfRange) {
  for (auto [a, b] : std::vector<std::pair<double, double>>{{0.0, -1.0}, {1.0, -1.0}, {0.5, 0.0}, {0.5, 1.0}}) {
    try {
      compute_c_and_exponents(a, b);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::parameter);
      EXPECT_EQ(e.module(), "scaling");
    }
  }
}

TEST(Eq5, NormOfScaledField) {
  const auto e = catalog_get("quadratic_gradient:q=1,4");
  const ScaleExponentsEq5 ex{0.3, -1.5};
  const auto sys = fxts_scale(e.field, ex);
  for (const Vector& x : {vec({1e-4, 2e-4}), vec({0.2, -0.1}), vec({3.0, 5.0}), vec({-1e3, 7.0})}) {
    const Vector f = evaluate(e.field, x);
    const Vector g = evaluate(sys.field, x);
    const double nf = f.norm();
    EXPECT_NEAR(g.norm(), std::pow(nf, 1.0 - ex.p) + std::pow(nf, 1.0 - ex.q), 1e-12 * g.norm());
    EXPECT_NEAR(g.normalized().dot(f.normalized()), 1.0, 1e-14);
  }
  EXPECT_EQ(evaluate(sys.field, Vector::Zero(2)).norm(), 0.0);
}

TEST(Eq5, RejectsBadExponents) {
  const auto e = catalog_get("linear_contraction");
  EXPECT_THROW(fxts_scale(e.field, {1.0, -2.0}), Error);
  EXPECT_THROW(fxts_scale(e.field, {0.5, 0.0}), Error);
  EXPECT_THROW(fxts_scale(e.field, {0.0, -1.0}), Error);
}

TEST(Eq6, ContinuousAcrossUnitNorm) {
  const auto e = catalog_get("linear_contraction");
  const auto sys = piecewise_scale(e.field, 0.5, -2.0);
  const double c = std::get<PiecewiseScaleParams>(sys.params).c;
  const Vector below = evaluate(sys.field, vec({1.0 - 1e-12, 0.0}));
  const Vector above = evaluate(sys.field, vec({1.0 + 1e-12, 0.0}));
  EXPECT_NEAR(below.norm(), c, 1e-10);
  EXPECT_NEAR(above.norm(), c, 1e-10);
}

TEST(Scaling, RequiresIsolatedEquilibrium) {
  const auto f = fxts::testing::degenerate_field();
  for (const char* s : {"eq5:p=0.5,q=-2", "eq6:alpha=0.5,beta=-2"}) {
    try {
      apply_scale(f, parse_spec(s));
      FAIL() << s;
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), ErrorCode::contract);
    }
  }
  EXPECT_NO_THROW(apply_scale(f, parse_spec("none")));
}

TEST(Scaling, SpecParsing) {
  const auto e = catalog_get("linear_contraction");
  const auto s5 = apply_scale(e.field, parse_spec("eq5:p=0.25,q=-1"));
  EXPECT_EQ(s5.kind, ScaleKind::eq5);
  EXPECT_EQ(std::get<ScaleExponentsEq5>(s5.params), (ScaleExponentsEq5{0.25, -1.0}));
  const auto s6 = apply_scale(e.field, parse_spec("eq6:alpha=0.5,beta=-0.5"));
  EXPECT_EQ(s6.kind, ScaleKind::eq6_piecewise);
  EXPECT_EQ(apply_scale(e.field, parse_spec("unscaled")).kind, ScaleKind::none);
  EXPECT_THROW(apply_scale(e.field, parse_spec("eq5:r=1")), Error);
  EXPECT_THROW(apply_scale(e.field, parse_spec("eq7")), Error);
}
