#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "fields.hpp"
#include "fxts/catalog.hpp"
#include "fxts/lyapunov.hpp"
#include "fxts/phi.hpp"
#include "fxts/scaling.hpp"

using namespace fxts;
using fxts::testing::vec;

namespace {

SamplingPlan annulus(double lo, double hi, std::size_t n = 1000, std::uint64_t seed = 0) {
  SamplingPlan plan;
  plan.domain = Annulus{lo, hi};
  plan.count = n;
  plan.seed = seed;
  return plan;
}

}  // namespace

TEST(HMatrix, CatalogValues) {
  const Vector x = vec({0.3, -1.2});
  EXPECT_TRUE(h_matrix(catalog_get("linear_contraction").field, x, HConvention::theorem4).isApprox(2.0 * Matrix::Identity(2, 2)));
  const Matrix hr = h_matrix(catalog_get("rotation_contraction:w=3").field, x, HConvention::theorem4);
  EXPECT_LT((hr - 2.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
  Matrix q(2, 2);
  q << 1.0, 0.0, 0.0, 4.0;
  EXPECT_TRUE(h_matrix(catalog_get("quadratic_gradient:q=1,4").field, x, HConvention::theorem5).isApprox(q));
}

TEST(HMatrix, ConventionsDifferByTwoAndAreSymmetric) {
  const auto f = fxts::testing::coupled_gradient();
  const auto samples = generate_samples(annulus(0.1, 5.0, 50), 2, f.equilibrium_tolerance);
  for (const auto& x : samples) {
    const Matrix h4 = h_matrix(f, x, HConvention::theorem4);
    const Matrix h5 = h_matrix(f, x, HConvention::theorem5);
    EXPECT_LT((h4 - 2.0 * h5).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(h4, h4.transpose());
  }
}

TEST(Sampling, SeededAndInsideDomain) {
  const auto plan = annulus(1e-2, 10.0, 200, 5);
  const auto a = generate_samples(plan, 3, 1e-12);
  const auto b = generate_samples(plan, 3, 1e-12);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  for (const auto& x : a) {
    EXPECT_GE(x.norm(), 1e-2 * (1 - 1e-12));
    EXPECT_LE(x.norm(), 10.0 * (1 + 1e-12));
  }
  auto other = plan;
  other.seed = 6;
  EXPECT_NE(generate_samples(other, 3, 1e-12).front(), a.front());
}

TEST(ConditionI, LinearInBallIsExactlyTwo) {
  SamplingPlan plan;
  plan.domain = Ball{10.0};
  const auto rep = verify_condition_i(catalog_get("linear_contraction").field, plan, HConvention::theorem4);
  EXPECT_EQ(rep.lambda0_estimate, 2.0);
  EXPECT_EQ(rep.verdict, Verdict::condition_i_holds);
  EXPECT_GE(rep.sample_count, 1000u);
}

TEST(ConditionI, ScalarCubicDegeneratesNearOrigin) {
  const auto rep = verify_condition_i(catalog_get("scalar_cubic").field, annulus(1e-3, 10.0), HConvention::theorem4, 1e-3);
  EXPECT_NEAR(rep.lambda0_estimate, 6e-6, 1e-15);
  EXPECT_EQ(rep.verdict, Verdict::neither);
  EXPECT_NEAR(std::abs(rep.worst_point(0)), 1e-3, 1e-15);
}

TEST(ConditionI, QuadraticGradientTheorem5) {
  const auto rep = verify_condition_i(catalog_get("quadratic_gradient:q=1,4").field, annulus(1e-3, 1e3, 1000, 7),
                                      HConvention::theorem5);
  EXPECT_NEAR(rep.lambda0_estimate, 1.0, 1e-9);
}

TEST(ConditionI, LowerBoundLemmaAtSamples) {
  const auto f = catalog_get("cubic_gradient").field;
  const auto plan = annulus(1e-2, 3.0, 300);
  const auto rep = verify_condition_i(f, plan, HConvention::theorem4);
  ASSERT_EQ(rep.verdict, Verdict::condition_i_holds);
  for (const auto& x : generate_samples(plan, 2, f.equilibrium_tolerance)) {
    const Vector fx = evaluate(f, x);
    EXPECT_GE(fx.dot(h_matrix(f, x, HConvention::theorem4) * fx), (rep.lambda0_estimate - 1e-12) * fx.squaredNorm());
  }
}

TEST(ConditionII, LinearAndRotationHold) {
  for (const char* name : {"linear_contraction", "rotation_contraction"}) {
    const auto rep = verify_condition_ii(catalog_get(name).field, annulus(1e-3, 1e3), HConvention::theorem4);
    EXPECT_EQ(rep.verdict, Verdict::condition_ii_holds) << name;
    for (int m : rep.zero_multiplicity) EXPECT_EQ(m, 0);
    EXPECT_NEAR(rep.lambda0_estimate, 2.0, 1e-12);
    EXPECT_TRUE(rep.warnings.empty());
  }
}

TEST(ConditionII, DegenerateFieldIsFlagged) {
  const auto f = fxts::testing::degenerate_field();
  const auto rep = verify_condition_ii(f, annulus(1e-2, 10.0, 200), HConvention::theorem4);
  for (int m : rep.zero_multiplicity) EXPECT_EQ(m, 1);
  EXPECT_LT(rep.orthogonality_residual_max, 1e-8);
  EXPECT_NEAR(rep.lambda0_estimate, 2.0, 1e-6);
  ASSERT_FALSE(rep.warnings.empty());
  bool vanishing = false;
  bool undeclared = false;
  for (const auto& w : rep.warnings) {
    EXPECT_EQ(w.rfind("contract:", 0), 0u);
    vanishing = vanishing || w.find("vanishes") != std::string::npos;
    undeclared = undeclared || w.find("not declared") != std::string::npos;
  }
  EXPECT_TRUE(vanishing);
  EXPECT_TRUE(undeclared);
}

TEST(LieDerivative, HandValues) {
  const auto lin = catalog_get("linear_contraction:n=1").field;
  EXPECT_DOUBLE_EQ(lie_derivative(lin, VSelector::norm_sq_of_f, vec({1.5})), -2.0 * 2.25);
  const auto eq5 = fxts_scale(lin, {0.5, -2.0});
  EXPECT_NEAR(lie_derivative(eq5, VSelector::norm_sq_of_f, vec({1.0})), -4.0, 1e-9);
  const auto quad = catalog_get("quadratic_gradient:q=1,4").field;
  EXPECT_DOUBLE_EQ(lie_derivative(quad, VSelector::potential, vec({1.0, 0.0})), -1.0);
  EXPECT_THROW(lie_derivative(catalog_get("rotation_contraction").field, VSelector::potential, vec({1.0, 0.0})), Error);
}

TEST(PhiDecrease, Eq5LinearChainIsTight) {
  const auto sys = fxts_scale(catalog_get("linear_contraction:n=1").field, {0.5, -2.0});
  const auto phi = make_polyakov_phi({2.0, 2.0, 0.75, 2.0});
  const auto rep = verify_phi_decrease(sys, VSelector::norm_sq_of_f, phi, annulus(1e-3, 1e3), 1e-9);
  EXPECT_TRUE(rep.holds);
  EXPECT_NEAR(rep.worst_margin, 0.0, 1e-6);
}

TEST(PhiDecrease, UnscaledLinearFailsExactlyBelowOne) {
  const auto sys = unscaled(catalog_get("linear_contraction:n=1").field);
  const auto phi = make_power_phi(2.0, 0.75);
  const auto samples = generate_samples(annulus(1e-3, 1e3), 1, 1e-12);
  const auto rep = verify_phi_decrease(sys, VSelector::norm_sq_of_f, phi, samples, 1e-9);
  EXPECT_FALSE(rep.holds);
  std::size_t below = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double v = samples[i].squaredNorm();
    if (v < 1.0 - 1e-6) {
      ++below;
      EXPECT_LT(rep.margins[i], 0.0) << v;
    } else if (v > 1.0 + 1e-6) {
      EXPECT_GE(rep.margins[i], 0.0) << v;
    }
  }
  EXPECT_EQ(rep.failing_count, below);
}

TEST(PhiDecrease, ZeroPhiRejected) {
  const auto sys = unscaled(catalog_get("linear_contraction").field);
  try {
    verify_phi_decrease(sys, VSelector::norm_sq_of_f, make_table_phi({1.0, 2.0}, {0.0, 0.0}), annulus(0.1, 1.0, 10), 1e-9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::contract);
  }
}

TEST(SecondOrder, UnscaledLinearWithLinearPhiHolds) {
  const auto sys = unscaled(catalog_get("linear_contraction:n=1").field);
  const auto phi = make_table_phi({1e-3, 1.0, 1e3}, {1e-3, 1.0, 1e3});
  const auto rep = verify_second_order(sys, VSelector::norm_sq_of_f, phi, annulus(1e-2, 10.0), 1e-6, 1e-6);
  EXPECT_TRUE(rep.holds);
  EXPECT_EQ(rep.skipped_count, 0u);
  // d/dt(-Vdot) = 2(-Vdot): relative margin approaches 1 for -Vdot >= 1.
  EXPECT_GT(rep.worst_margin, 0.0);
}

TEST(SecondOrder, SegmentThroughOriginIsSkipped) {
  const auto sys = fxts_scale(catalog_get("linear_contraction").field, {0.5, -2.0});
  const auto phi = make_polyakov_phi({1, 1, 0.5, 2});
  const auto rep = verify_second_order(sys, VSelector::norm_sq_of_f, phi, {vec({1e-7, 0.0})}, 1.0, 1e-6);
  EXPECT_EQ(rep.skipped_count, 1u);
  EXPECT_FALSE(rep.holds);
  EXPECT_TRUE(std::isnan(rep.margins[0]));
  EXPECT_THROW(verify_second_order(sys, VSelector::norm_sq_of_f, phi, {vec({1.0, 0.0})}, 0.0, 1e-6), Error);
}

TEST(Parallelism, ReportsIndependentOfWorkerCount) {
  const auto f = fxts::testing::coupled_gradient();
  const auto plan = annulus(1e-2, 10.0, 500, 9);
  ::setenv("FXTS_THREADS", "1", 1);
  const auto a = verify_condition_ii(f, plan, HConvention::theorem5);
  ::setenv("FXTS_THREADS", "4", 1);
  const auto b = verify_condition_ii(f, plan, HConvention::theorem5);
  ::unsetenv("FXTS_THREADS");
  EXPECT_EQ(a.lambda0_estimate, b.lambda0_estimate);
  EXPECT_EQ(a.worst_point, b.worst_point);
  EXPECT_EQ(a.zero_multiplicity, b.zero_multiplicity);
}
