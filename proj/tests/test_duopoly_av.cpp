#include <gtest/gtest.h>

#include "ptrmarket/duopoly_av.hpp"
#include "ptrmarket/verification.hpp"

using namespace ptrmarket;

TEST(AvSpot, SymmetricNoForwardIsCournot) {
  const av::AvParams p{10.0, 1.0, 2.0, 2.0};
  const auto s = av::spot_equilibrium(p, 0.0, 0.0);
  EXPECT_NEAR(s.x_1, 8.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.x_2, 8.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.price, 14.0 / 3.0, 1e-12);
}

TEST(AvSpot, ForwardSalesShiftProduction) {
  const av::AvParams p{10.0, 1.0, 2.0, 2.0};
  const auto s = av::spot_equilibrium(p, 1.0, 0.0);
  EXPECT_NEAR(s.x_1, 10.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.x_2, 7.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.price, 13.0 / 3.0, 1e-12);
}

TEST(AvSpot, ZeroCostReducesToTextbook) {
  const av::AvParams p{12.0, 2.0, 0.0, 0.0};
  const auto s = av::spot_equilibrium(p, 0.0, 0.0);
  EXPECT_NEAR(s.x_1, 12.0 / 6.0, 1e-12);
  EXPECT_NEAR(s.x_2, 12.0 / 6.0, 1e-12);
}

TEST(AvSpot, MatchesBestResponseOracle) {
  const av::AvParams p{14.0, 1.5, 1.0, 2.5};
  const auto s = av::spot_equilibrium(p, 0.7, 0.2);
  const auto x = verify::av_spot_oracle(p, 0.7, 0.2);
  EXPECT_NEAR(s.x_1, x[0], verify::kOracleTolerance);
  EXPECT_NEAR(s.x_2, x[1], verify::kOracleTolerance);
}

TEST(AvDayAhead, SymmetricCosts) {
  const auto eq = av::day_ahead_equilibrium({10.0, 1.0, 2.0, 2.0});
  EXPECT_NEAR(eq.f_1, 1.6, 1e-12);
  EXPECT_NEAR(eq.f_2, 1.6, 1e-12);
  EXPECT_NEAR(eq.x_1, 3.2, 1e-12);
  EXPECT_NEAR(eq.price, 3.6, 1e-12);
}

TEST(AvDayAhead, AsymmetricCosts) {
  const auto eq = av::day_ahead_equilibrium({10.0, 1.0, 1.0, 3.0});
  EXPECT_NEAR(eq.f_1, 2.6, 1e-12);
  EXPECT_NEAR(eq.f_2, 0.6, 1e-12);
  EXPECT_NEAR(eq.x_1, 5.2, 1e-12);
  EXPECT_NEAR(eq.x_2, 1.2, 1e-12);
  EXPECT_NEAR(eq.price, 3.6, 1e-12);
}

TEST(AvDayAhead, MatchesNestedOracle) {
  const av::AvParams p{10.0, 2.0, 1.0, 3.0};
  const auto eq = av::day_ahead_equilibrium(p);
  const auto f = verify::av_day_ahead_oracle(p);
  EXPECT_NEAR(eq.f_1, f[0], verify::kOracleTolerance);
  EXPECT_NEAR(eq.f_2, f[1], verify::kOracleTolerance);
}

TEST(AvDayAhead, SpotStageAtForwardSalesReproducesProduction) {
  const av::AvParams p{13.0, 0.8, 1.5, 2.0};
  const auto eq = av::day_ahead_equilibrium(p);
  const auto s = av::spot_equilibrium(p, eq.f_1, eq.f_2);
  EXPECT_NEAR(s.x_1, eq.x_1, 1e-12);
  EXPECT_NEAR(s.x_2, eq.x_2, 1e-12);
  EXPECT_NEAR(s.price, eq.price, 1e-12);
}

TEST(AvDayAhead, LargeCostGapGivesNegativeSales) {
  try {
    av::day_ahead_equilibrium({10.0, 1.0, 1.0, 9.0});
    FAIL() << "expected a throw";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeQuantity);
  }
}

TEST(AvValidation, Rejections) {
  EXPECT_TRUE(av::validate({10.0, 0.0, 1.0, 1.0}).contains("elasticity must be positive"));
  EXPECT_TRUE(av::validate({1.0, 1.0, 1.0, 0.5}).contains("demand intercept must exceed marginal costs"));
  EXPECT_THROW(av::spot_equilibrium({10.0, -1.0, 1.0, 1.0}, 0.0, 0.0), ConfigError);
}

TEST(AvPublished, AgreesAtUnitElasticityOnly) {
  const av::AvParams unit{10.0, 1.0, 1.0, 3.0};
  EXPECT_NEAR(av::published_spot_price(unit, 0.5, 0.25), av::spot_equilibrium(unit, 0.5, 0.25).price, 1e-12);
  const av::AvParams steep{10.0, 2.0, 1.0, 3.0};
  EXPECT_GT(std::abs(av::published_day_ahead_price(steep) - av::day_ahead_equilibrium(steep).price), 1e-3);
}

TEST(AvWelfare, ZeroAtZeroOutput) { EXPECT_DOUBLE_EQ(av::welfare({10.0, 1.0, 1.0, 3.0}, 0.0, 0.0), 0.0); }
