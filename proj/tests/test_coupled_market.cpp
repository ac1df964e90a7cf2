#include <gtest/gtest.h>

#include "ptrmarket/audit.hpp"
#include "ptrmarket/coupled_market.hpp"
#include "ptrmarket/verification.hpp"

using namespace ptrmarket;

namespace {

// Zone A locals at cost 2, importers at 1 + 2 = 3, D = 20, e = 1.
Model1Instance reference() { return audit::reference_instance(); }

}  // namespace

TEST(Spot, UnboundedCournotWithFiveWayPrice) {
  const auto inst = reference();
  const auto sp = spot_clearing(inst, PerGenerator{}, 0, Zone::A);
  EXPECT_NEAR(sp.price, 6.0, 1e-12);
  EXPECT_NEAR(sp.spot[0], 4.0, 1e-12);
  EXPECT_NEAR(sp.spot[1], 4.0, 1e-12);
  EXPECT_NEAR(sp.spot[2], 3.0, 1e-12);
  EXPECT_NEAR(sp.spot[3], 3.0, 1e-12);
  for (bool a : sp.active) EXPECT_FALSE(a);
}

TEST(Spot, BothImportersBinding) {
  auto inst = reference();
  inst.capacity = {1e6, 1e6, 2.0, 2.0};
  const auto game = make_zone_game(inst, Zone::A, 20.0, PerGenerator{}, inst.capacity);
  const auto sp = solve_spot(game);
  EXPECT_NEAR(sp.spot[2], 2.0, 1e-12);
  EXPECT_NEAR(sp.spot[3], 2.0, 1e-12);
  EXPECT_NEAR(sp.spot[0], 14.0 / 3.0, 1e-12);
  EXPECT_NEAR(sp.multiplier[2], 5.0 / 3.0, 1e-12);
  EXPECT_NEAR(sp.multiplier[3], 5.0 / 3.0, 1e-12);
  ASSERT_TRUE(sp.binding);
  EXPECT_NEAR(sp.binding->lambda[0], 5.0 / 3.0, 1e-12);

  const auto y = verify::zone_spot_oracle(game);
  for (std::size_t j = 0; j < kGenerators; ++j) EXPECT_NEAR(sp.spot[j], y[j], verify::kOracleTolerance);
  EXPECT_TRUE(verify::spot_kkt(sp, sp.multiplier).passed);
}

TEST(Spot, OneImporterBinding) {
  auto inst = reference();
  inst.capacity = {1e6, 1e6, 1.0, 1e6};
  const auto game = make_zone_game(inst, Zone::A, 20.0, PerGenerator{}, inst.capacity);
  const auto sp = solve_spot(game);
  EXPECT_TRUE(sp.active[2]);
  EXPECT_FALSE(sp.active[3]);
  const auto y = verify::zone_spot_oracle(game);
  for (std::size_t j = 0; j < kGenerators; ++j) EXPECT_NEAR(sp.spot[j], y[j], verify::kOracleTolerance);
  EXPECT_GT(sp.multiplier[2], 0.0);
  EXPECT_EQ(sp.multiplier[3], 0.0);
}

TEST(Spot, CapSensitivityMatchesFiniteDifference) {
  auto inst = reference();
  inst.capacity = {1e6, 1e6, 2.0, 2.0};
  const auto sp = solve_spot(make_zone_game(inst, Zone::A, 20.0, PerGenerator{}, inst.capacity));
  const auto sens = cap_sensitivity(sp, GeneratorId(3));
  auto price_at = [&](double k) {
    auto c = inst.capacity;
    c[2] = k;
    return solve_spot(make_zone_game(inst, Zone::A, 20.0, PerGenerator{}, c)).price;
  };
  EXPECT_NEAR(sens.price, oracle::fd_derivative(price_at, 2.0), 1e-6);
}

TEST(Spot, OutOfRangeScenario) {
  EXPECT_THROW(spot_clearing(reference(), PerGenerator{}, 3), SolverError);
}

TEST(DayAhead, ReferenceSales) {
  const auto z = solve_zone(reference(), Zone::A, 0.0);
  EXPECT_NEAR(z.day_ahead.forward[0], 78.0 / 17.0, 1e-10);
  EXPECT_NEAR(z.day_ahead.forward[1], 78.0 / 17.0, 1e-10);
  EXPECT_NEAR(z.day_ahead.forward[2], 27.0 / 17.0, 1e-10);
  EXPECT_NEAR(z.day_ahead.forward[3], 27.0 / 17.0, 1e-10);
}

TEST(DayAhead, MatchesNestedOracleAtNonzeroBeta) {
  const auto inst = reference();
  const auto z = solve_zone(inst, Zone::A, -0.4);
  const auto f = verify::zone_day_ahead_oracle(inst, Zone::A, -0.4);
  for (std::size_t j = 0; j < kGenerators; ++j) EXPECT_NEAR(z.day_ahead.forward[j], f[j], verify::kOracleTolerance);
}

TEST(DayAhead, ClosedFormAgreesWithMatrixSystem) {
  const auto inst = reference();
  auto in = day_ahead_inputs(inst, Zone::A, 0.3, inst.capacity);
  const auto da = solve_day_ahead(in);
  const auto f = day_ahead_closed_form(in, da.multiplier);
  for (std::size_t j = 0; j < kGenerators; ++j) EXPECT_NEAR(f[j], da.forward[j], 1e-10);
}

TEST(DayAhead, EqualDeliveredCostsGiveEqualSales) {
  auto inst = reference();
  inst.congestion_cost = 1.0;  // 1 + 1 = alpha_A
  const auto z = solve_zone(inst, Zone::A, 0.0);
  for (std::size_t j = 1; j < kGenerators; ++j) EXPECT_NEAR(z.day_ahead.forward[j], z.day_ahead.forward[0], 1e-12);
}

TEST(DayAhead, BindingRightsConvergeUnderTwoScenarios) {
  Model1Instance inst = reference();
  inst.scenarios.scenarios = {{19.0, 17.5, 0.5}, {21.0, 18.5, 0.5}};
  inst.capacity = {1.0, 1.0, 1.5, 8.0};
  inst.total_capacity = 12.0;
  const auto z = solve_zone(inst, Zone::A, 0.0);
  EXPECT_LT(z.iterations, kFixedPointCap);
  for (const auto& sp : z.spot) {
    EXPECT_LE(sp.production(GeneratorId(3)), 1.5 + 1e-9);
    EXPECT_TRUE(verify::spot_kkt(sp, sp.multiplier).passed);
  }
}

TEST(Welfare, NumericOptimumIsLocalMaximum) {
  const auto inst = reference();
  const auto opt = optimal_beta(inst, Zone::A);
  EXPECT_LT(std::abs(opt.slope), 1e-6);
  EXPECT_GE(opt.welfare, social_welfare(inst, opt.beta - 0.05));
  EXPECT_GE(opt.welfare, social_welfare(inst, opt.beta + 0.05));
  EXPECT_NEAR(opt.day_ahead_intercept, 20.0 + opt.beta, 1e-12);
}

TEST(Welfare, LimitFormsOfTheIntercept) {
  // S = alpha_A + alpha_B + eta = 5, no multipliers.
  EXPECT_NEAR(case_day_ahead_intercept(ElasticityCase::Inelastic, 20.0, 5.0, 0.0, 0.0), 13.5, 1e-12);
  EXPECT_NEAR(case_day_ahead_intercept(ElasticityCase::Elastic, 20.0, 5.0, 0.0, 0.0), 35.0, 1e-12);
  EXPECT_NEAR(case_day_ahead_intercept(ElasticityCase::Unit, 20.0, 5.0, 0.0, 0.0), 680.0 / 44.0, 1e-12);
}

TEST(Dilemma, NoForwardSalesNoGap) {
  const auto d = prisoner_dilemma_check(reference(), 0.0);
  EXPECT_NEAR(d.gap, 0.0, 1e-12);
  EXPECT_NEAR(d.stated_gap, 0.0, 1e-12);
}

TEST(Dilemma, ClosedFormProfitsMatchDirectEvaluation) {
  auto inst = reference();
  inst.a.day_ahead_intercept = 19.0;
  const auto d = prisoner_dilemma_check(inst, 1.0);
  EXPECT_NEAR(d.beta, -1.0, 1e-12);
  EXPECT_NEAR(d.pi_1, d.direct_pi_1, 1e-9);
  EXPECT_NEAR(d.pi_2, d.direct_pi_2, 1e-9);
  EXPECT_NEAR(d.gap, -d.entrant_advantage, 1e-9);
}

TEST(Dilemma, NegativeForwardRejected) { EXPECT_THROW(prisoner_dilemma_check(reference(), -1.0), SolverError); }
