#include <cmath>

#include <gtest/gtest.h>

#include "ptrmarket/equilibrium_oracle.hpp"
#include "ptrmarket/verification.hpp"

using namespace ptrmarket;

namespace {

// Symmetric Cournot duopoly, D = 10, e = 1, zero cost.
oracle::GameSpec cournot() {
  oracle::GameSpec g;
  g.search_upper = 20.0;
  g.profits = {[](std::span<const double> x) { return (10.0 - x[0] - x[1]) * x[0]; },
               [](std::span<const double> x) { return (10.0 - x[0] - x[1]) * x[1]; }};
  return g;
}

}  // namespace

TEST(Maximize1d, InteriorQuadratic) {
  const auto m = oracle::maximize_1d([](double x) { return -(x - 3.0) * (x - 3.0); }, 0.0, 10.0);
  EXPECT_NEAR(m.argmax, 3.0, 1e-9);
  EXPECT_NEAR(m.value, 0.0, 1e-12);
}

TEST(Maximize1d, MonotoneEndsAtBoundary) {
  EXPECT_NEAR(oracle::maximize_1d([](double x) { return x; }, 0.0, 2.0).argmax, 2.0, 1e-9);
  EXPECT_NEAR(oracle::maximize_1d([](double x) { return -x; }, 0.0, 2.0).argmax, 0.0, 1e-9);
}

TEST(BestResponse, CournotDuopoly) {
  const auto r = oracle::best_response(cournot(), {0.0, 0.0});
  EXPECT_NEAR(r.actions[0], 10.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.actions[1], 10.0 / 3.0, 1e-9);
  EXPECT_TRUE(r.concave);
}

TEST(BestResponse, BoxBindsAtUpper) {
  auto g = cournot();
  g.boxes = {oracle::Box{0.0, 2.0}, oracle::Box{}};
  const auto r = oracle::best_response(g, {0.0, 0.0});
  EXPECT_NEAR(r.actions[0], 2.0, 1e-9);
  EXPECT_NEAR(r.actions[1], 4.0, 1e-9);
}

TEST(BestResponse, SweepCapRaisesNoConvergence) {
  auto g = cournot();
  g.max_sweeps = 2;
  g.stall_sweeps = 1000;
  try {
    oracle::best_response(g, {0.0, 0.0});
    FAIL() << "expected a throw";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoConvergence);
  }
}

TEST(BestResponse, RejectsNonPositiveStep) {
  auto g = cournot();
  g.step = 0.0;
  EXPECT_THROW(oracle::best_response(g, {0.0, 0.0}), SolverError);
}

TEST(FiniteDifference, SquareAtThree) {
  EXPECT_NEAR(oracle::fd_derivative([](double x) { return x * x; }, 3.0), 6.0, 1e-8);
}

TEST(FiniteDifference, ConstantHasZeroGradient) {
  const std::vector<double> at{1.0, -2.0, 50.0};
  const auto g = oracle::fd_gradient([](std::span<const double>) { return 7.0; }, at);
  ASSERT_EQ(g.size(), 3u);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDifference, StepScalesWithMagnitude) {
  EXPECT_DOUBLE_EQ(oracle::fd_step(0.5), 1e-5);
  EXPECT_DOUBLE_EQ(oracle::fd_step(-200.0), 2e-3);
}

TEST(Kkt, InteriorCournotPasses) {
  oracle::KktProblem p;
  p.profits = cournot().profits;
  p.caps = {std::nullopt, std::nullopt};
  const std::vector<double> x{10.0 / 3.0, 10.0 / 3.0};
  const auto r = oracle::kkt_check(p, x, std::vector<double>{0.0, 0.0}, 1e-7);
  EXPECT_TRUE(r.passed) << r.worst();
}

TEST(Kkt, NegativeMultiplierFlagsDual) {
  oracle::KktProblem p;
  p.profits = cournot().profits;
  p.caps = {2.0, std::nullopt};
  const std::vector<double> x{2.0, 4.0};
  // At the cap the true multiplier is 10 - 4 - 4 = 2.
  EXPECT_TRUE(oracle::kkt_check(p, x, std::vector<double>{2.0, 0.0}, 1e-7).passed);
  const auto bad = oracle::kkt_check(p, x, std::vector<double>{-1.0, 0.0}, 1e-7);
  EXPECT_FALSE(bad.passed);
  EXPECT_GT(bad.dual, 0.5);
}

TEST(Kkt, SlackCapWithMultiplierFlagsComplementarity) {
  oracle::KktProblem p;
  p.profits = cournot().profits;
  p.caps = {5.0, std::nullopt};
  const std::vector<double> x{10.0 / 3.0, 10.0 / 3.0};
  const auto r = oracle::kkt_check(p, x, std::vector<double>{1.0, 0.0}, 1e-7);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.complementarity, 1.0);
}
