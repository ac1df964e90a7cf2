#pragma once

// Two-stage Cournot duopoly with asymmetric marginal costs: a spot
// generation game given day-ahead sales, and the day-ahead equilibrium found
// by backward induction under no-arbitrage.

#include <array>
#include <string>

#include "ptrmarket/errors.hpp"
#include "ptrmarket/market_model.hpp"

namespace ptrmarket::av {

struct AvParams {
  double demand_intercept = 0.0;  // D
  double elasticity = 1.0;        // e
  double cost_1 = 0.0;            // alpha_1
  double cost_2 = 0.0;            // alpha_2

  double price(double total) const { return demand_intercept - elasticity * total; }
};

struct SpotOutcome {
  double x_1 = 0.0;
  double x_2 = 0.0;
  double price = 0.0;
};

struct AvEquilibrium {
  double f_1 = 0.0;
  double f_2 = 0.0;
  double x_1 = 0.0;
  double x_2 = 0.0;
  double price = 0.0;
};

inline ValidationReport validate(const AvParams& p) {
  ValidationReport report;
  if (!(p.elasticity > 0.0)) report.violations.emplace_back("elasticity must be positive");
  if (!(p.demand_intercept > p.cost_1) || !(p.demand_intercept > p.cost_2)) {
    report.violations.emplace_back("demand intercept must exceed marginal costs");
  }
  return report;
}

inline void require_valid(const AvParams& p) {
  auto report = validate(p);
  if (!report.ok()) throw ConfigError(ErrorKind::Validation, report.joined());
}

/// Spot profit of generator i: spot price on (x_i - f_i) minus production cost.
inline double spot_profit(const AvParams& p, int who, double x_1, double x_2, double f_1,
                          double f_2) {
  const double q = p.price(x_1 + x_2);
  return who == 1 ? q * (x_1 - f_1) - p.cost_1 * x_1 : q * (x_2 - f_2) - p.cost_2 * x_2;
}

/// Production game given day-ahead sales (f_1, f_2).
inline SpotOutcome spot_equilibrium(const AvParams& p, double f_1, double f_2) {
  require_valid(p);
  const GeneratorId g1(1), g2(2);
  checked_quantity(f_1, "day-ahead sales", g1);
  checked_quantity(f_2, "day-ahead sales", g2);
  const double e = p.elasticity;
  SpotOutcome out;
  out.x_1 = ((p.demand_intercept - 2.0 * p.cost_1 + p.cost_2) / e + 2.0 * f_1 - f_2) / 3.0;
  out.x_2 = ((p.demand_intercept - 2.0 * p.cost_2 + p.cost_1) / e + 2.0 * f_2 - f_1) / 3.0;
  out.x_1 = checked_quantity(out.x_1, "production", g1);
  out.x_2 = checked_quantity(out.x_2, "production", g2);
  checked_quantity(out.x_1 - f_1, "spot sales", g1, out.x_1);
  checked_quantity(out.x_2 - f_2, "spot sales", g2, out.x_2);
  out.price = p.price(out.x_1 + out.x_2);
  return out;
}

/// Day-ahead equilibrium with perfect foresight (day-ahead price equals the
/// spot price). Production doubles forward sales for any cost asymmetry.
inline AvEquilibrium day_ahead_equilibrium(const AvParams& p) {
  require_valid(p);
  const double e = p.elasticity;
  const double d = p.demand_intercept;
  AvEquilibrium out;
  out.f_1 = checked_quantity((d - 3.0 * p.cost_1 + 2.0 * p.cost_2) / (5.0 * e), "day-ahead sales",
                             GeneratorId(1));
  out.f_2 = checked_quantity((d - 3.0 * p.cost_2 + 2.0 * p.cost_1) / (5.0 * e), "day-ahead sales",
                             GeneratorId(2));
  out.x_1 = 2.0 * out.f_1;
  out.x_2 = 2.0 * out.f_2;
  out.price = p.price(out.x_1 + out.x_2);
  return out;
}

/// Consumer plus producer surplus at production (x_1, x_2).
inline double welfare(const AvParams& p, double x_1, double x_2) {
  const double x = x_1 + x_2;
  return p.demand_intercept * x - 0.5 * p.elasticity * x * x - p.cost_1 * x_1 - p.cost_2 * x_2;
}

// Published price expressions, kept only so the formula audit can measure how
// far they sit from the clearing identity. They divide the cost terms by e.
inline double published_spot_price(const AvParams& p, double f_1, double f_2) {
  return ((p.demand_intercept + p.cost_1 + p.cost_2) / p.elasticity - f_1 - f_2) / 3.0;
}

inline double published_day_ahead_price(const AvParams& p) {
  return (p.demand_intercept + 2.0 * (p.cost_1 + p.cost_2)) / (5.0 * p.elasticity);
}

}  // namespace ptrmarket::av
