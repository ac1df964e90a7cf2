#pragma once

// Two coupled Cournot duopolies. Each zone runs a spot game between its two
// local generators and the two importers from the other zone, whose sales
// f_j + y_j are capped by their transmission rights K_j. Day-ahead sales are
// chosen by backward induction against the expected spot outcome, with the
// spot multipliers reconciled by a damped fixed point.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ptrmarket/equilibrium_oracle.hpp"
#include "ptrmarket/errors.hpp"
#include "ptrmarket/market_model.hpp"
#include "ptrmarket/parallel.hpp"

namespace ptrmarket {

using Flags = std::array<bool, kGenerators>;
using Caps = std::array<std::optional<double>, kGenerators>;

/// One zone's spot game in one scenario.
struct ZoneGame {
  Zone zone = Zone::A;
  double demand = 0.0;
  double elasticity = 1.0;
  PerGenerator cost{};     // delivered marginal cost into the zone
  PerGenerator forward{};  // day-ahead sales into the zone (f for A, g for B)
  Caps cap{};              // K_j on importers, none for locals

  double forward_total() const { return std::accumulate(forward.begin(), forward.end(), 0.0); }
  double cost_total() const { return std::accumulate(cost.begin(), cost.end(), 0.0); }
};

inline PerGenerator delivered_costs(const Model1Instance& inst, Zone zone) {
  PerGenerator c{};
  for (auto id : GeneratorId::all()) c[id.index()] = inst.delivered_cost(zone, id);
  return c;
}

inline Caps import_caps(Zone zone, const PerGenerator& capacity) {
  Caps cap{};
  for (auto id : importers_into(zone)) cap[id.index()] = capacity[id.index()];
  return cap;
}

inline ZoneGame make_zone_game(const Model1Instance& inst, Zone zone, double demand,
                               const PerGenerator& forward, const PerGenerator& capacity) {
  return ZoneGame{zone, demand, inst.zone(zone).elasticity, delivered_costs(inst, zone), forward,
                  import_caps(zone, capacity)};
}

/// Spot profit of generator j in the zone: revenue on spot sales minus the
/// cost of everything it delivers there. Pure function of the spot vector.
inline double zone_spot_profit(const ZoneGame& game, std::size_t j, std::span<const double> y) {
  double total = game.forward_total();
  for (double v : y) total += v;
  const double q = game.demand - game.elasticity * total;
  return q * y[j] - game.cost[j] * (y[j] + game.forward[j]);
}

/// Constants of the closed form when both import constraints of the zone bind.
struct BindingConstants {
  PerGenerator gamma{};     // Γ_j: spot sales with zero multipliers
  double gamma_price = 0.0;  // Γ: price with zero multipliers
  std::array<double, 2> lambda{};  // multipliers of the two importers
  double price_constant = 0.0;     // Q
  double local_constant = 0.0;     // Y_1
};

struct ConstrainedSpotSolution {
  Zone zone = Zone::A;
  std::size_t scenario = 0;
  double demand = 0.0;
  double elasticity = 1.0;
  PerGenerator cost{};
  PerGenerator forward{};
  PerGenerator spot{};
  PerGenerator multiplier{};
  Flags active{};
  Caps cap{};
  /// r_j: f-free spot sales intercepts with the multipliers folded into costs.
  PerGenerator r{};
  /// C: f-free price intercept with the multipliers folded into costs.
  double c_term = 0.0;
  double total_sales = 0.0;
  double price = 0.0;
  std::optional<BindingConstants> binding;

  double production(GeneratorId id) const { return forward[id.index()] + spot[id.index()]; }
  double slack(GeneratorId id) const {
    return cap[id.index()] ? *cap[id.index()] - production(id) : std::numeric_limits<double>::infinity();
  }
  double local_production() const {
    double v = 0.0;
    for (auto id : locals_of(zone)) v += production(id);
    return v;
  }
  double imported() const {
    double v = 0.0;
    for (auto id : importers_into(zone)) v += production(id);
    return v;
  }
  /// Spot-stage profit q y_j - c_j (y_j + f_j).
  double spot_profit(GeneratorId id) const {
    const auto j = id.index();
    return price * spot[j] - cost[j] * (spot[j] + forward[j]);
  }
};

/// Active sets over the capped players, fewest bindings first, ties in
/// ascending bitmask order.
inline std::vector<Flags> enumerate_active_sets(const Flags& capped) {
  std::vector<unsigned> masks;
  unsigned all = 0;
  for (std::size_t j = 0; j < kGenerators; ++j) {
    if (capped[j]) all |= 1u << j;
  }
  for (unsigned m = 0; m < 16u; ++m) {
    if ((m & ~all) == 0) masks.push_back(m);
  }
  std::stable_sort(masks.begin(), masks.end(),
                   [](unsigned x, unsigned y) { return std::popcount(x) < std::popcount(y); });
  std::vector<Flags> out;
  for (unsigned m : masks) {
    Flags f{};
    for (std::size_t j = 0; j < kGenerators; ++j) f[j] = (m >> j) & 1u;
    out.push_back(f);
  }
  return out;
}

namespace detail {

inline std::vector<std::size_t> active_indices(const Flags& active) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < kGenerators; ++j) {
    if (active[j]) idx.push_back(j);
  }
  return idx;
}

/// Spot KKT system in the normalized form: unit diagonal, 1/2 off-diagonal,
/// multiplier column 1/(2e), then one pinning row per active constraint.
inline Eigen::MatrixXd spot_matrix(double e, const Flags& active) {
  const auto act = active_indices(active);
  const auto n = static_cast<Eigen::Index>(kGenerators + act.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < 4; ++j) {
    for (Eigen::Index i = 0; i < 4; ++i) m(j, i) = i == j ? 1.0 : 0.5;
  }
  for (std::size_t a = 0; a < act.size(); ++a) {
    const auto row = static_cast<Eigen::Index>(kGenerators + a);
    const auto j = static_cast<Eigen::Index>(act[a]);
    m(j, row) = 1.0 / (2.0 * e);
    m(row, j) = 1.0;
  }
  return m;
}

/// Day-ahead system: f_j + (3/5) sum f + (5/e) lambda_j = rhs_j.
inline Eigen::MatrixXd day_ahead_matrix(double e, const Flags& active) {
  const auto act = active_indices(active);
  const auto n = static_cast<Eigen::Index>(kGenerators + act.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < 4; ++j) {
    for (Eigen::Index i = 0; i < 4; ++i) m(j, i) = (i == j ? 1.0 : 0.0) + 0.6;
  }
  for (std::size_t a = 0; a < act.size(); ++a) {
    const auto row = static_cast<Eigen::Index>(kGenerators + a);
    const auto j = static_cast<Eigen::Index>(act[a]);
    m(j, row) = 5.0 / e;
    m(row, j) = 1.0;
  }
  return m;
}

struct ActiveSetSolution {
  PerGenerator x{};
  PerGenerator lambda{};
  Flags active{};
};

/// Tries each active set in order and returns the first whose multipliers are
/// nonnegative and whose inactive constraints hold.
template <class MatrixFn>
ActiveSetSolution solve_active_set(MatrixFn&& matrix, const PerGenerator& rhs, const Caps& bound,
                                   double quantity_scale, double price_scale,
                                   const std::string& what) {
  Flags capped{};
  for (std::size_t j = 0; j < kGenerators; ++j) capped[j] = bound[j].has_value();
  const double qtol = 1e-10 * std::max(1.0, quantity_scale);
  const double ltol = 1e-10 * std::max(1.0, price_scale);
  for (const auto& active : enumerate_active_sets(capped)) {
    const auto act = active_indices(active);
    const Eigen::MatrixXd m = matrix(active);
    Eigen::VectorXd b(m.rows());
    for (Eigen::Index j = 0; j < 4; ++j) b(j) = rhs[static_cast<std::size_t>(j)];
    for (std::size_t a = 0; a < act.size(); ++a) {
      b(static_cast<Eigen::Index>(kGenerators + a)) = *bound[act[a]];
    }
    const Eigen::VectorXd u = m.fullPivLu().solve(b);
    ActiveSetSolution sol;
    sol.active = active;
    bool ok = true;
    for (std::size_t j = 0; j < kGenerators; ++j) sol.x[j] = u(static_cast<Eigen::Index>(j));
    for (std::size_t a = 0; a < act.size(); ++a) {
      const double lambda = u(static_cast<Eigen::Index>(kGenerators + a));
      ok = ok && lambda >= -ltol;
      sol.lambda[act[a]] = std::max(0.0, lambda);
    }
    for (std::size_t j = 0; j < kGenerators; ++j) {
      if (bound[j] && !active[j]) ok = ok && sol.x[j] <= *bound[j] + qtol;
    }
    if (ok) return sol;
  }
  throw SolverError(ErrorKind::InfeasibleActiveSet,
                    "no active set of the " + what + " satisfies the KKT sign conditions");
}

}  // namespace detail

/// Constants of the both-binding closed form for the zone's importer pair.
inline BindingConstants binding_constants(const ZoneGame& game) {
  const double e = game.elasticity;
  const double d = game.demand;
  const double sum_f = game.forward_total();
  const double sum_c = game.cost_total();
  BindingConstants out;
  out.gamma_price = (d + sum_c - e * sum_f) / 5.0;
  for (std::size_t j = 0; j < kGenerators; ++j) {
    out.gamma[j] = (d - 5.0 * game.cost[j] + sum_c - e * sum_f) / (5.0 * e);
  }
  const auto imp = importers_into(game.zone);
  const auto m = imp[0].index(), n = imp[1].index();
  const double km = game.cap[m].value_or(0.0), kn = game.cap[n].value_or(0.0);
  const double fm = game.forward[m], fn = game.forward[n];
  out.lambda[0] = -(e / 3.0) * (4.0 * km + kn - 4.0 * fm - fn - 4.0 * out.gamma[m] - out.gamma[n]);
  out.lambda[1] = -(e / 3.0) * (4.0 * kn + km - 4.0 * fn - fm - 4.0 * out.gamma[n] - out.gamma[m]);
  const auto loc = locals_of(game.zone);
  const double alpha = game.cost[loc[0].index()];
  const double local_forward = game.forward[loc[0].index()] + game.forward[loc[1].index()];
  out.price_constant = (d + 2.0 * alpha - e * local_forward) / 3.0;
  out.local_constant = ((d - alpha) / e - local_forward) / 3.0;
  return out;
}

/// Clears one zone's spot game by active-set enumeration.
inline ConstrainedSpotSolution solve_spot(const ZoneGame& game, std::size_t scenario = 0) {
  const double e = game.elasticity;
  for (auto id : GeneratorId::all()) {
    checked_quantity(game.forward[id.index()], "day-ahead sales", id);
  }
  const double sum_f = game.forward_total();
  PerGenerator rhs{};
  for (std::size_t j = 0; j < kGenerators; ++j) {
    rhs[j] = (game.demand - e * sum_f - game.cost[j]) / (2.0 * e);
  }
  Caps spot_bound{};
  for (std::size_t j = 0; j < kGenerators; ++j) {
    if (game.cap[j]) spot_bound[j] = *game.cap[j] - game.forward[j];
  }
  const auto solved = detail::solve_active_set(
      [&](const Flags& a) { return detail::spot_matrix(e, a); }, rhs, spot_bound,
      std::abs(game.demand) / e, std::abs(game.demand), "spot game");

  ConstrainedSpotSolution sol;
  sol.zone = game.zone;
  sol.scenario = scenario;
  sol.demand = game.demand;
  sol.elasticity = e;
  sol.cost = game.cost;
  sol.forward = game.forward;
  sol.cap = game.cap;
  sol.active = solved.active;
  sol.multiplier = solved.lambda;

  // Closed form with the multipliers folded into effective costs; pinned
  // players take their bound exactly.
  PerGenerator eff{};
  for (std::size_t j = 0; j < kGenerators; ++j) eff[j] = game.cost[j] + sol.multiplier[j];
  const double sum_eff = std::accumulate(eff.begin(), eff.end(), 0.0);
  sol.c_term = (game.demand + sum_eff) / 5.0;
  for (std::size_t j = 0; j < kGenerators; ++j) {
    sol.r[j] = (game.demand - 5.0 * eff[j] + sum_eff) / (5.0 * e);
    const double y = sol.active[j] ? *spot_bound[j] : sol.r[j] - sum_f / 5.0;
    sol.spot[j] = checked_quantity(y, "spot sales", GeneratorId::from_index(j),
                                   std::abs(game.demand) / e);
  }
  sol.total_sales = 0.0;
  for (std::size_t j = 0; j < kGenerators; ++j) sol.total_sales += sol.forward[j] + sol.spot[j];
  sol.price = sol.demand - sol.elasticity * sol.total_sales;

  const auto imp = importers_into(game.zone);
  if (sol.active[imp[0].index()] && sol.active[imp[1].index()]) sol.binding = binding_constants(game);
  return sol;
}

/// Spot clearing of scenario `s` in `zone` given day-ahead sales into it.
inline ConstrainedSpotSolution spot_clearing(const Model1Instance& inst, const PerGenerator& forward,
                                             std::size_t s, Zone zone = Zone::A) {
  if (s >= inst.scenarios.size()) {
    throw SolverError(ErrorKind::InvalidCase, "scenario " + std::to_string(s) + " out of range");
  }
  return solve_spot(make_zone_game(inst, zone, inst.scenarios[s].demand(zone), forward, inst.capacity),
                    s);
}

/// Derivatives of price and spot sales with respect to the cap of `m`, exact
/// within the solution's active set. Zero when m's constraint is slack.
struct CapSensitivity {
  double price = 0.0;
  PerGenerator spot{};
};

inline CapSensitivity cap_sensitivity(const ConstrainedSpotSolution& sol, GeneratorId m) {
  CapSensitivity out;
  if (!sol.active[m.index()]) return out;
  const auto act = detail::active_indices(sol.active);
  const Eigen::MatrixXd mat = detail::spot_matrix(sol.elasticity, sol.active);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(mat.rows());
  for (std::size_t a = 0; a < act.size(); ++a) {
    if (act[a] == m.index()) b(static_cast<Eigen::Index>(kGenerators + a)) = 1.0;
  }
  const Eigen::VectorXd u = mat.fullPivLu().solve(b);
  double total = 0.0;
  for (std::size_t j = 0; j < kGenerators; ++j) {
    out.spot[j] = u(static_cast<Eigen::Index>(j));
    total += out.spot[j];
  }
  out.price = -sol.elasticity * total;
  return out;
}

/// Day-ahead stage of one zone.
struct ZoneDayAhead {
  Zone zone = Zone::A;
  double beta = 0.0;
  PerGenerator forward{};
  /// Multipliers of f_j <= K_j, scaled as true multipliers of expected profit.
  PerGenerator multiplier{};
  Flags active{};
  /// Expected spot multipliers the stage was solved against.
  PerGenerator spot_multiplier{};
};

struct DayAheadInputs {
  Zone zone = Zone::A;
  double mean_demand = 0.0;
  double elasticity = 1.0;
  PerGenerator cost{};
  Caps cap{};
  PerGenerator spot_multiplier{};
  double beta = 0.0;
};

/// Solves f_j + (3/5) sum f + (5/e) lambda1_j = 3 rbar_j + 5 beta / e, where
/// rbar_j carries the expected spot multipliers as extra cost.
inline ZoneDayAhead solve_day_ahead(const DayAheadInputs& in) {
  const double e = in.elasticity;
  PerGenerator eff{};
  for (std::size_t j = 0; j < kGenerators; ++j) eff[j] = in.cost[j] + in.spot_multiplier[j];
  const double sum_eff = std::accumulate(eff.begin(), eff.end(), 0.0);
  PerGenerator rhs{};
  for (std::size_t j = 0; j < kGenerators; ++j) {
    const double rbar = (in.mean_demand - 5.0 * eff[j] + sum_eff) / (5.0 * e);
    rhs[j] = 3.0 * rbar + 5.0 * in.beta / e;
  }
  const auto solved = detail::solve_active_set(
      [&](const Flags& a) { return detail::day_ahead_matrix(e, a); }, rhs, in.cap,
      std::abs(in.mean_demand) / e, std::abs(in.mean_demand), "day-ahead game");
  ZoneDayAhead out;
  out.zone = in.zone;
  out.beta = in.beta;
  out.active = solved.active;
  out.multiplier = solved.lambda;
  out.spot_multiplier = in.spot_multiplier;
  for (std::size_t j = 0; j < kGenerators; ++j) {
    out.forward[j] = checked_quantity(solved.x[j], "day-ahead sales", GeneratorId::from_index(j),
                                      std::abs(in.mean_demand) / e);
    if (out.active[j]) out.forward[j] = *in.cap[j];
  }
  return out;
}

/// Closed-form day-ahead sales in role order (locals first, then importers),
/// with the beta and day-ahead multiplier weights of the matrix system.
inline PerGenerator day_ahead_closed_form(const DayAheadInputs& in, const PerGenerator& lambda1) {
  const double e = in.elasticity;
  const auto loc = locals_of(in.zone);
  const auto imp = importers_into(in.zone);
  const double alpha = in.cost[loc[0].index()];
  const double c = in.cost[imp[0].index()];
  const double d = in.mean_demand;
  const double l0m = in.spot_multiplier[imp[0].index()], l0n = in.spot_multiplier[imp[1].index()];
  const double l1m = lambda1[imp[0].index()], l1n = lambda1[imp[1].index()];
  PerGenerator f{};
  const double local = (3.0 * (d - 9.0 * alpha + 8.0 * c + 4.0 * (l0m + l0n)) +
                        15.0 * (l1m + l1n) + 25.0 * in.beta) / (17.0 * e);
  f[loc[0].index()] = local;
  f[loc[1].index()] = local;
  auto importer = [&](double own0, double rival0, double own1, double rival1) {
    return (3.0 * (d - 9.0 * c + 8.0 * alpha - 13.0 * own0 + 4.0 * rival0) - 70.0 * own1 +
            15.0 * rival1 + 25.0 * in.beta) / (17.0 * e);
  };
  f[imp[0].index()] = importer(l0m, l0n, l1m, l1n);
  f[imp[1].index()] = importer(l0n, l0m, l1n, l1m);
  return f;
}

/// Closed forms with the published coefficients (3 on the day-ahead multipliers,
/// 5 on beta, 4 lambda_4 inside the locals' bracket). Used by the formula audit.
inline PerGenerator published_day_ahead_closed_form(const DayAheadInputs& in,
                                                    const PerGenerator& lambda1) {
  const double e = in.elasticity;
  const auto loc = locals_of(in.zone);
  const auto imp = importers_into(in.zone);
  const double alpha = in.cost[loc[0].index()];
  const double c = in.cost[imp[0].index()];
  const double d = in.mean_demand;
  const double l0m = in.spot_multiplier[imp[0].index()], l0n = in.spot_multiplier[imp[1].index()];
  const double l1m = lambda1[imp[0].index()], l1n = lambda1[imp[1].index()];
  PerGenerator f{};
  const double local = (3.0 * (d - 9.0 * alpha + 8.0 * c + 4.0 * (l0m + 4.0 * l0n)) +
                        3.0 * (l1m + l1n) + 5.0 * in.beta) / (17.0 * e);
  f[loc[0].index()] = local;
  f[loc[1].index()] = local;
  auto importer = [&](double own0, double rival0, double own1, double rival1) {
    return (3.0 * (d - 9.0 * c + 8.0 * alpha - 13.0 * own0 + 4.0 * rival0) - 14.0 * own1 +
            3.0 * rival1 + 5.0 * in.beta) / (17.0 * e);
  };
  f[imp[0].index()] = importer(l0m, l0n, l1m, l1n);
  f[imp[1].index()] = importer(l0n, l0m, l1n, l1m);
  return f;
}

inline constexpr double kFixedPointDamping = 0.5;
inline constexpr double kMinDamping = 1.0 / 64.0;
inline constexpr int kFixedPointCap = 200;
inline constexpr double kFixedPointTolerance = 1e-9;

struct ZoneSolution {
  Zone zone = Zone::A;
  double beta = 0.0;
  double mean_demand = 0.0;
  ZoneDayAhead day_ahead;
  std::vector<ConstrainedSpotSolution> spot;
  std::vector<double> probability;
  PerGenerator mean_spot_multiplier{};
  int iterations = 0;
  double expected_price = 0.0;
  /// Expected spot price plus beta; flagged when negative.
  double day_ahead_price = 0.0;
  bool day_ahead_price_ok = true;

  double expected_spot(GeneratorId id) const {
    double v = 0.0;
    for (std::size_t s = 0; s < spot.size(); ++s) v += probability[s] * spot[s].spot[id.index()];
    return v;
  }
};

inline DayAheadInputs day_ahead_inputs(const Model1Instance& inst, Zone zone, double beta,
                                       const PerGenerator& capacity) {
  DayAheadInputs in;
  in.zone = zone;
  in.mean_demand = inst.scenarios.mean_demand(zone);
  in.elasticity = inst.zone(zone).elasticity;
  in.cost = delivered_costs(inst, zone);
  in.cap = import_caps(zone, capacity);
  in.beta = beta;
  return in;
}

/// Day-ahead and spot equilibrium of one zone at arbitrage margin `beta`.
inline ZoneSolution solve_zone(const Model1Instance& inst, Zone zone, double beta,
                               const PerGenerator& capacity) {
  auto in = day_ahead_inputs(inst, zone, beta, capacity);
  ZoneSolution out;
  out.zone = zone;
  out.beta = beta;
  out.mean_demand = in.mean_demand;
  for (const auto& sc : inst.scenarios.scenarios) out.probability.push_back(sc.probability);

  PerGenerator lambda{};
  PerGenerator last_step{};
  double damping = kFixedPointDamping;
  for (int it = 1; it <= kFixedPointCap; ++it) {
    in.spot_multiplier = lambda;
    auto da = solve_day_ahead(in);
    auto spot = parallel_map<ConstrainedSpotSolution>(inst.scenarios.size(), [&](std::size_t s) {
      return solve_spot(make_zone_game(inst, zone, inst.scenarios[s].demand(zone), da.forward, capacity), s);
    });
    PerGenerator next{};
    for (std::size_t s = 0; s < spot.size(); ++s) {
      for (std::size_t j = 0; j < kGenerators; ++j) next[j] += out.probability[s] * spot[s].multiplier[j];
    }
    double change = 0.0;
    for (std::size_t j = 0; j < kGenerators; ++j) change = std::max(change, std::abs(next[j] - lambda[j]));
    if (change < kFixedPointTolerance) {
      out.day_ahead = std::move(da);
      out.spot = std::move(spot);
      out.mean_spot_multiplier = lambda;
      out.iterations = it;
      out.expected_price = 0.0;
      for (std::size_t s = 0; s < out.spot.size(); ++s) {
        out.expected_price += out.probability[s] * out.spot[s].price;
      }
      out.day_ahead_price = out.expected_price + beta;
      out.day_ahead_price_ok = out.day_ahead_price >= 0.0;
      return out;
    }
    // Residuals that reverse direction mean the damped map overshoots; the
    // step is halved until it contracts.
    double turn = 0.0;
    for (std::size_t j = 0; j < kGenerators; ++j) turn += (next[j] - lambda[j]) * last_step[j];
    if (turn < 0.0) damping = std::max(kMinDamping, 0.5 * damping);
    for (std::size_t j = 0; j < kGenerators; ++j) {
      last_step[j] = next[j] - lambda[j];
      lambda[j] += damping * last_step[j];
    }
  }
  throw SolverError(ErrorKind::NoConvergence, "multiplier fixed point of zone " +
                                                  std::string(to_string(zone)) + " did not settle after " +
                                                  std::to_string(kFixedPointCap) + " iterations");
}

inline ZoneSolution solve_zone(const Model1Instance& inst, Zone zone, double beta) {
  return solve_zone(inst, zone, beta, inst.capacity);
}

inline ZoneSolution solve_zone(const Model1Instance& inst, Zone zone) {
  return solve_zone(inst, zone, inst.day_ahead(zone).mean_beta(inst.scenarios, zone));
}

struct DayAheadSolution {
  PerGenerator f{};  // into A
  PerGenerator g{};  // into B
  PerGenerator multiplier_a{};
  PerGenerator multiplier_b{};
  double expected_price_a = 0.0;
  double expected_price_b = 0.0;
};

struct Model1Solution {
  ZoneSolution a;
  ZoneSolution b;

  const ZoneSolution& zone(Zone z) const { return z == Zone::A ? a : b; }

  DayAheadSolution day_ahead() const {
    return DayAheadSolution{a.day_ahead.forward, b.day_ahead.forward, a.day_ahead.multiplier,
                            b.day_ahead.multiplier, a.day_ahead_price, b.day_ahead_price};
  }
};

/// Both zones at their configured day-ahead intercepts. Zones are independent.
inline Model1Solution solve_model1(const Model1Instance& inst) {
  require_valid(inst);
  return Model1Solution{solve_zone(inst, Zone::A), solve_zone(inst, Zone::B)};
}

inline DayAheadSolution day_ahead_clearing(const Model1Instance& inst) {
  return solve_model1(inst).day_ahead();
}

/// Expected surplus: consumer integral minus production and import costs and
/// the arbitrage payment on day-ahead volume, inside the expectation.
inline double zone_welfare(const ZoneSolution& sol) {
  double z = 0.0;
  for (std::size_t s = 0; s < sol.spot.size(); ++s) {
    const auto& sp = sol.spot[s];
    const double x = sp.total_sales;
    double cost = 0.0;
    double sum_f = 0.0;
    for (std::size_t j = 0; j < kGenerators; ++j) {
      cost += sp.cost[j] * (sp.forward[j] + sp.spot[j]);
      sum_f += sp.forward[j];
    }
    const double beta_s = sol.beta;
    z += sol.probability[s] * (sp.demand * x - 0.5 * sp.elasticity * x * x - cost - beta_s * sum_f);
  }
  return z;
}

inline double social_welfare(const Model1Instance& inst, double beta, Zone zone = Zone::A) {
  return zone_welfare(solve_zone(inst, zone, beta));
}

/// Welfare-optimal beta: sum of import costs S = alpha_local + alpha_foreign + eta,
/// summed expected spot multipliers and day-ahead multipliers of the importers.
inline double closed_form_beta(double mean_demand, double elasticity, double cost_sum, double spot_lambda,
                            double day_ahead_lambda) {
  const double e = elasticity;
  return (mean_demand * (e - 12.0) + cost_sum * (8.0 * e - 4.0) + spot_lambda * (4.0 * e + 3.0) +
          day_ahead_lambda * (0.6 * e + 3.0)) /
         (4.0 * e + 40.0);
}

enum class ElasticityCase { Inelastic, Elastic, Unit };

/// Limit forms of the optimal day-ahead intercept.
inline double case_day_ahead_intercept(ElasticityCase c, double mean_demand, double cost_sum,
                                       double spot_lambda, double day_ahead_lambda) {
  switch (c) {
    case ElasticityCase::Inelastic:
      return (28.0 * mean_demand - 4.0 * cost_sum + 3.0 * (spot_lambda + day_ahead_lambda)) / 40.0;
    case ElasticityCase::Elastic:
      return (5.0 * mean_demand + 8.0 * cost_sum + 4.0 * spot_lambda + 0.6 * day_ahead_lambda) / 4.0;
    case ElasticityCase::Unit:
      return (33.0 * mean_demand + 4.0 * cost_sum + 7.0 * spot_lambda + 3.6 * day_ahead_lambda) / 44.0;
  }
  return 0.0;
}

struct OptimalBeta {
  double beta = 0.0;
  double day_ahead_intercept = 0.0;
  double welfare = 0.0;
  /// Central-difference slope of welfare at `beta`.
  double slope = 0.0;
  double closed_form_beta = 0.0;
  double closed_form_intercept = 0.0;
  double gap = 0.0;
  double search_lo = 0.0;
  double search_hi = 0.0;
  ZoneSolution solution;
};

struct BetaSearch {
  std::optional<double> lo;
  std::optional<double> hi;
  double tolerance = 1e-8;
  int samples = 64;
};

/// Numeric welfare maximizer over beta on the part of the bracket where the
/// equilibrium stays in the model's validity regime.
inline OptimalBeta optimal_beta(const Model1Instance& inst, Zone zone = Zone::A,
                                const BetaSearch& search = {}) {
  require_valid(inst);
  const double dbar = inst.scenarios.mean_demand(zone);
  const double lo = search.lo.value_or(-std::abs(dbar));
  const double hi = search.hi.value_or(std::abs(dbar));
  if (!(hi > lo)) throw SolverError(ErrorKind::NoBracket, "empty beta search interval");

  auto welfare_at = [&](double beta) -> std::optional<double> {
    try {
      return zone_welfare(solve_zone(inst, zone, beta));
    } catch (const SolverError& err) {
      if (err.kind() == ErrorKind::NegativeQuantity) return std::nullopt;
      throw;
    }
  };

  const int n = std::max(3, search.samples);
  std::vector<double> grid(static_cast<std::size_t>(n) + 1);
  std::vector<std::optional<double>> value(grid.size());
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid[k] = lo + (hi - lo) * static_cast<double>(k) / n;
    value[k] = welfare_at(grid[k]);
    if (value[k] && (!best || *value[k] > *value[*best])) best = k;
  }
  if (!best) throw SolverError(ErrorKind::NoBracket, "no beta in the search interval yields a valid equilibrium");

  // Contiguous feasible run around the best sample, edges refined by bisection.
  std::size_t left = *best, right = *best;
  while (left > 0 && value[left - 1]) --left;
  while (right + 1 < grid.size() && value[right + 1]) ++right;
  auto refine = [&](double inside, double outside) {
    for (int k = 0; k < 60; ++k) {
      const double mid = 0.5 * (inside + outside);
      (welfare_at(mid) ? inside : outside) = mid;
    }
    return inside;
  };
  const double a = left > 0 ? refine(grid[left], grid[left - 1]) : grid[left];
  const double b = right + 1 < grid.size() ? refine(grid[right], grid[right + 1]) : grid[right];

  auto objective = [&](double beta) {
    auto w = welfare_at(beta);
    return w ? *w : -std::numeric_limits<double>::infinity();
  };
  const auto max = oracle::maximize_1d(objective, a, b, search.tolerance);
  const double edge_tol = 1e-6 * std::max(1.0, b - a);
  if (max.argmax - a < edge_tol || b - max.argmax < edge_tol) {
    throw SolverError(ErrorKind::NoBracket, "welfare is monotone over the beta search interval");
  }

  OptimalBeta out;
  out.beta = max.argmax;
  out.day_ahead_intercept = dbar + out.beta;
  out.solution = solve_zone(inst, zone, out.beta);
  out.welfare = zone_welfare(out.solution);
  out.slope = oracle::fd_derivative(objective, out.beta);
  out.search_lo = a;
  out.search_hi = b;

  const auto imp = importers_into(zone);
  const double e = inst.zone(zone).elasticity;
  const double cost_sum = inst.zone(zone).marginal_cost + inst.zone(other(zone)).marginal_cost +
                          inst.congestion_cost;
  double l0 = 0.0, l1 = 0.0;
  for (auto id : imp) {
    l0 += out.solution.mean_spot_multiplier[id.index()];
    l1 += out.solution.day_ahead.multiplier[id.index()];
  }
  out.closed_form_beta = closed_form_beta(dbar, e, cost_sum, l0, l1);
  out.closed_form_intercept = dbar + out.closed_form_beta;
  out.gap = out.beta - out.closed_form_beta;
  return out;
}

/// Only generator 1 (or the zone's first local) sells day-ahead; everyone else
/// waits for the spot market.
struct DilemmaReport {
  double f_1 = 0.0;
  double beta = 0.0;
  double mean_price = 0.0;
  /// Expected profits from the closed forms, evaluated per scenario.
  double pi_1 = 0.0;
  double pi_2 = 0.0;
  /// Pi_2 - Pi_1.
  double gap = 0.0;
  /// f_1 (q + beta): the identity the gap is claimed to equal.
  double stated_gap = 0.0;
  /// f_1 (q - alpha + beta): what Pi_1 - Pi_2 reduces to.
  double entrant_advantage = 0.0;
  /// Profits from direct evaluation of the cleared spot market.
  double direct_pi_1 = 0.0;
  double direct_pi_2 = 0.0;
};

inline DilemmaReport prisoner_dilemma_check(const Model1Instance& inst, double f_1, Zone zone = Zone::A) {
  require_valid(inst);
  const auto loc = locals_of(zone);
  const auto i1 = loc[0].index(), i2 = loc[1].index();
  PerGenerator forward{};
  forward[i1] = checked_quantity(f_1, "day-ahead sales", loc[0]);
  DilemmaReport r;
  r.f_1 = forward[i1];
  r.beta = inst.day_ahead(zone).mean_beta(inst.scenarios, zone);
  const double e = inst.zone(zone).elasticity;
  const double alpha = inst.zone(zone).marginal_cost;
  for (std::size_t s = 0; s < inst.scenarios.size(); ++s) {
    const double p = inst.scenarios[s].probability;
    const auto sp = spot_clearing(inst, forward, s, zone);
    const double margin = sp.c_term - alpha - (e / 5.0) * r.f_1;
    r.pi_1 += p * (sp.r[i1] + 0.8 * r.f_1) * margin;
    r.pi_2 += p * (sp.r[i2] - 0.2 * r.f_1) * margin;
    r.mean_price += p * sp.price;
    r.direct_pi_1 += p * ((sp.price - alpha) * sp.production(loc[0]));
    r.direct_pi_2 += p * ((sp.price - alpha) * sp.production(loc[1]));
  }
  r.pi_1 += r.beta * r.f_1;
  r.direct_pi_1 += r.beta * r.f_1;
  r.gap = r.pi_2 - r.pi_1;
  r.stated_gap = r.f_1 * (r.mean_price + r.beta);
  r.entrant_advantage = r.f_1 * (r.mean_price - alpha + r.beta);
  return r;
}

/// Offsetting cross-border sales settled financially instead of flowing.
struct Netting {
  double netted = 0.0;
  double payment_a = 0.0;
  double payment_b = 0.0;
  double residual = 0.0;
  /// Direction of the residual physical flow; nullopt when it is zero.
  std::optional<Zone> residual_into;
};

/// x_ab: sold from A into B, x_ba: sold from B into A.
inline Netting export_netting(double x_ab, double x_ba, double price_a, double price_b) {
  checked_quantity(x_ab, "exports from A");
  checked_quantity(x_ba, "exports from B");
  Netting n;
  n.netted = std::min(x_ab, x_ba);
  n.payment_a = n.netted * price_a;
  n.payment_b = n.netted * price_b;
  n.residual = std::abs(x_ab - x_ba);
  if (x_ba > x_ab) n.residual_into = Zone::A;
  if (x_ab > x_ba) n.residual_into = Zone::B;
  return n;
}

}  // namespace ptrmarket
