#pragma once

// Oracle-backed regression suites. The oracles below solve each game by
// projected best response with numeric 1-D maximization and share no algebra
// with the closed forms they check.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ptrmarket/coupled_market.hpp"
#include "ptrmarket/duopoly_av.hpp"
#include "ptrmarket/equilibrium_oracle.hpp"
#include "ptrmarket/ptr_exchange.hpp"

namespace ptrmarket::verify {

inline constexpr double kOracleTolerance = 1e-7;
inline constexpr double kKktTolerance = 1e-7;
inline constexpr double kDerivativeTolerance = 1e-6;

/// Spot game of the asymmetric duopoly given day-ahead sales.
inline std::vector<double> av_spot_oracle(const av::AvParams& p, double f_1, double f_2,
                                          std::vector<double> start = {}) {
  oracle::GameSpec game;
  const double hi = 10.0 * p.demand_intercept / p.elasticity;
  game.search_upper = hi;
  game.tolerance = 1e-12;
  game.profits = {[=](std::span<const double> x) { return av::spot_profit(p, 1, x[0], x[1], f_1, f_2); },
                  [=](std::span<const double> x) { return av::spot_profit(p, 2, x[0], x[1], f_1, f_2); }};
  if (start.empty()) start = {f_1, f_2};
  return oracle::best_response(game, start).actions;
}

/// Day-ahead game: each generator picks f_i against the spot equilibrium it
/// induces, which the inner oracle finds afresh for every candidate f.
inline std::vector<double> av_day_ahead_oracle(const av::AvParams& p) {
  std::vector<double> warm;
  auto inner = [&](double f_1, double f_2) {
    warm = av_spot_oracle(p, f_1, f_2, warm);
    return warm;
  };
  auto payoff = [&, p](int who, std::span<const double> f) {
    const auto x = inner(f[0], f[1]);
    const double q = p.price(x[0] + x[1]);
    return who == 1 ? (q - p.cost_1) * x[0] : (q - p.cost_2) * x[1];
  };
  oracle::GameSpec game;
  game.search_upper = 10.0 * p.demand_intercept / p.elasticity;
  game.tolerance = 1e-10;
  game.profits = {[&](std::span<const double> f) { return payoff(1, f); },
                  [&](std::span<const double> f) { return payoff(2, f); }};
  return oracle::best_response(game, {0.0, 0.0}).actions;
}

/// Projected best response on a zone's spot game; importers' boxes end at
/// their remaining rights.
inline std::vector<double> zone_spot_oracle(const ZoneGame& g, std::vector<double> start = {}) {
  oracle::GameSpec game;
  game.search_upper = 10.0 * g.demand / g.elasticity;
  game.tolerance = 1e-12;
  for (std::size_t j = 0; j < kGenerators; ++j) {
    game.profits.push_back([g, j](std::span<const double> y) { return zone_spot_profit(g, j, y); });
    oracle::Box box;
    if (g.cap[j]) box.upper = std::max(0.0, *g.cap[j] - g.forward[j]);
    game.boxes.push_back(box);
  }
  if (start.empty()) start.assign(kGenerators, 0.0);
  return oracle::best_response(game, start).actions;
}

/// Two-stage oracle for one zone with no rights constraints: generators pick
/// day-ahead sales against the expected outcome of the per-scenario spot
/// games, paid the expected spot price plus `beta` on day-ahead volume.
/// `forward_cap` bounds day-ahead sales only; the spot games stay uncapped.
inline PerGenerator zone_day_ahead_oracle(const Model1Instance& inst, Zone zone, double beta,
                                          const PerGenerator& extra_cost = {}, const Caps& forward_cap = {}) {
  const auto cost = delivered_costs(inst, zone);
  PerGenerator eff{};
  for (std::size_t j = 0; j < kGenerators; ++j) eff[j] = cost[j] + extra_cost[j];
  const auto& scen = inst.scenarios;
  std::vector<std::vector<double>> warm(scen.size());
  auto payoff = [&](std::size_t who, std::span<const double> f) {
    double u = 0.0;
    for (std::size_t s = 0; s < scen.size(); ++s) {
      ZoneGame g{zone, scen[s].demand(zone), inst.zone(zone).elasticity, eff, {}, {}};
      std::copy(f.begin(), f.end(), g.forward.begin());
      warm[s] = zone_spot_oracle(g, warm[s]);
      double total = 0.0;
      for (std::size_t j = 0; j < kGenerators; ++j) total += f[j] + warm[s][j];
      const double q = g.demand - g.elasticity * total;
      u += scen[s].probability * (q - eff[who]) * (warm[s][who] + f[who]);
    }
    return u + beta * f[who];
  };
  oracle::GameSpec game;
  const double dmax = std::max(scen.mean_demand(zone), 1.0);
  game.search_upper = 10.0 * dmax / inst.zone(zone).elasticity;
  game.tolerance = 1e-10;
  for (std::size_t j = 0; j < kGenerators; ++j) {
    game.profits.push_back([&, j](std::span<const double> f) { return payoff(j, f); });
    oracle::Box box;
    if (forward_cap[j]) box.upper = *forward_cap[j];
    game.boxes.push_back(box);
  }
  const auto res = oracle::best_response(game, std::vector<double>(kGenerators, 0.0));
  PerGenerator out{};
  std::copy(res.actions.begin(), res.actions.end(), out.begin());
  return out;
}

inline oracle::KktProblem spot_kkt_problem(const ZoneGame& g) {
  oracle::KktProblem p;
  for (std::size_t j = 0; j < kGenerators; ++j) {
    p.profits.push_back([g, j](std::span<const double> y) { return zone_spot_profit(g, j, y); });
    p.caps.push_back(g.cap[j] ? std::optional<double>(*g.cap[j] - g.forward[j]) : std::nullopt);
  }
  return p;
}

inline ZoneGame game_of(const ConstrainedSpotSolution& sp) {
  return ZoneGame{sp.zone, sp.demand, sp.elasticity, sp.cost, sp.forward, sp.cap};
}

inline oracle::KktReport spot_kkt(const ConstrainedSpotSolution& sp, const PerGenerator& multipliers,
                                  double tol = kKktTolerance) {
  return oracle::kkt_check(spot_kkt_problem(game_of(sp)), sp.spot, multipliers, tol);
}

struct SuiteReport {
  std::string name;
  unsigned long long seed = 0;
  int cases = 0;
  double max_error = 0.0;
  std::vector<std::string> failures;
  /// Cases per active-set pattern of the importer constraints.
  std::vector<int> coverage;

  bool passed() const { return failures.empty() && cases > 0; }
  void fail(std::string why) { failures.push_back(std::move(why)); }
};

/// Random two-zone instance with interior spot solutions.
inline Model1Instance random_instance(std::mt19937_64& rng, std::size_t scenarios = 1) {
  std::uniform_real_distribution<double> demand(15.0, 30.0), slope(0.5, 2.0), cost(1.0, 4.0), eta(0.0, 2.0);
  Model1Instance inst;
  inst.a = ZoneSpec{slope(rng), cost(rng), std::nullopt};
  inst.b = ZoneSpec{slope(rng), cost(rng), std::nullopt};
  inst.congestion_cost = eta(rng);
  for (std::size_t s = 0; s < scenarios; ++s) {
    inst.scenarios.scenarios.push_back(Scenario{demand(rng), demand(rng), 1.0 / static_cast<double>(scenarios)});
  }
  inst.capacity = {1e6, 1e6, 1e6, 1e6};
  inst.total_capacity = 4e6;
  return inst;
}

/// Rights chosen relative to the unconstrained spot sales so that the zone's
/// two importer constraints follow `pattern`: bit k set means importer k binds.
inline void shape_rights(Model1Instance& inst, Zone zone, const PerGenerator& forward, unsigned pattern) {
  auto loose = make_zone_game(inst, zone, inst.scenarios[0].demand(zone), forward, inst.capacity);
  for (auto& c : loose.cap) c.reset();
  const auto free = solve_spot(loose);
  const auto imp = importers_into(zone);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto m = imp[k].index();
    inst.capacity[m] = forward[m] + free.spot[m] * (((pattern >> k) & 1u) ? 0.5 : 1.6);
  }
  double sum = 0.0;
  for (double k : inst.capacity) sum += k;
  inst.total_capacity = sum;
}

inline PerGenerator random_forward(std::mt19937_64& rng, double hi = 1.0) {
  std::uniform_real_distribution<double> u(0.0, hi);
  return {u(rng), u(rng), u(rng), u(rng)};
}

inline SuiteReport av_suite(unsigned long long seed, int n = 100) {
  SuiteReport rep{"av", seed, 0, 0.0, {}, {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> demand(10.0, 30.0), slope(0.5, 2.0), cost(0.5, 3.0), frac(0.0, 0.3);
  for (int k = 0; k < n; ++k) {
    av::AvParams p{demand(rng), slope(rng), cost(rng), cost(rng)};
    const double f_1 = frac(rng) * (p.demand_intercept / p.elasticity) / 3.0;
    const double f_2 = frac(rng) * (p.demand_intercept / p.elasticity) / 3.0;
    try {
      const auto spot = av::spot_equilibrium(p, f_1, f_2);
      const auto ref = av_spot_oracle(p, f_1, f_2);
      const double err = std::max(std::abs(spot.x_1 - ref[0]), std::abs(spot.x_2 - ref[1]));
      rep.max_error = std::max(rep.max_error, err);
      if (err > kOracleTolerance) rep.fail("case " + std::to_string(k) + ": spot sales off by " + std::to_string(err));
      if (spot.price != p.demand_intercept - p.elasticity * (spot.x_1 + spot.x_2)) {
        rep.fail("case " + std::to_string(k) + ": spot price breaks the clearing identity");
      }
      if (k % 5 == 0) {
        const auto eq = av::day_ahead_equilibrium(p);
        const auto fref = av_day_ahead_oracle(p);
        const double ferr = std::max(std::abs(eq.f_1 - fref[0]), std::abs(eq.f_2 - fref[1]));
        rep.max_error = std::max(rep.max_error, ferr);
        if (ferr > kOracleTolerance) {
          rep.fail("case " + std::to_string(k) + ": day-ahead sales off by " + std::to_string(ferr));
        }
      }
      ++rep.cases;
    } catch (const SolverError& e) {
      rep.fail("case " + std::to_string(k) + ": " + e.what());
    }
  }
  return rep;
}

inline SuiteReport spot_suite(unsigned long long seed, int n = 50) {
  SuiteReport rep{"spot", seed, 0, 0.0, {}, {}};
  std::mt19937_64 rng(seed);
  for (int k = 0; k < n; ++k) {
    auto inst = random_instance(rng);
    const auto f = random_forward(rng);
    try {
      shape_rights(inst, Zone::A, f, static_cast<unsigned>(k % 4));
      const auto sp = spot_clearing(inst, f, 0);
      const auto ref = zone_spot_oracle(make_zone_game(inst, Zone::A, sp.demand, f, inst.capacity));
      double err = 0.0;
      for (std::size_t j = 0; j < kGenerators; ++j) err = std::max(err, std::abs(sp.spot[j] - ref[j]));
      rep.max_error = std::max(rep.max_error, err);
      if (err > kOracleTolerance) rep.fail("case " + std::to_string(k) + ": spot sales off by " + std::to_string(err));
      if (sp.price != sp.demand - sp.elasticity * sp.total_sales) {
        rep.fail("case " + std::to_string(k) + ": price breaks the clearing identity");
      }
      ++rep.cases;
    } catch (const SolverError& e) {
      rep.fail("case " + std::to_string(k) + ": " + e.what());
    }
  }
  return rep;
}

inline SuiteReport kkt_suite(unsigned long long seed, int n = 50) {
  SuiteReport rep{"kkt", seed, 0, 0.0, {}, {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sign(-1.0, 1.0);
  for (int k = 0; k < n; ++k) {
    auto inst = random_instance(rng);
    const auto f = random_forward(rng);
    try {
      shape_rights(inst, Zone::A, f, static_cast<unsigned>(k % 4));
      const auto sp = spot_clearing(inst, f, 0);
      const auto imp = importers_into(sp.zone);
      rep.coverage.resize(4);
      ++rep.coverage[(sp.active[imp[0].index()] ? 1u : 0u) | (sp.active[imp[1].index()] ? 2u : 0u)];
      const auto r = spot_kkt(sp, sp.multiplier);
      rep.max_error = std::max(rep.max_error, r.worst());
      if (!r.passed) rep.fail("case " + std::to_string(k) + ": KKT residual " + std::to_string(r.worst()));
      if (sp.binding) {
        PerGenerator lam{};
        lam[imp[0].index()] = sp.binding->lambda[0];
        lam[imp[1].index()] = sp.binding->lambda[1];
        const auto rb = spot_kkt(sp, lam);
        if (!rb.passed) rep.fail("case " + std::to_string(k) + ": closed-form multipliers fail KKT");
      }
      // A perturbed point must be rejected.
      auto bad = sp;
      for (auto& y : bad.spot) y += 1e-2 * (sign(rng) > 0.0 ? 1.0 : -1.0);
      if (spot_kkt(bad, sp.multiplier).passed) rep.fail("case " + std::to_string(k) + ": perturbed point passed KKT");
      ++rep.cases;
    } catch (const SolverError& e) {
      rep.fail("case " + std::to_string(k) + ": " + e.what());
    }
  }
  return rep;
}

/// Session state with a prescribed binding pattern in each zone, rejecting
/// draws that sit within 1e-3 of a kink.
inline std::optional<SessionState> random_session(std::mt19937_64& rng, unsigned pattern_a, unsigned pattern_b) {
  auto inst = random_instance(rng);
  const auto f = random_forward(rng), g = random_forward(rng);
  SessionState st;
  st.f = f;
  st.g = g;
  try {
    shape_rights(inst, Zone::A, f, pattern_a);
    const auto keep = inst.capacity;
    shape_rights(inst, Zone::B, g, pattern_b);
    inst.capacity[2] = keep[2];
    inst.capacity[3] = keep[3];
    inst.total_capacity = std::accumulate(inst.capacity.begin(), inst.capacity.end(), 0.0);
    st.instance = inst;
    st.allocation.primary = inst.capacity;
    st.allocation.total = inst.total_capacity;
    const auto out = clear_session(st);
    for (auto id : GeneratorId::all()) {
      const auto& sp = out.zone(id.export_zone());
      const double lam = sp.multiplier[id.index()];
      const double slack = sp.slack(id);
      if (sp.active[id.index()] ? lam < 1e-3 : slack < 1e-3) return std::nullopt;
    }
  } catch (const SolverError&) {
    return std::nullopt;
  }
  return st;
}

inline double fd_cap_derivative(const SessionState& st, GeneratorId i, GeneratorId m) {
  auto profit_at = [&](double k) {
    SessionState probe = st;
    probe.allocation.primary[m.index()] = k;
    return ptr_profit(probe)[i.index()];
  };
  return oracle::fd_derivative(profit_at, st.allocation.primary[m.index()]);
}

inline SuiteReport derivative_suite(unsigned long long seed, int n = 200) {
  SuiteReport rep{"derivatives", seed, 0, 0.0, {}, {}};
  std::mt19937_64 rng(seed);
  int attempts = 0;
  while (rep.cases < n && attempts < 20 * n) {
    const auto pattern = static_cast<unsigned>(attempts++);
    auto st = random_session(rng, pattern % 4, (pattern / 4) % 4);
    if (!st) continue;
    const auto out = clear_session(*st);
    unsigned mask = 0;
    for (auto id : GeneratorId::all()) mask |= out.zone(id.export_zone()).active[id.index()] ? 1u << id.index() : 0u;
    rep.coverage.resize(16);
    ++rep.coverage[mask];
    for (auto i : GeneratorId::all()) {
      for (auto m : GeneratorId::all()) {
        const double a = profit_cap_derivative(out, i, m);
        const double fd = fd_cap_derivative(*st, i, m);
        const double err = std::abs(a - fd) / std::max(1.0, std::abs(a));
        rep.max_error = std::max(rep.max_error, err);
        if (err > kDerivativeTolerance) {
          rep.fail("state " + std::to_string(rep.cases) + ": dPi_" + std::to_string(i.number()) + "/dK_" +
                   std::to_string(m.number()) + " analytic " + std::to_string(a) + " vs " + std::to_string(fd));
        }
      }
    }
    ++rep.cases;
  }
  return rep;
}

}  // namespace ptrmarket::verify
