#pragma once

// Transmission-rights market: the uniform-price primary auction, a secondary
// trading session driven by marginal price bounds, withholding detection and
// the regulatory levers (UIOLI, UIOSI, congestion charge).

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptrmarket/coupled_market.hpp"
#include "ptrmarket/equilibrium_oracle.hpp"
#include "ptrmarket/errors.hpp"
#include "ptrmarket/market_model.hpp"
#include "ptrmarket/parallel.hpp"

namespace ptrmarket {

struct Bid {
  GeneratorId bidder{1};
  double quantity = 0.0;
  double price = 0.0;
};

struct AuctionResult {
  std::vector<double> accepted;  // parallel to the bid list
  double price = 0.0;
  double unallocated = 0.0;
  PerGenerator awarded{};

  double total_accepted() const { return std::accumulate(accepted.begin(), accepted.end(), 0.0); }
};

/// Highest prices win; the marginal price level is shared pro rata by
/// quantity; undersubscription clears at zero. With K = 0 nothing is awarded
/// and the price is the highest bid.
inline AuctionResult primary_auction(const std::vector<Bid>& bids, double capacity) {
  if (!(capacity >= 0.0)) throw ConfigError(ErrorKind::Validation, "auction capacity must be nonnegative");
  for (std::size_t k = 0; k < bids.size(); ++k) {
    const auto& b = bids[k];
    if (!b.bidder.valid() || !(b.quantity > 0.0) || !(b.price >= 0.0)) {
      throw ConfigError(ErrorKind::Validation,
                        "bid " + std::to_string(k) + " needs a valid bidder, positive quantity and nonnegative price");
    }
  }
  AuctionResult out;
  out.accepted.assign(bids.size(), 0.0);
  double demand = 0.0;
  for (const auto& b : bids) demand += b.quantity;

  if (demand <= capacity) {
    for (std::size_t k = 0; k < bids.size(); ++k) out.accepted[k] = bids[k].quantity;
    out.price = 0.0;
  } else {
    std::vector<std::size_t> order(bids.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return bids[x].price > bids[y].price; });
    out.price = bids[order.front()].price;
    double remaining = capacity;
    std::size_t k = 0;
    while (k < order.size() && remaining > 0.0) {
      const double level = bids[order[k]].price;
      std::size_t end = k;
      double level_quantity = 0.0;
      while (end < order.size() && bids[order[end]].price == level) level_quantity += bids[order[end++]].quantity;
      const double share = std::min(1.0, remaining / level_quantity);
      for (std::size_t t = k; t < end; ++t) {
        out.accepted[order[t]] = share < 1.0 ? bids[order[t]].quantity * share : bids[order[t]].quantity;
      }
      remaining = share < 1.0 ? 0.0 : remaining - level_quantity;
      out.price = level;
      k = end;
    }
  }
  for (std::size_t k = 0; k < bids.size(); ++k) out.awarded[bids[k].bidder.index()] += out.accepted[k];
  out.unallocated = std::max(0.0, capacity - out.total_accepted());
  return out;
}

enum class PolicyMode { None, Uioli, Uiosi };

constexpr std::string_view to_string(PolicyMode m) {
  switch (m) {
    case PolicyMode::None: return "none";
    case PolicyMode::Uioli: return "uioli";
    case PolicyMode::Uiosi: return "uiosi";
  }
  return "none";
}

inline std::optional<PolicyMode> parse_policy(std::string_view s) {
  if (s == "none") return PolicyMode::None;
  if (s == "uioli") return PolicyMode::Uioli;
  if (s == "uiosi") return PolicyMode::Uiosi;
  return std::nullopt;
}

struct PolicyConfig {
  PolicyMode mode = PolicyMode::None;
  double eta = 0.0;
  std::vector<double> eta_grid;
};

struct Trade {
  GeneratorId buyer{1};
  GeneratorId seller{2};
  double quantity = 0.0;
  double price = 0.0;
  /// Price in the buyer's export zone after the trade.
  double price_after = 0.0;
};

/// Rights and day-ahead commitments at the spot stage of one scenario.
struct SessionState {
  Model1Instance instance;
  PtrAllocation allocation;
  std::size_t scenario = 0;
  PerGenerator f{};  // day-ahead sales into A
  PerGenerator g{};  // day-ahead sales into B
  /// Settled day-ahead prices, credited on f and g.
  double settled_price_a = 0.0;
  double settled_price_b = 0.0;
  /// Net payments received in secondary trades.
  PerGenerator cash{};
  std::vector<Trade> trades;
  Flags withheld{};
  PolicyMode policy = PolicyMode::None;

  /// Day-ahead sales generator `id` already made abroad.
  double committed(GeneratorId id) const {
    return id.home() == Zone::A ? g[id.index()] : f[id.index()];
  }
  const PerGenerator& forward(Zone z) const { return z == Zone::A ? f : g; }
};

inline ValidationReport validate(const SessionState& st) {
  auto report = validate(st.instance);
  const auto k = st.allocation.holdings();
  double sum = 0.0;
  for (auto id : GeneratorId::all()) {
    const double held = k[id.index()];
    sum += held;
    if (held < -kQuantityTolerance) {
      report.violations.push_back("rights of generator " + std::to_string(id.number()) + " must be nonnegative");
    }
    if (held < st.committed(id) - kQuantityTolerance) {
      report.violations.push_back("rights of generator " + std::to_string(id.number()) +
                                  " must cover its day-ahead exports");
    }
  }
  if (sum > st.allocation.total * (1.0 + 1e-12) + kQuantityTolerance) {
    report.violations.emplace_back("rights must not exceed the interconnector capacity");
  }
  if (st.scenario >= st.instance.scenarios.size()) report.violations.emplace_back("scenario out of range");
  return report;
}

/// Spot clearing of both zones under the current holdings.
struct PtrOutcome {
  ConstrainedSpotSolution a;
  ConstrainedSpotSolution b;
  PerGenerator profit{};

  const ConstrainedSpotSolution& zone(Zone z) const { return z == Zone::A ? a : b; }
};

inline PtrOutcome clear_session(const SessionState& st) {
  const auto k = st.allocation.holdings();
  const auto& sc = st.instance.scenarios[st.scenario];
  PtrOutcome out;
  out.a = solve_spot(make_zone_game(st.instance, Zone::A, sc.demand_a, st.f, k), st.scenario);
  out.b = solve_spot(make_zone_game(st.instance, Zone::B, sc.demand_b, st.g, k), st.scenario);
  for (auto id : GeneratorId::all()) {
    const auto j = id.index();
    out.profit[j] = out.a.spot_profit(id) + out.b.spot_profit(id) + st.settled_price_a * st.f[j] +
                    st.settled_price_b * st.g[j];
  }
  return out;
}

/// Realized profit of every generator at the session's scenario, payments excluded.
inline PerGenerator ptr_profit(const SessionState& st) { return clear_session(st).profit; }

/// dPi_i / dK_m, exact within the active set of the zone m exports into.
inline double profit_cap_derivative(const PtrOutcome& out, GeneratorId i, GeneratorId m) {
  const auto& sp = out.zone(m.export_zone());
  const auto sens = cap_sensitivity(sp, m);
  const auto j = i.index();
  return sens.price * sp.spot[j] + (sp.price - sp.cost[j]) * sens.spot[j];
}

inline double profit_cap_derivative(const SessionState& st, GeneratorId i, GeneratorId m) {
  return profit_cap_derivative(clear_session(st), i, m);
}

/// Highest unit price buyer i pays for rights that would otherwise go to j.
inline double buyer_max_price(const PtrOutcome& out, GeneratorId i, GeneratorId j) {
  return profit_cap_derivative(out, i, i) - profit_cap_derivative(out, i, j);
}

/// Lowest unit price seller j accepts for rights that go to i.
inline double seller_min_price(const PtrOutcome& out, GeneratorId j, GeneratorId i) {
  return profit_cap_derivative(out, j, j) - profit_cap_derivative(out, j, i);
}

inline double buyer_max_price(const SessionState& st, GeneratorId i, GeneratorId j) {
  return buyer_max_price(clear_session(st), i, j);
}

inline double seller_min_price(const SessionState& st, GeneratorId j, GeneratorId i) {
  return seller_min_price(clear_session(st), j, i);
}

/// Marginal profit of seller j if made to use delta_k more of its rights,
/// per unit: q - e (delta_k + x_j) - c_j in its export zone.
inline double uiosi_marginal_use(const PtrOutcome& out, GeneratorId j, double delta_k) {
  const auto& sp = out.zone(j.export_zone());
  return sp.price - sp.elasticity * (delta_k + sp.production(j)) - sp.cost[j.index()];
}

inline double uiosi_seller_floor(const PtrOutcome& out, GeneratorId j, GeneratorId i, double delta_k) {
  return uiosi_marginal_use(out, j, delta_k) - profit_cap_derivative(out, j, i);
}

inline double uiosi_seller_floor(const SessionState& st, GeneratorId j, GeneratorId i, double delta_k) {
  return uiosi_seller_floor(clear_session(st), j, i, delta_k);
}

inline constexpr double kSlackTolerance = 1e-9;
inline constexpr double kTradeSurplus = 1e-9;
inline constexpr double kRationalityTolerance = 1e-9;

inline double unused_rights(const PtrOutcome& out, const SessionState& st, GeneratorId id) {
  return st.allocation.held(id) - out.zone(id.export_zone()).production(id);
}

inline bool holds_unused(const PtrOutcome& out, const SessionState& st, GeneratorId id) {
  return unused_rights(out, st, id) > kSlackTolerance;
}

/// UIOSI binds only on a block the seller leaves entirely unused and only
/// toward a buyer whose rights constraint binds; anything else trades on
/// unregulated terms.
inline bool uiosi_applies(const PtrOutcome& out, const SessionState& st, GeneratorId buyer, GeneratorId seller,
                          double delta_k) {
  return st.policy == PolicyMode::Uiosi && out.zone(buyer.export_zone()).active[buyer.index()] &&
         holds_unused(out, st, seller) && unused_rights(out, st, seller) >= delta_k - kSlackTolerance;
}

/// Quote for i buying from j. Under UIOSI a seller with unused rights quotes
/// its regulated floor instead of the unregulated one.
inline TradeQuote trade_quote(const PtrOutcome& out, const SessionState& st, GeneratorId i, GeneratorId j,
                              double delta_k = 0.0) {
  TradeQuote q;
  q.buyer = i;
  q.seller = j;
  q.buyer_max = buyer_max_price(out, i, j);
  q.seller_min = uiosi_applies(out, st, i, j, delta_k)
                     ? std::min(seller_min_price(out, j, i), uiosi_seller_floor(out, j, i, delta_k))
                     : seller_min_price(out, j, i);
  q.feasible = q.seller_min <= q.buyer_max;
  return q;
}

inline TradeQuote trade_quote(const SessionState& st, GeneratorId i, GeneratorId j) {
  return trade_quote(clear_session(st), st, i, j);
}

/// Moves delta_k rights from seller to buyer at `price` without any checks.
inline SessionState execute_trade(SessionState st, GeneratorId buyer, GeneratorId seller, double delta_k,
                                  double price) {
  st.allocation.secondary[buyer.index()] += delta_k;
  st.allocation.secondary[seller.index()] -= delta_k;
  st.cash[buyer.index()] -= price * delta_k;
  st.cash[seller.index()] += price * delta_k;
  const auto after = clear_session(st);
  st.trades.push_back(Trade{buyer, seller, delta_k, price, after.zone(buyer.export_zone()).price});
  return st;
}

inline bool worth_trading(const TradeQuote& q) { return q.feasible && q.surplus() > kTradeSurplus; }

struct WithholdingReport {
  Flags flagged{};
  /// (holder, blocked) for every flag: the constrained generator that could
  /// not buy the holder's unused rights.
  std::vector<std::pair<GeneratorId, GeneratorId>> blocked;
  std::vector<std::string> diagnostics;
  /// Closed-form predictor on the zone-A importers.
  bool predicted = false;
  double predictor_lhs = 0.0;
  double predictor_rhs = 0.0;

  bool any() const { return std::any_of(flagged.begin(), flagged.end(), [](bool b) { return b; }); }
};

/// 3D + e[36 f1 + 36 f2 + 2 f4 + 14 f3] < 39 (alpha_B + eta) - 36 alpha_A.
inline bool withholding_predictor(double demand, double elasticity, const PerGenerator& f, double alpha_a,
                                  double import_cost, double* lhs = nullptr, double* rhs = nullptr) {
  const double l = 3.0 * demand + elasticity * (36.0 * f[0] + 36.0 * f[1] + 2.0 * f[3] + 14.0 * f[2]);
  const double r = 39.0 * import_cost - 36.0 * alpha_a;
  if (lhs) *lhs = l;
  if (rhs) *rhs = r;
  return l < r;
}

inline WithholdingReport detect_withholding(const PtrOutcome& out, const SessionState& st) {
  WithholdingReport rep;
  for (auto g : GeneratorId::all()) {
    if (!holds_unused(out, st, g)) continue;
    for (auto h : GeneratorId::all()) {
      if (h == g) continue;
      if (!out.zone(h.export_zone()).active[h.index()]) continue;
      const auto q = trade_quote(out, st, h, g);
      if (worth_trading(q)) continue;
      rep.flagged[g.index()] = true;
      rep.blocked.emplace_back(g, h);
      rep.diagnostics.push_back("generator " + std::to_string(g.number()) + " holds " +
                                std::to_string(st.allocation.held(g) - out.zone(g.export_zone()).production(g)) +
                                " unused while generator " + std::to_string(h.number()) +
                                " is constrained; buyer max " + std::to_string(q.buyer_max) + ", seller min " +
                                std::to_string(q.seller_min));
      break;
    }
  }
  const auto& inst = st.instance;
  rep.predicted = withholding_predictor(inst.scenarios[st.scenario].demand_a, inst.a.elasticity, st.f,
                                        inst.a.marginal_cost, inst.b.marginal_cost + inst.congestion_cost,
                                        &rep.predictor_lhs, &rep.predictor_rhs);
  return rep;
}

inline WithholdingReport detect_withholding(const SessionState& st) {
  return detect_withholding(clear_session(st), st);
}

/// Cycle: the holdings returned to an allocation already visited. Myopic
/// trades have side effects on third parties, so they can circulate rights.
enum class StopReason { NoFeasiblePair, AllSlack, Cycle };

struct SessionResult {
  SessionState state;
  StopReason stop = StopReason::NoFeasiblePair;
  WithholdingReport withholding;
  /// Rights revoked and re-auctioned under UIOLI.
  double revoked = 0.0;
  std::optional<AuctionResult> resale;
};

inline std::size_t trade_guard(double total, double delta_k) {
  return static_cast<std::size_t>(std::ceil(total / delta_k)) * 64u;
}

namespace detail {

/// One pass over ordered pairs; executes the first individually rational trade.
inline bool try_one_trade(SessionState& st, const PtrOutcome& before, double delta_k) {
  for (auto buyer : GeneratorId::all()) {
    // Under UIOSI rights bought to be left unused would have to be resold, so
    // only constrained generators buy.
    if (st.policy == PolicyMode::Uiosi && !before.zone(buyer.export_zone()).active[buyer.index()]) continue;
    for (auto seller : GeneratorId::all()) {
      if (buyer == seller) continue;
      if (st.allocation.held(seller) - delta_k < st.committed(seller) - kQuantityTolerance) continue;
      const auto q = trade_quote(before, st, buyer, seller, delta_k);
      if (!worth_trading(q)) continue;
      const double price = q.midpoint();
      SessionState next;
      PtrOutcome after;
      try {
        next = execute_trade(st, buyer, seller, delta_k, price);
        after = clear_session(next);
      } catch (const SolverError&) {
        continue;
      }
      const auto b = buyer.index(), s = seller.index();
      const bool buyer_gains = after.profit[b] + next.cash[b] >= before.profit[b] + st.cash[b] - kRationalityTolerance;
      bool seller_gains = after.profit[s] + next.cash[s] >= before.profit[s] + st.cash[s] - kRationalityTolerance;
      // Under UIOSI the seller is compared with being made to use the rights.
      if (uiosi_applies(before, st, buyer, seller, delta_k)) seller_gains = true;
      if (!buyer_gains || !seller_gains) continue;
      st = std::move(next);
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Trades delta_k blocks at quote midpoints until no ordered pair has a
/// feasible, individually rational trade. Flags withholding at the end.
inline SessionResult secondary_session(SessionState st, double delta_k) {
  if (!(delta_k > 0.0)) throw ConfigError(ErrorKind::Validation, "trade step must be positive");
  auto report = validate(st);
  if (!report.ok()) throw ConfigError(ErrorKind::Validation, report.joined());
  const std::size_t guard = trade_guard(std::max(st.allocation.total, delta_k), delta_k);
  SessionResult res;
  std::size_t count = 0;
  auto key = [&](const SessionState& s) {
    std::array<long long, kGenerators> k{};
    for (auto id : GeneratorId::all()) k[id.index()] = std::llround(s.allocation.held(id) / delta_k * 1024.0);
    return k;
  };
  std::set<std::array<long long, kGenerators>> visited{key(st)};
  for (;;) {
    const auto before = clear_session(st);
    bool any_active = false;
    for (auto id : GeneratorId::all()) any_active = any_active || before.zone(id.export_zone()).active[id.index()];
    if (!any_active) {
      res.stop = StopReason::AllSlack;
      break;
    }
    if (!detail::try_one_trade(st, before, delta_k)) {
      res.stop = StopReason::NoFeasiblePair;
      break;
    }
    if (!visited.insert(key(st)).second) {
      res.stop = StopReason::Cycle;
      break;
    }
    if (++count > guard) {
      throw SolverError(ErrorKind::NonTermination,
                        "secondary session exceeded " + std::to_string(guard) + " trades");
    }
  }
  auto out = clear_session(st);
  if (st.policy == PolicyMode::Uioli) {
    // Unused rights are revoked and offered to constrained generators, each
    // bidding its marginal valuation for the volume it would still use.
    for (auto id : GeneratorId::all()) {
      const double unused = st.allocation.held(id) - out.zone(id.export_zone()).production(id);
      if (unused > kSlackTolerance) {
        st.allocation.secondary[id.index()] -= unused;
        res.revoked += unused;
      }
    }
    if (res.revoked > 0.0) {
      out = clear_session(st);
      std::vector<Bid> bids;
      for (auto id : GeneratorId::all()) {
        const auto& sp = out.zone(id.export_zone());
        if (!sp.active[id.index()]) continue;
        auto loose = make_zone_game(st.instance, id.export_zone(), sp.demand, st.forward(id.export_zone()),
                                    st.allocation.holdings());
        loose.cap[id.index()].reset();
        const double desired = solve_spot(loose).spot[id.index()] + sp.forward[id.index()];
        const double want = desired - st.allocation.held(id);
        const double value = profit_cap_derivative(out, id, id);
        if (want > kSlackTolerance) bids.push_back(Bid{id, want, std::max(0.0, value)});
      }
      res.resale = primary_auction(bids, res.revoked);
      for (auto id : GeneratorId::all()) {
        st.allocation.secondary[id.index()] += res.resale->awarded[id.index()];
        st.cash[id.index()] -= res.resale->price * res.resale->awarded[id.index()];
      }
      out = clear_session(st);
    }
  }
  res.withholding = detect_withholding(out, st);
  st.withheld = res.withholding.flagged;
  res.state = std::move(st);
  return res;
}

/// Cross-zone trade condition when all four constraints bind and each zone's
/// exporters hold equal rights: K_B <= (e_B/e_A) K_A + bracket / (2 e_A).
inline bool cross_zone_trade_condition(const SessionState& st, GeneratorId i, GeneratorId j) {
  if (i.home() != Zone::B || j.home() != Zone::A) {
    throw SolverError(ErrorKind::InvalidCase, "buyer must be located in B and seller in A");
  }
  const auto out = clear_session(st);
  for (auto id : GeneratorId::all()) {
    if (!out.zone(id.export_zone()).active[id.index()]) {
      throw SolverError(ErrorKind::InvalidCase, "all four rights constraints must bind");
    }
  }
  const auto k = st.allocation.holdings();
  const double tol = 1e-9 * std::max(1.0, st.allocation.total);
  if (std::abs(k[0] - k[1]) > tol || std::abs(k[2] - k[3]) > tol) {
    throw SolverError(ErrorKind::InvalidCase, "exporters of each zone must hold equal rights");
  }
  const auto& inst = st.instance;
  const double ea = inst.a.elasticity, eb = inst.b.elasticity;
  const auto& sc = inst.scenarios[st.scenario];
  const double k_a = k[0], k_b = k[2];
  const double bracket = sc.demand_a - sc.demand_b + 17.0 * (inst.a.marginal_cost - inst.b.marginal_cost) +
                         ea * (7.0 * (st.f[0] + st.f[1]) + 3.0 * st.f[2]) -
                         eb * (7.0 * (st.g[2] + st.g[3]) + 3.0 * st.g[0]);
  return k_b <= (eb / ea) * k_a + bracket / (2.0 * ea);
}

/// Holding that maximizes Pi_i(K_i) - price K_i with the other holdings fixed,
/// searched on [committed, room left under the interconnector cap].
inline double strategic_holding(const SessionState& st, GeneratorId i, double price) {
  const double others = st.allocation.sum_held() - st.allocation.held(i);
  const double lo = st.committed(i);
  const double hi = std::max(lo, st.allocation.total - others);
  auto value = [&](double t) {
    SessionState probe = st;
    probe.allocation.secondary[i.index()] = 0.0;
    probe.allocation.primary[i.index()] = t;
    return ptr_profit(probe)[i.index()] - price * t;
  };
  if (hi - lo < kQuantityTolerance) return lo;
  return oracle::maximize_1d(value, lo, hi, 1e-10).argmax;
}

/// Day-ahead commitments consistent with the current holdings.
inline SessionState make_session(const Model1Instance& inst, const PtrAllocation& alloc, std::size_t scenario,
                                 PolicyMode policy = PolicyMode::None) {
  Model1Instance with_k = inst;
  with_k.capacity = alloc.holdings();
  with_k.total_capacity = alloc.total;
  SessionState st;
  st.instance = with_k;
  st.allocation = alloc;
  st.scenario = scenario;
  st.policy = policy;
  const auto sol = solve_model1(with_k);
  st.f = sol.a.day_ahead.forward;
  st.g = sol.b.day_ahead.forward;
  st.settled_price_a = sol.a.day_ahead_price;
  st.settled_price_b = sol.b.day_ahead_price;
  return st;
}

struct EtaIncidence {
  double eta = 0.0;
  int simulated = 0;
  int predicted = 0;
  int evaluated = 0;

  double incidence() const { return evaluated > 0 ? static_cast<double>(simulated) / evaluated : 0.0; }
};

struct EtaSearchResult {
  double best_eta = 0.0;
  std::vector<EtaIncidence> table;
};

/// A session to be rebuilt from scratch: day-ahead commitments are re-solved
/// whenever the instance changes.
struct SessionSeed {
  Model1Instance instance;
  PtrAllocation allocation;
  std::size_t scenario = 0;
  PolicyMode policy = PolicyMode::None;
};

/// Sets the congestion charge on every seed, re-solves day-ahead and spot
/// stages, replays the sessions and counts those ending with withholding.
/// Ties go to the larger eta.
inline EtaSearchResult eta_policy_search(const std::vector<SessionSeed>& seeds, const std::vector<double>& grid,
                                         double delta_k) {
  if (grid.empty()) throw ConfigError(ErrorKind::Validation, "eta grid must be nonempty");
  EtaSearchResult res;
  for (double eta : grid) {
    auto rows = parallel_map<std::optional<std::pair<bool, bool>>>(seeds.size(), [&](std::size_t k) {
      Model1Instance inst = seeds[k].instance;
      inst.congestion_cost = eta;
      try {
        auto st = make_session(inst, seeds[k].allocation, seeds[k].scenario, seeds[k].policy);
        auto r = secondary_session(st, delta_k);
        return std::optional<std::pair<bool, bool>>({r.withholding.any(), r.withholding.predicted});
      } catch (const Error&) {
        return std::optional<std::pair<bool, bool>>();
      }
    });
    EtaIncidence row;
    row.eta = eta;
    for (const auto& r : rows) {
      if (!r) continue;
      ++row.evaluated;
      row.simulated += r->first ? 1 : 0;
      row.predicted += r->second ? 1 : 0;
    }
    res.table.push_back(row);
  }
  // Incidence is the share of solvable seeds that end in withholding; a grid
  // point where no seed solves has no incidence and cannot win.
  const EtaIncidence* best = nullptr;
  for (const auto& row : res.table) {
    if (row.evaluated == 0) continue;
    if (!best || row.incidence() < best->incidence() ||
        (row.incidence() == best->incidence() && row.eta > best->eta)) {
      best = &row;
    }
  }
  if (!best) throw SolverError(ErrorKind::NonTermination, "no seed solves at any grid point");
  res.best_eta = best->eta;
  return res;
}

}  // namespace ptrmarket
