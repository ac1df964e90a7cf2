#pragma once

// Domain types shared by every solver: zones, generators, demand scenarios,
// capacity holdings and the coupled two-zone instance.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ptrmarket/errors.hpp"

namespace ptrmarket {

inline constexpr std::size_t kGenerators = 4;
using PerGenerator = std::array<double, kGenerators>;

/// Absolute slack below zero tolerated on closed-form quantities before they
/// are reported as negative. Values inside the slack are snapped to zero.
inline constexpr double kQuantityTolerance = 1e-9;

enum class Zone { A, B };

constexpr Zone other(Zone zone) { return zone == Zone::A ? Zone::B : Zone::A; }

constexpr std::string_view to_string(Zone zone) { return zone == Zone::A ? "A" : "B"; }

/// One of the four generators. 1 and 2 are located in zone A, 3 and 4 in B.
/// A generator pays the congestion cost on every unit it sells abroad.
class GeneratorId {
 public:
  constexpr explicit GeneratorId(int number) : number_(number) {}

  static constexpr GeneratorId from_index(std::size_t index) {
    return GeneratorId(static_cast<int>(index) + 1);
  }

  static constexpr std::array<GeneratorId, kGenerators> all() {
    return {GeneratorId(1), GeneratorId(2), GeneratorId(3), GeneratorId(4)};
  }

  constexpr bool valid() const { return number_ >= 1 && number_ <= 4; }
  constexpr int number() const { return number_; }
  constexpr std::size_t index() const { return static_cast<std::size_t>(number_ - 1); }
  constexpr Zone home() const { return number_ <= 2 ? Zone::A : Zone::B; }
  /// The zone this generator needs transmission rights to sell into.
  constexpr Zone export_zone() const { return other(home()); }
  /// The other generator located in the same zone.
  constexpr GeneratorId sibling() const {
    return GeneratorId(number_ % 2 == 1 ? number_ + 1 : number_ - 1);
  }

  friend constexpr bool operator==(GeneratorId, GeneratorId) = default;

 private:
  int number_;
};

/// Importers into a zone are the two generators whose home is the other zone.
constexpr std::array<GeneratorId, 2> importers_into(Zone zone) {
  return zone == Zone::A ? std::array{GeneratorId(3), GeneratorId(4)}
                         : std::array{GeneratorId(1), GeneratorId(2)};
}

constexpr std::array<GeneratorId, 2> locals_of(Zone zone) {
  return importers_into(other(zone));
}

/// Linear inverse demand q(z) = D - e z and the costs faced by the suppliers
/// of one zone.
struct MarketParams {
  double demand_intercept = 0.0;
  double elasticity = 1.0;
  double marginal_cost_local = 0.0;
  double marginal_cost_foreign = 0.0;
  double congestion_cost = 0.0;

  double import_cost() const { return marginal_cost_foreign + congestion_cost; }
  double price(double total_sales) const { return demand_intercept - elasticity * total_sales; }
};

struct Scenario {
  double demand_a = 0.0;
  double demand_b = 0.0;
  double probability = 0.0;

  double demand(Zone zone) const { return zone == Zone::A ? demand_a : demand_b; }
};

/// Probability-weighted spot demand intercepts.
struct ScenarioSet {
  std::vector<Scenario> scenarios;

  std::size_t size() const { return scenarios.size(); }
  bool empty() const { return scenarios.empty(); }
  const Scenario& operator[](std::size_t s) const { return scenarios[s]; }

  double mean_demand(Zone zone) const {
    double sum = 0.0;
    for (const auto& sc : scenarios) sum += sc.probability * sc.demand(zone);
    return sum;
  }

  double total_probability() const {
    double sum = 0.0;
    for (const auto& sc : scenarios) sum += sc.probability;
    return sum;
  }

  static ScenarioSet single(double demand_a, double demand_b) {
    return ScenarioSet{{Scenario{demand_a, demand_b, 1.0}}};
  }
};

/// Day-ahead intercept D^SO for one zone. The arbitrage margin beta is derived.
struct DayAheadSettings {
  double intercept = 0.0;

  double beta(double spot_intercept) const { return intercept - spot_intercept; }
  double mean_beta(const ScenarioSet& set, Zone zone) const {
    return intercept - set.mean_demand(zone);
  }
};

/// Rights held per generator: primary (auctioned) plus signed secondary trades.
struct PtrAllocation {
  PerGenerator primary{};
  PerGenerator secondary{};
  double total = 0.0;

  double held(GeneratorId id) const { return primary[id.index()] + secondary[id.index()]; }
  PerGenerator holdings() const {
    PerGenerator k{};
    for (std::size_t i = 0; i < kGenerators; ++i) k[i] = primary[i] + secondary[i];
    return k;
  }
  double sum_held() const {
    const auto k = holdings();
    return std::accumulate(k.begin(), k.end(), 0.0);
  }
};

/// Quantities entering the welfare of one zone in one scenario.
struct WelfareInputs {
  double total_sales = 0.0;       // x^s
  double local_production = 0.0;  // sold by the zone's own generators
  double imported = 0.0;          // sold by the importers
  double forward_total = 0.0;     // sum of day-ahead sales into the zone
};

/// Price bounds for one marginal unit of rights moving from seller to buyer.
struct TradeQuote {
  GeneratorId buyer{1};
  GeneratorId seller{2};
  double buyer_max = 0.0;
  double seller_min = 0.0;
  bool feasible = false;

  double surplus() const { return buyer_max - seller_min; }
  double midpoint() const { return 0.5 * (buyer_max + seller_min); }
};

struct ZoneSpec {
  double elasticity = 1.0;
  double marginal_cost = 0.0;
  /// D^SO. When absent the zone runs under no-arbitrage (D^SO = mean demand).
  std::optional<double> day_ahead_intercept;
};

/// Two coupled duopolies: generators 1,2 in A and 3,4 in B, one interconnector.
struct Model1Instance {
  ZoneSpec a;
  ZoneSpec b;
  double congestion_cost = 0.0;
  ScenarioSet scenarios;
  /// Rights K_i; generator i may sell at most K_i into its export zone.
  PerGenerator capacity{};
  double total_capacity = 0.0;

  const ZoneSpec& zone(Zone z) const { return z == Zone::A ? a : b; }
  ZoneSpec& zone(Zone z) { return z == Zone::A ? a : b; }

  /// Marginal cost of delivering one unit from generator `id` into `z`.
  double delivered_cost(Zone z, GeneratorId id) const {
    const double base = zone(id.home()).marginal_cost;
    return id.home() == z ? base : base + congestion_cost;
  }

  MarketParams market(Zone z, double demand) const {
    return MarketParams{demand, zone(z).elasticity, zone(z).marginal_cost,
                        zone(other(z)).marginal_cost, congestion_cost};
  }

  DayAheadSettings day_ahead(Zone z) const {
    return DayAheadSettings{zone(z).day_ahead_intercept.value_or(scenarios.mean_demand(z))};
  }
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  bool contains(std::string_view needle) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const std::string& v) { return v.find(needle) != std::string::npos; });
  }
  std::string joined() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += v;
    }
    return out;
  }
};

inline constexpr double kProbabilityTolerance = 1e-12;

inline void validate_scenarios(const ScenarioSet& scen, ValidationReport& report) {
  if (scen.empty()) {
    report.violations.emplace_back("scenario set must be non-empty");
    return;
  }
  bool negative = false;
  for (const auto& s : scen.scenarios) negative = negative || !(s.probability >= 0.0);
  if (negative) report.violations.emplace_back("probabilities must be nonnegative");
  if (!(std::abs(scen.total_probability() - 1.0) <= kProbabilityTolerance)) {
    report.violations.emplace_back("probabilities must sum to 1");
  }
}

inline void validate_market(const MarketParams& params, std::string_view label,
                            ValidationReport& report) {
  const std::string prefix = label.empty() ? "" : std::string(label) + ": ";
  if (!(params.elasticity > 0.0)) {
    report.violations.push_back(prefix + "elasticity must be positive");
  }
  const double ceiling = std::max(params.marginal_cost_local, params.import_cost());
  if (!(params.demand_intercept > ceiling)) {
    report.violations.push_back(prefix + "demand intercept must exceed marginal costs");
  }
}

/// Checks the market and every scenario intercept of `zone` against it.
inline ValidationReport validate(const MarketParams& params, const ScenarioSet& scen,
                                 Zone zone = Zone::A) {
  ValidationReport report;
  validate_market(params, "", report);
  validate_scenarios(scen, report);
  for (std::size_t s = 0; s < scen.size(); ++s) {
    MarketParams at = params;
    at.demand_intercept = scen[s].demand(zone);
    ValidationReport local;
    validate_market(at, "", local);
    if (local.contains("demand intercept")) {
      report.violations.push_back("scenario " + std::to_string(s) +
                                  ": demand intercept must exceed marginal costs");
    }
  }
  return report;
}

inline ValidationReport validate(const Model1Instance& inst) {
  ValidationReport report;
  validate_scenarios(inst.scenarios, report);
  for (Zone z : {Zone::A, Zone::B}) {
    const std::string label = "market " + std::string(to_string(z));
    if (!(inst.zone(z).elasticity > 0.0)) {
      report.violations.push_back(label + ": elasticity must be positive");
    }
    for (std::size_t s = 0; s < inst.scenarios.size(); ++s) {
      const auto params = inst.market(z, inst.scenarios[s].demand(z));
      if (!(params.demand_intercept > std::max(params.marginal_cost_local, params.import_cost()))) {
        report.violations.push_back(label + ", scenario " + std::to_string(s) +
                                    ": demand intercept must exceed marginal costs");
      }
    }
  }
  double held = 0.0;
  for (std::size_t i = 0; i < kGenerators; ++i) {
    if (!(inst.capacity[i] >= 0.0)) {
      report.violations.push_back("capacity of generator " + std::to_string(i + 1) +
                                  " must be nonnegative");
    }
    held += inst.capacity[i];
  }
  if (held > inst.total_capacity * (1.0 + 1e-12) + 1e-12) {
    report.violations.emplace_back("capacities must not exceed the total interconnector capacity");
  }
  return report;
}

inline void require_valid(const Model1Instance& inst) {
  auto report = validate(inst);
  if (!report.ok()) throw ConfigError(ErrorKind::Validation, report.joined());
}

/// Snaps values within tolerance of zero and rejects genuinely negative ones.
inline double checked_quantity(double value, std::string_view what, GeneratorId who,
                               double scale = 1.0) {
  const double tol = kQuantityTolerance * std::max(1.0, std::abs(scale));
  if (value < -tol || std::isnan(value)) {
    throw SolverError(ErrorKind::NegativeQuantity,
                      std::string(what) + " of generator " + std::to_string(who.number()) +
                          " is " + std::to_string(value));
  }
  return value < 0.0 ? 0.0 : value;
}

inline double checked_quantity(double value, std::string_view what, double scale = 1.0) {
  const double tol = kQuantityTolerance * std::max(1.0, std::abs(scale));
  if (value < -tol || std::isnan(value)) {
    throw SolverError(ErrorKind::NegativeQuantity, std::string(what) + " is " + std::to_string(value));
  }
  return value < 0.0 ? 0.0 : value;
}

}  // namespace ptrmarket
