#pragma once

// model.json and bids.json ingestion. Parsing reports the offending line or
// field; a parsed instance is then validated as a whole.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ptrmarket/duopoly_av.hpp"
#include "ptrmarket/errors.hpp"
#include "ptrmarket/market_model.hpp"
#include "ptrmarket/ptr_exchange.hpp"

namespace ptrmarket {

using nlohmann::json;

struct RunConfig {
  Model1Instance instance;
  PolicyConfig policy;
  /// Trade granularity for secondary sessions; defaults to K / 100.
  std::optional<double> trade_step;
  std::optional<av::AvParams> duopoly;

  PtrAllocation allocation() const {
    PtrAllocation a;
    a.primary = instance.capacity;
    a.total = instance.total_capacity;
    return a;
  }
  double step() const {
    return trade_step.value_or(instance.total_capacity > 0.0 ? instance.total_capacity / 100.0 : 1.0);
  }
};

namespace detail {

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(ErrorKind::Parse, "expected an object at " + path);
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(ErrorKind::Parse, "missing field \"" + key + "\" at " + path);
  return *it;
}

inline double number(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = field(obj, key, path);
  if (!v.is_number()) throw ConfigError(ErrorKind::Parse, "field \"" + key + "\" at " + path + " must be a number");
  return v.get<double>();
}

inline std::optional<double> optional_number(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return number(obj, key, path);
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t k = 0; k < text.size() && k + 1 < byte; ++k) line += text[k] == '\n' ? 1 : 0;
  return line;
}

inline json parse_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(ErrorKind::Parse,
                      source + ": line " + std::to_string(line_of(text, e.byte)) + ": malformed JSON");
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ZoneSpec parse_zone(const json& doc, const std::string& name) {
  const std::string path = "markets." + name;
  const auto& z = field(field(doc, "markets", "root"), name, "markets");
  ZoneSpec spec;
  spec.elasticity = number(z, "elasticity", path);
  spec.marginal_cost = number(z, "marginal_cost", path);
  spec.day_ahead_intercept = optional_number(z, "day_ahead_intercept", path);
  return spec;
}

}  // namespace detail

/// Builds a run configuration from a parsed document; does not validate.
inline RunConfig parse_config(const json& doc) {
  using detail::field;
  using detail::number;
  RunConfig cfg;
  auto& inst = cfg.instance;
  inst.a = detail::parse_zone(doc, "A");
  inst.b = detail::parse_zone(doc, "B");
  inst.congestion_cost = detail::optional_number(doc, "congestion_cost", "root").value_or(0.0);

  const auto& scen = field(doc, "scenarios", "root");
  if (!scen.is_array()) throw ConfigError(ErrorKind::Parse, "field \"scenarios\" must be an array");
  for (std::size_t s = 0; s < scen.size(); ++s) {
    const std::string path = "scenarios[" + std::to_string(s) + "]";
    inst.scenarios.scenarios.push_back(
        Scenario{number(scen[s], "D_A", path), number(scen[s], "D_B", path), number(scen[s], "p", path)});
  }

  const auto& caps = field(doc, "capacities", "root");
  inst.total_capacity = number(caps, "total", "capacities");
  for (auto id : GeneratorId::all()) {
    inst.capacity[id.index()] = number(caps, "K_" + std::to_string(id.number()), "capacities");
  }

  if (doc.contains("policy")) {
    const auto& pol = doc.at("policy");
    if (pol.contains("mode")) {
      if (!pol.at("mode").is_string()) throw ConfigError(ErrorKind::Parse, "field \"mode\" at policy must be a string");
      auto mode = parse_policy(pol.at("mode").get<std::string>());
      if (!mode) throw ConfigError(ErrorKind::Parse, "field \"mode\" at policy must be none, uioli or uiosi");
      cfg.policy.mode = *mode;
    }
    cfg.trade_step = detail::optional_number(pol, "trade_step", "policy");
    if (pol.contains("eta_grid")) {
      const auto& grid = pol.at("eta_grid");
      if (!grid.is_array()) throw ConfigError(ErrorKind::Parse, "field \"eta_grid\" at policy must be an array");
      for (const auto& v : grid) {
        if (!v.is_number()) throw ConfigError(ErrorKind::Parse, "entries of policy.eta_grid must be numbers");
        cfg.policy.eta_grid.push_back(v.get<double>());
      }
    }
  }
  cfg.policy.eta = inst.congestion_cost;

  if (doc.contains("duopoly")) {
    const auto& d = doc.at("duopoly");
    cfg.duopoly = av::AvParams{number(d, "D", "duopoly"), number(d, "e", "duopoly"), number(d, "alpha_1", "duopoly"),
                               number(d, "alpha_2", "duopoly")};
  }
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text, const std::string& source = "config") {
  return parse_config(detail::parse_text(text, source));
}

inline void require_valid(const RunConfig& cfg) {
  auto report = validate(cfg.instance);
  if (cfg.duopoly) {
    auto av_report = av::validate(*cfg.duopoly);
    for (auto& v : av_report.violations) report.violations.push_back("duopoly: " + v);
  }
  if (cfg.trade_step && !(*cfg.trade_step > 0.0)) report.violations.emplace_back("trade step must be positive");
  if (!report.ok()) throw ConfigError(ErrorKind::Validation, report.joined());
}

/// Reads, parses and validates a model file.
inline RunConfig load_config(const std::string& path) {
  auto cfg = parse_config_text(detail::read_file(path), path);
  require_valid(cfg);
  return cfg;
}

inline json to_json(const RunConfig& cfg) {
  const auto& inst = cfg.instance;
  auto zone = [](const ZoneSpec& z) {
    json j{{"elasticity", z.elasticity}, {"marginal_cost", z.marginal_cost}};
    if (z.day_ahead_intercept) j["day_ahead_intercept"] = *z.day_ahead_intercept;
    return j;
  };
  json doc;
  doc["markets"] = {{"A", zone(inst.a)}, {"B", zone(inst.b)}};
  doc["congestion_cost"] = inst.congestion_cost;
  doc["scenarios"] = json::array();
  for (const auto& s : inst.scenarios.scenarios) {
    doc["scenarios"].push_back({{"D_A", s.demand_a}, {"D_B", s.demand_b}, {"p", s.probability}});
  }
  json caps{{"total", inst.total_capacity}};
  for (auto id : GeneratorId::all()) caps["K_" + std::to_string(id.number())] = inst.capacity[id.index()];
  doc["capacities"] = caps;
  json pol{{"mode", std::string(to_string(cfg.policy.mode))}};
  if (cfg.trade_step) pol["trade_step"] = *cfg.trade_step;
  if (!cfg.policy.eta_grid.empty()) pol["eta_grid"] = cfg.policy.eta_grid;
  doc["policy"] = pol;
  if (cfg.duopoly) {
    const auto& d = *cfg.duopoly;
    doc["duopoly"] = {{"D", d.demand_intercept}, {"e", d.elasticity}, {"alpha_1", d.cost_1}, {"alpha_2", d.cost_2}};
  }
  return doc;
}

inline std::vector<Bid> parse_bids(const json& doc) {
  if (!doc.is_array()) throw ConfigError(ErrorKind::Parse, "bids must be an array");
  std::vector<Bid> bids;
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const std::string path = "bids[" + std::to_string(k) + "]";
    const auto& b = doc[k];
    const auto& who = detail::field(b, "bidder", path);
    if (!who.is_number_integer()) throw ConfigError(ErrorKind::Parse, "field \"bidder\" at " + path + " must be an integer");
    bids.push_back(Bid{GeneratorId(who.get<int>()), detail::number(b, "quantity", path), detail::number(b, "price", path)});
  }
  return bids;
}

inline std::vector<Bid> load_bids(const std::string& path) {
  const auto text = detail::read_file(path);
  return parse_bids(detail::parse_text(text, path));
}

}  // namespace ptrmarket
