#pragma once

// Deterministic JSON and CSV output. Every double passes through %.12g so
// identical runs produce identical bytes regardless of last-bit noise.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ptrmarket/coupled_market.hpp"
#include "ptrmarket/duopoly_av.hpp"
#include "ptrmarket/errors.hpp"
#include "ptrmarket/ptr_exchange.hpp"

namespace ptrmarket {

using nlohmann::json;

inline std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline double round12(double v) { return v == 0.0 ? 0.0 : std::strtod(fmt(v).c_str(), nullptr); }

/// Copy of `doc` with every float rounded to 12 significant digits. Object
/// keys are already sorted by nlohmann::json's std::map storage.
inline json canonical(const json& doc) {
  if (doc.is_number_float()) return round12(doc.get<double>());
  if (doc.is_array()) {
    json out = json::array();
    for (const auto& v : doc) out.push_back(canonical(v));
    return out;
  }
  if (doc.is_object()) {
    json out = json::object();
    for (auto it = doc.begin(); it != doc.end(); ++it) out[it.key()] = canonical(it.value());
    return out;
  }
  return doc;
}

inline std::string dump_json(const json& doc) { return canonical(doc).dump(2) + "\n"; }

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out += ',';
        out += cells[k];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

inline json per_generator(const PerGenerator& v) {
  json j = json::object();
  for (auto id : GeneratorId::all()) j[std::to_string(id.number())] = v[id.index()];
  return j;
}

inline json to_json(const av::AvEquilibrium& eq) {
  return {{"f_1", eq.f_1}, {"f_2", eq.f_2}, {"x_1", eq.x_1}, {"x_2", eq.x_2}, {"q", eq.price}};
}

inline json to_json(const ConstrainedSpotSolution& sp) {
  json active = json::object();
  for (auto id : GeneratorId::all()) {
    if (sp.cap[id.index()]) active[std::to_string(id.number())] = sp.active[id.index()];
  }
  json j{{"scenario", sp.scenario},  {"zone", std::string(to_string(sp.zone))},
         {"demand", sp.demand},      {"price", sp.price},
         {"total_sales", sp.total_sales}, {"spot", per_generator(sp.spot)},
         {"multiplier", per_generator(sp.multiplier)}, {"binding", active}};
  return j;
}

inline json to_json(const ZoneSolution& z) {
  json spot = json::array();
  for (const auto& sp : z.spot) spot.push_back(to_json(sp));
  return {{"zone", std::string(to_string(z.zone))},
          {"beta", z.beta},
          {"day_ahead", per_generator(z.day_ahead.forward)},
          {"day_ahead_multiplier", per_generator(z.day_ahead.multiplier)},
          {"mean_spot_multiplier", per_generator(z.mean_spot_multiplier)},
          {"expected_price", z.expected_price},
          {"day_ahead_price", z.day_ahead_price},
          {"day_ahead_price_nonnegative", z.day_ahead_price_ok},
          {"iterations", z.iterations},
          {"welfare", zone_welfare(z)},
          {"spot", spot}};
}

inline json to_json(const Model1Solution& s) { return {{"A", to_json(s.a)}, {"B", to_json(s.b)}}; }

/// One row per scenario of a zone: price, spot sales and importer multipliers.
inline CsvTable spot_table(const ZoneSolution& z) {
  const auto imp = importers_into(z.zone);
  CsvTable t;
  t.header = {"s", "p", "q_" + std::string(to_string(z.zone)), "y_1", "y_2", "y_3", "y_4",
              "lambda_" + std::to_string(imp[0].number()), "lambda_" + std::to_string(imp[1].number())};
  for (std::size_t s = 0; s < z.spot.size(); ++s) {
    const auto& sp = z.spot[s];
    t.add({std::to_string(s), fmt(z.probability[s]), fmt(sp.price), fmt(sp.spot[0]), fmt(sp.spot[1]), fmt(sp.spot[2]),
           fmt(sp.spot[3]), fmt(sp.multiplier[imp[0].index()]), fmt(sp.multiplier[imp[1].index()])});
  }
  return t;
}

inline json to_json(const OptimalBeta& o) {
  return {{"beta", o.beta},
          {"day_ahead_intercept", o.day_ahead_intercept},
          {"welfare", o.welfare},
          {"welfare_slope", o.slope},
          {"closed_form_beta", o.closed_form_beta},
          {"closed_form_intercept", o.closed_form_intercept},
          {"gap", o.gap},
          {"search_interval", {o.search_lo, o.search_hi}}};
}

inline json to_json(const DilemmaReport& d) {
  return {{"f_1", d.f_1},
          {"beta", d.beta},
          {"mean_price", d.mean_price},
          {"pi_1", d.pi_1},
          {"pi_2", d.pi_2},
          {"gap", d.gap},
          {"stated_gap", d.stated_gap},
          {"entrant_advantage", d.entrant_advantage},
          {"direct_pi_1", d.direct_pi_1},
          {"direct_pi_2", d.direct_pi_2},
          {"cooperation_stable", !(d.entrant_advantage > 0.0)}};
}

inline json to_json(const AuctionResult& a, const std::vector<Bid>& bids) {
  json rows = json::array();
  for (std::size_t k = 0; k < bids.size(); ++k) {
    rows.push_back({{"bidder", bids[k].bidder.number()},
                    {"quantity", bids[k].quantity},
                    {"price", bids[k].price},
                    {"accepted", a.accepted[k]}});
  }
  return {{"price", a.price}, {"unallocated", a.unallocated}, {"bids", rows}, {"awarded", per_generator(a.awarded)}};
}

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::AllSlack: return "all constraints slack";
    case StopReason::Cycle: return "holdings cycle";
    case StopReason::NoFeasiblePair: break;
  }
  return "no feasible pair";
}

inline json to_json(const WithholdingReport& w) {
  json flagged = json::array();
  for (auto id : GeneratorId::all()) {
    if (w.flagged[id.index()]) flagged.push_back(id.number());
  }
  json blocked = json::array();
  for (const auto& [holder, buyer] : w.blocked) blocked.push_back({{"holder", holder.number()}, {"blocked", buyer.number()}});
  return {{"flagged", flagged},
          {"blocked", blocked},
          {"diagnostics", w.diagnostics},
          {"predicted", w.predicted},
          {"predictor_lhs", w.predictor_lhs},
          {"predictor_rhs", w.predictor_rhs}};
}

inline CsvTable trade_table(const SessionState& st) {
  CsvTable t;
  t.header = {"trade", "buyer", "seller", "delta_K", "price", "q_after"};
  for (std::size_t k = 0; k < st.trades.size(); ++k) {
    const auto& tr = st.trades[k];
    t.add({std::to_string(k + 1), std::to_string(tr.buyer.number()), std::to_string(tr.seller.number()),
           fmt(tr.quantity), fmt(tr.price), fmt(tr.price_after)});
  }
  return t;
}

inline json to_json(const SessionResult& r) {
  json trades = json::array();
  for (const auto& tr : r.state.trades) {
    trades.push_back({{"buyer", tr.buyer.number()},
                      {"seller", tr.seller.number()},
                      {"quantity", tr.quantity},
                      {"price", tr.price},
                      {"q_after", tr.price_after}});
  }
  // Share of held rights actually used; reported only, never enforced.
  const auto cleared = clear_session(r.state);
  json utilization = json::object();
  for (auto id : GeneratorId::all()) {
    const double held = r.state.allocation.held(id);
    const double used = cleared.zone(id.export_zone()).production(id);
    utilization[std::to_string(id.number())] = held > kSlackTolerance ? json(used / held) : json();
  }
  json out{{"scenario", r.state.scenario},
           {"policy", std::string(to_string(r.state.policy))},
           {"utilization", utilization},
           {"stop", to_string(r.stop)},
           {"trades", trades},
           {"holdings", per_generator(r.state.allocation.holdings())},
           {"cash", per_generator(r.state.cash)},
           {"profit", per_generator(cleared.profit)},
           {"withholding", to_json(r.withholding)},
           {"revoked", r.revoked}};
  if (r.resale) out["resale_price"] = r.resale->price;
  return out;
}

inline json to_json(const EtaSearchResult& r) {
  json rows = json::array();
  for (const auto& row : r.table) {
    rows.push_back({{"eta", row.eta},
                    {"withholding", row.simulated},
                    {"predicted", row.predicted},
                    {"evaluated", row.evaluated},
                    {"rate", row.incidence()}});
  }
  return {{"best_eta", r.best_eta}, {"incidence", rows}};
}

}  // namespace ptrmarket
