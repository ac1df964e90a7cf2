// Command-line front end. Model parameters come from one JSON config; flags
// only control the run. Exit codes: 0 ok, 2 config/input, 3 solver, 4 a
// verification suite failed.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ptrmarket/audit.hpp"
#include "ptrmarket/config.hpp"
#include "ptrmarket/coupled_market.hpp"
#include "ptrmarket/duopoly_av.hpp"
#include "ptrmarket/ptr_exchange.hpp"
#include "ptrmarket/report.hpp"
#include "ptrmarket/verification.hpp"

using namespace ptrmarket;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerification = 4;

struct Options {
  std::string config;
  std::string out;
  std::string format = "json";
  unsigned long long seed = 1;

  std::string zone = "A";
  std::string beta_grid = "-5:5:21";
  double f1 = 1.0;
  std::string bids;
  double capacity = 0.0;
  std::size_t scenario = 0;
  std::string policy;
  std::optional<double> step;
  std::string eta_grid;
  std::string suite = "all";
};

std::vector<double> parse_grid(const std::string& spec) {
  double lo = 0.0, hi = 0.0;
  long n = 0;
  char tail = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%ld%c", &lo, &hi, &n, &tail) != 3 || n < 1) {
    throw ConfigError(ErrorKind::Parse, "grid \"" + spec + "\" must read lo:hi:n with n >= 1");
  }
  std::vector<double> grid;
  for (long k = 0; k < n; ++k) grid.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / (n - 1));
  return grid;
}

Zone parse_zone_flag(const std::string& z) {
  if (z == "A") return Zone::A;
  if (z == "B") return Zone::B;
  throw ConfigError(ErrorKind::Parse, "zone must be A or B");
}

RunConfig need_config(const Options& o) {
  if (o.config.empty()) throw ConfigError(ErrorKind::Parse, "--config is required for this command");
  return load_config(o.config);
}

void emit(const Options& o, const json& doc, const std::optional<CsvTable>& table) {
  std::string text;
  if (o.format == "csv") {
    if (!table) throw ConfigError(ErrorKind::Parse, "this command has no CSV form");
    text = table->str();
  } else {
    text = dump_json(doc);
  }
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_text(o.out, text);
  }
}

CsvTable row_table(std::vector<std::string> header, std::vector<std::string> row) {
  CsvTable t;
  t.header = std::move(header);
  t.add(std::move(row));
  return t;
}

int solve_av(const Options& o) {
  const auto cfg = need_config(o);
  if (!cfg.duopoly) throw ConfigError(ErrorKind::Parse, "missing field \"duopoly\" at root");
  const auto eq = av::day_ahead_equilibrium(*cfg.duopoly);
  emit(o, to_json(eq),
       row_table({"f_1", "f_2", "x_1", "x_2", "q"}, {fmt(eq.f_1), fmt(eq.f_2), fmt(eq.x_1), fmt(eq.x_2), fmt(eq.price)}));
  return 0;
}

int solve_m1(const Options& o) {
  const auto cfg = need_config(o);
  const auto sol = solve_model1(cfg.instance);
  emit(o, to_json(sol), spot_table(sol.zone(parse_zone_flag(o.zone))));
  return 0;
}

int optimize_beta_cmd(const Options& o) {
  const auto cfg = need_config(o);
  const auto opt = optimal_beta(cfg.instance, parse_zone_flag(o.zone));
  emit(o, to_json(opt),
       row_table({"beta", "day_ahead_intercept", "welfare", "welfare_slope", "closed_form_beta", "gap"},
                 {fmt(opt.beta), fmt(opt.day_ahead_intercept), fmt(opt.welfare), fmt(opt.slope),
                  fmt(opt.closed_form_beta), fmt(opt.gap)}));
  return 0;
}

int welfare_report(const Options& o) {
  const auto cfg = need_config(o);
  const Zone zone = parse_zone_flag(o.zone);
  json rows = json::array();
  CsvTable t;
  t.header = {"beta", "welfare", "day_ahead_price", "valid"};
  for (double beta : parse_grid(o.beta_grid)) {
    try {
      const auto z = solve_zone(cfg.instance, zone, beta);
      const double w = zone_welfare(z);
      rows.push_back({{"beta", beta}, {"welfare", w}, {"day_ahead_price", z.day_ahead_price}, {"valid", true}});
      t.add({fmt(beta), fmt(w), fmt(z.day_ahead_price), "1"});
    } catch (const SolverError& err) {
      if (err.kind() != ErrorKind::NegativeQuantity) throw;
      rows.push_back({{"beta", beta}, {"valid", false}, {"reason", err.what()}});
      t.add({fmt(beta), "", "", "0"});
    }
  }
  emit(o, {{"zone", std::string(to_string(zone))}, {"rows", rows}}, t);
  return 0;
}

int check_dilemma(const Options& o) {
  const auto cfg = need_config(o);
  const auto d = prisoner_dilemma_check(cfg.instance, o.f1, parse_zone_flag(o.zone));
  emit(o, to_json(d),
       row_table({"f_1", "beta", "pi_1", "pi_2", "gap", "stated_gap"},
                 {fmt(d.f_1), fmt(d.beta), fmt(d.pi_1), fmt(d.pi_2), fmt(d.gap), fmt(d.stated_gap)}));
  return 0;
}

int auction(const Options& o) {
  const auto bids = load_bids(o.bids);
  const auto res = primary_auction(bids, o.capacity);
  CsvTable t;
  t.header = {"bid", "bidder", "quantity", "price", "accepted"};
  for (std::size_t k = 0; k < bids.size(); ++k) {
    t.add({std::to_string(k), std::to_string(bids[k].bidder.number()), fmt(bids[k].quantity), fmt(bids[k].price),
           fmt(res.accepted[k])});
  }
  emit(o, to_json(res, bids), t);
  return 0;
}

PolicyMode policy_of(const Options& o, const RunConfig& cfg) {
  if (o.policy.empty()) return cfg.policy.mode;
  auto mode = parse_policy(o.policy);
  if (!mode) throw ConfigError(ErrorKind::Parse, "--policy must be none, uioli or uiosi");
  return *mode;
}

int secondary(const Options& o) {
  const auto cfg = need_config(o);
  if (o.scenario >= cfg.instance.scenarios.size()) {
    throw ConfigError(ErrorKind::Validation, "scenario " + std::to_string(o.scenario) + " out of range");
  }
  auto st = make_session(cfg.instance, cfg.allocation(), o.scenario, policy_of(o, cfg));
  const auto res = secondary_session(st, o.step.value_or(cfg.step()));
  emit(o, to_json(res), trade_table(res.state));
  return 0;
}

std::vector<SessionSeed> seeds_of(const RunConfig& cfg, PolicyMode mode) {
  std::vector<SessionSeed> seeds;
  for (std::size_t s = 0; s < cfg.instance.scenarios.size(); ++s) {
    seeds.push_back(SessionSeed{cfg.instance, cfg.allocation(), s, mode});
  }
  return seeds;
}

int eta_search(const Options& o) {
  const auto cfg = need_config(o);
  const auto grid = o.eta_grid.empty() ? cfg.policy.eta_grid : parse_grid(o.eta_grid);
  const auto res = eta_policy_search(seeds_of(cfg, policy_of(o, cfg)), grid, o.step.value_or(cfg.step()));
  CsvTable t;
  t.header = {"eta", "withholding", "predicted", "evaluated"};
  for (const auto& row : res.table) {
    t.add({fmt(row.eta), std::to_string(row.simulated), std::to_string(row.predicted), std::to_string(row.evaluated)});
  }
  emit(o, to_json(res), t);
  return 0;
}

int withholding_report(const Options& o) {
  const auto cfg = need_config(o);
  const auto mode = policy_of(o, cfg);
  json rows = json::array();
  CsvTable t;
  t.header = {"scenario", "flagged", "predicted", "predictor_lhs", "predictor_rhs", "trades"};
  for (std::size_t s = 0; s < cfg.instance.scenarios.size(); ++s) {
    auto st = make_session(cfg.instance, cfg.allocation(), s, mode);
    const auto res = secondary_session(st, o.step.value_or(cfg.step()));
    json row = to_json(res.withholding);
    row["scenario"] = s;
    row["trades"] = res.state.trades.size();
    rows.push_back(row);
    std::string flagged;
    for (auto id : GeneratorId::all()) {
      if (!res.withholding.flagged[id.index()]) continue;
      if (!flagged.empty()) flagged += ' ';
      flagged += std::to_string(id.number());
    }
    t.add({std::to_string(s), flagged, res.withholding.predicted ? "1" : "0", fmt(res.withholding.predictor_lhs),
           fmt(res.withholding.predictor_rhs), std::to_string(res.state.trades.size())});
  }
  emit(o, {{"policy", std::string(to_string(mode))}, {"scenarios", rows}}, t);
  return 0;
}

json suite_json(const verify::SuiteReport& r) {
  return {{"suite", r.name},      {"seed", r.seed},           {"cases", r.cases},
          {"max_error", r.max_error}, {"passed", r.passed()}, {"failures", r.failures}};
}

int verify_cmd(const Options& o) {
  const std::vector<std::string> known{"av", "spot", "kkt", "derivatives", "ledger", "all"};
  if (std::find(known.begin(), known.end(), o.suite) == known.end()) {
    throw ConfigError(ErrorKind::Parse, "unknown suite \"" + o.suite + "\"");
  }
  const bool all = o.suite == "all";
  json suites = json::array();
  CsvTable t;
  t.header = {"suite", "cases", "max_error", "passed"};
  bool ok = true;
  auto add = [&](const verify::SuiteReport& r) {
    suites.push_back(suite_json(r));
    t.add({r.name, std::to_string(r.cases), fmt(r.max_error), r.passed() ? "1" : "0"});
    ok = ok && r.passed();
  };
  if (all || o.suite == "av") add(verify::av_suite(o.seed));
  if (all || o.suite == "spot") add(verify::spot_suite(o.seed));
  if (all || o.suite == "kkt") add(verify::kkt_suite(o.seed));
  if (all || o.suite == "derivatives") add(verify::derivative_suite(o.seed));
  json doc{{"seed", o.seed}, {"suites", suites}, {"passed", ok}};
  if (all || o.suite == "ledger") {
    const auto rows = audit::formula_ledger();
    doc["ledger"] = audit::to_json(rows);
    doc["ledger_discrepancies"] = audit::discrepancy_count(rows);
    if (o.suite == "ledger") {
      t.header = {"id", "published", "verified", "gap", "discrepant"};
      for (const auto& r : rows) t.add({r.id, fmt(r.published), fmt(r.verified), fmt(r.gap), r.discrepant ? "1" : "0"});
    }
  }
  emit(o, doc, t);
  return ok ? 0 : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled two-zone electricity markets with transmission rights"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "model JSON file");
  app.add_option("--out", o.out, "output file (default: stdout)");
  app.add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed", o.seed, "seed for the regression suites");

  auto zone_opt = [&](CLI::App* sub) { sub->add_option("--zone", o.zone, "A or B")->check(CLI::IsMember({"A", "B"})); };

  auto* av_cmd = app.add_subcommand("solve-av", "asymmetric duopoly day-ahead equilibrium");
  auto* m1 = app.add_subcommand("solve-model1", "both zones, day-ahead and per-scenario spot");
  zone_opt(m1);
  auto* opt = app.add_subcommand("optimize-beta", "welfare-maximizing arbitrage margin");
  zone_opt(opt);
  auto* wr = app.add_subcommand("welfare-report", "welfare over a beta grid");
  wr->add_option("--beta-grid", o.beta_grid, "lo:hi:n");
  zone_opt(wr);
  auto* dil = app.add_subcommand("check-dilemma", "only generator 1 sells day-ahead");
  dil->add_option("--f1", o.f1, "day-ahead sales of the first local generator")->required();
  zone_opt(dil);
  auto* auc = app.add_subcommand("auction", "primary uniform-price rights auction");
  auc->add_option("--bids", o.bids, "bids JSON file")->required();
  auc->add_option("--K", o.capacity, "capacity on offer")->required();
  auto* sec = app.add_subcommand("secondary", "secondary rights trading session");
  sec->add_option("--scenario", o.scenario, "scenario index");
  sec->add_option("--policy", o.policy, "none, uioli or uiosi");
  sec->add_option("--step", o.step, "trade block size (default K/100)");
  auto* eta = app.add_subcommand("eta-search", "congestion charge against withholding incidence");
  eta->add_option("--grid", o.eta_grid, "lo:hi:n (default: policy.eta_grid)");
  eta->add_option("--policy", o.policy, "none, uioli or uiosi");
  eta->add_option("--step", o.step, "trade block size (default K/100)");
  auto* wh = app.add_subcommand("withholding-report", "withholding after a session in every scenario");
  wh->add_option("--policy", o.policy, "none, uioli or uiosi");
  wh->add_option("--step", o.step, "trade block size (default K/100)");
  auto* ver = app.add_subcommand("verify", "oracle regression suites and the formula ledger");
  ver->add_option("--suite", o.suite, "av, spot, kkt, derivatives, ledger or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*av_cmd) return solve_av(o);
    if (*m1) return solve_m1(o);
    if (*opt) return optimize_beta_cmd(o);
    if (*wr) return welfare_report(o);
    if (*dil) return check_dilemma(o);
    if (*auc) return auction(o);
    if (*sec) return secondary(o);
    if (*eta) return eta_search(o);
    if (*wh) return withholding_report(o);
    if (*ver) return verify_cmd(o);
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
