#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "ptrmarket/config.hpp"
#include "ptrmarket/report.hpp"

using namespace ptrmarket;
namespace fs = std::filesystem;

namespace {

const std::string kCli = CLI_PATH;
const std::string kModel = std::string(CONFIG_DIR) + "/model.json";
const std::string kDesign = std::string(CONFIG_DIR) + "/design.json";
const std::string kBids = std::string(CONFIG_DIR) + "/bids.json";

struct Run {
  int status = -1;
  std::string out;
};

// stderr is folded into the captured text.
Run run(const std::string& args) {
  Run r;
  FILE* pipe = popen((kCli + " " + args + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = fs::temp_directory_path() / ("ptrmarket_" + name);
  std::ofstream(path) << content;
  return path.string();
}

const char* kMissingElasticity = R"({
  "markets": {"A": {"marginal_cost": 2.0}, "B": {"elasticity": 1.0, "marginal_cost": 1.0}},
  "scenarios": [{"D_A": 20.0, "D_B": 20.0, "p": 1.0}],
  "capacities": {"total": 4.0, "K_1": 1.0, "K_2": 1.0, "K_3": 1.0, "K_4": 1.0}
})";

const char* kBadProbabilities = R"({
  "markets": {"A": {"elasticity": 1.0, "marginal_cost": 2.0}, "B": {"elasticity": 1.0, "marginal_cost": 1.0}},
  "scenarios": [{"D_A": 20.0, "D_B": 20.0, "p": 0.5}, {"D_A": 21.0, "D_B": 19.0, "p": 0.4}],
  "capacities": {"total": 4.0, "K_1": 1.0, "K_2": 1.0, "K_3": 1.0, "K_4": 1.0}
})";

}  // namespace

TEST(Config, MissingFieldIsParseError) {
  try {
    parse_config_text(kMissingElasticity);
    FAIL() << "expected a throw";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("missing field \"elasticity\""), std::string::npos) << e.what();
  }
}

TEST(Config, ProbabilitiesMustSumToOne) {
  const auto path = temp_file("bad_p.json", kBadProbabilities);
  try {
    load_config(path);
    FAIL() << "expected a throw";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
    EXPECT_NE(std::string(e.what()).find("probabilities must sum to 1"), std::string::npos);
  }
}

TEST(Config, JsonRoundTrip) {
  const auto cfg = load_config(kModel);
  const auto doc = to_json(cfg);
  const auto again = parse_config(doc);
  EXPECT_EQ(dump_json(to_json(again)), dump_json(doc));
  EXPECT_DOUBLE_EQ(again.instance.capacity[3], 8.0);
  ASSERT_TRUE(again.duopoly);
  EXPECT_DOUBLE_EQ(again.duopoly->cost_2, 3.0);
}

TEST(Config, MalformedJsonReportsLine) {
  try {
    parse_config_text("{\n  \"markets\": \n}", "inline");
    FAIL() << "expected a throw";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
  }
}

TEST(Bids, ParseAndReject) {
  const auto bids = load_bids(kBids);
  ASSERT_EQ(bids.size(), 3u);
  EXPECT_EQ(bids[1].bidder, GeneratorId(3));
  EXPECT_THROW(parse_bids(nlohmann::json::object()), ConfigError);
  EXPECT_THROW(parse_bids(nlohmann::json::parse(R"([{"bidder": 1.5, "quantity": 1, "price": 1}])")), ConfigError);
}

TEST(Report, FixedPrecisionAndSortedKeys) {
  EXPECT_EQ(fmt(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(dump_json({{"b", 1}, {"a", 2}}), "{\n  \"a\": 2,\n  \"b\": 1\n}\n");
}

TEST(Report, EmptyTableKeepsHeader) {
  CsvTable t;
  t.header = {"trade", "buyer", "seller"};
  EXPECT_EQ(t.str(), "trade,buyer,seller\n");
}

TEST(Cli, SolveAvMatchesClosedForm) {
  const auto r = run("solve-av --config " + kModel);
  ASSERT_EQ(r.status, 0) << r.out;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_NEAR(doc["f_1"].get<double>(), 2.6, 1e-12);
  EXPECT_NEAR(doc["f_2"].get<double>(), 0.6, 1e-12);
  EXPECT_NEAR(doc["q"].get<double>(), 3.6, 1e-12);
}

TEST(Cli, OutputIsDeterministic) {
  for (const std::string& cmd : {"solve-model1 --config " + kModel, "secondary --policy uiosi --config " + kModel,
                                "optimize-beta --config " + kDesign}) {
    const auto a = run(cmd), b = run(cmd);
    EXPECT_EQ(a.status, 0) << cmd << "\n" << a.out;
    EXPECT_EQ(a.out, b.out) << cmd;
  }
}

TEST(Cli, SpotCsvHasOneRowPerScenario) {
  const auto r = run("solve-model1 --format csv --config " + kModel);
  ASSERT_EQ(r.status, 0) << r.out;
  std::size_t lines = 0;
  for (char c : r.out) lines += c == '\n' ? 1 : 0;
  EXPECT_EQ(lines, 1u + 2u);
}

TEST(Cli, SessionWithoutTradesPrintsHeaderOnly) {
  const auto r = run("secondary --format csv --scenario 0 --policy none --config " + kDesign);
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(r.out, "trade,buyer,seller,delta_K,price,q_after\n");
}

TEST(Cli, AuctionFromBidFile) {
  const auto r = run("auction --bids " + kBids + " --K 100");
  ASSERT_EQ(r.status, 0) << r.out;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_DOUBLE_EQ(doc["price"].get<double>(), 3.0);
}

TEST(Cli, VerifyAvSuitePasses) {
  const auto r = run("verify --suite av --seed 7");
  EXPECT_EQ(r.status, 0) << r.out;
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("solve-model1 --config " + temp_file("missing.json", kMissingElasticity)).status, 2);
  EXPECT_EQ(run("solve-model1 --config " + temp_file("bad_p2.json", kBadProbabilities)).status, 2);
  EXPECT_EQ(run("solve-model1 --config /nonexistent/model.json").status, 2);
  EXPECT_EQ(run("verify --suite nope").status, 2);
  EXPECT_EQ(run("no-such-command").status, 2);
  // Welfare on this file rises monotonically in beta, so no interior optimum brackets.
  EXPECT_EQ(run("optimize-beta --config " + kModel).status, 3);
}
