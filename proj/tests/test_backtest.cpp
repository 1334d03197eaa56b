#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "marketgym/agents/train.hpp"
#include "marketgym/backtest/report.hpp"
#include "marketgym/backtest/runner.hpp"
#include "marketgym/market_data/csv.hpp"
#include "marketgym/market_data/indicators.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace marketgym;
using namespace marketgym::backtest;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Io;
}

EquityCurve curve_of(std::vector<double> values, double A = 252.0) {
  EquityCurve c;
  c.values = std::move(values);
  c.periods_per_year = A;
  return c;
}

std::vector<double> random_curve(std::mt19937_64& rng, std::size_t n, double vol = 0.02) {
  std::normal_distribution<double> z(0.0, vol);
  std::vector<double> v{1e6};
  while (v.size() < n) v.push_back(v.back() * std::exp(z(rng)));
  return v;
}

std::filesystem::path golden(const std::string& name) {
  return std::filesystem::path(MARKETGYM_TEST_GOLDEN_DIR) / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const market_data::MarketFrame& bundled() {
  static const auto frame = market_data::with_default_indicators(
      market_data::ingest_csv(std::filesystem::path(MARKETGYM_TEST_DATA_DIR) / "synthetic_dow30.csv"));
  return frame;
}

MetricsReport fixture(std::string name, double initial, double final_value, double ret, double sd, double sharpe,
                      double mdd) {
  MetricsReport r;
  r.strategy = std::move(name);
  r.initial_value = initial;
  r.final_value = final_value;
  r.annualized_return = ret;
  r.annualized_std = sd;
  r.sharpe = sharpe;
  r.max_drawdown = mdd;
  r.start = make_timestamp(2019, 1, 1);
  r.end = make_timestamp(2020, 9, 23);
  return r;
}

// Multi-stock column values of the published comparison table, injected for formatting.
std::vector<MetricsReport> table2_fixture() {
  return {fixture("TD3", 1e6, 1403337, 0.2140, 0.1460, 1.38, 0.1152),
          fixture("DDPG", 1e6, 1396607, 0.2034, 0.1589, 1.28, 0.1372),
          fixture("Min-Var.", 1e6, 1171120, 0.0838, 0.2621, 0.44, 0.3434),
          fixture("DJIA", 1e6, 1185260, 0.1061, 0.2863, 0.48, 0.3701)};
}

// Splits "a | b | c" style rows of the text table into trimmed cells.
std::vector<std::vector<std::string>> text_cells(const std::string& table) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(table);
  for (std::string line; std::getline(in, line);) {
    if (line.find(" | ") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    for (;;) {
      const auto bar = line.find(" | ", pos);
      std::string cell = line.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos);
      cell.erase(0, cell.find_first_not_of(' '));
      cell.erase(cell.find_last_not_of(' ') + 1);
      cells.push_back(cell);
      if (bar == std::string::npos) break;
      pos = bar + 3;
    }
    rows.push_back(cells);
  }
  return rows;
}

env::EnvConfig multi_stock_config() {
  env::EnvConfig c;
  c.task = env::Task::multi_stock;
  c.action = {env::ActionKind::continuous_shares, 100};
  return c;
}

}  // namespace

// ---- annualized return

TEST(AnnualizedReturn, FlatCurveIsZero) { EXPECT_EQ(annualized_return(curve_of({5e5, 6e5, 5e5})), 0.0); }

TEST(AnnualizedReturn, DoublingOverOneYearIsHundredPercent) {
  std::vector<double> v(253);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = 100.0 * std::pow(2.0, double(t) / 252.0);
  v.back() = 200.0;
  EXPECT_NEAR(annualized_return(curve_of(v)), 1.0, 1e-12);
}

TEST(AnnualizedReturn, PublishedSpyRowWithinOnePoint) {
  std::vector<double> v(438, 100000.0);
  v.back() = 127044.0;
  const double r = annualized_return(curve_of(v));
  EXPECT_NEAR(r, 0.1489, 0.01);
  EXPECT_NEAR(r, std::pow(1.27044, 252.0 / 437.0) - 1.0, 1e-15);
}

TEST(AnnualizedReturn, ScaleInvariant) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto v = random_curve(rng, 50 + trial * 10);
    const double base = annualized_return(curve_of(v));
    for (double c : {1e-3, 0.5, 7.0, 1e4}) {
      auto w = v;
      for (auto& x : w) x *= c;
      EXPECT_NEAR(annualized_return(curve_of(w)), base, 1e-12 * std::max(1.0, std::abs(base)));
    }
  }
}

// ---- annualized std

TEST(AnnualizedStd, ConstantReturnIsZero) {
  std::vector<double> v{1.0};
  for (int t = 0; t < 20; ++t) v.push_back(v.back() * 2.0);
  EXPECT_EQ(annualized_std(curve_of(v)), 0.0);
}

TEST(AnnualizedStd, AlternatingReturnsClosedForm) {
  std::vector<double> v{100.0};
  for (int t = 0; t < 10; ++t) v.push_back(v.back() * (t % 2 == 0 ? 1.01 : 0.99));
  // Ten returns of +-1%: mean ~0, sample variance 10 * 1e-4 / 9 up to the rounding of v[i]/v[i-1].
  EXPECT_NEAR(annualized_std(curve_of(v)), std::sqrt(10 * 1e-4 / 9) * std::sqrt(252.0), 1e-12);
}

TEST(AnnualizedStd, BundledFixtureMatchesTwoPassOracle) {
  const auto curve = baselines::run_strategy(bundled(), baselines::StrategyConfig::equal_weighted(), 1e6,
                                             {.flat_fee = 1.0, .per_share_rate = 1e-3});
  EXPECT_NEAR(annualized_std(curve), oracle::annualized_std(curve.values, 252.0), 1e-12);
}

TEST(AnnualizedStd, NeedsTwoPeriods) {
  EXPECT_EQ(code_of([] { annualized_std(curve_of({1.0, 2.0})); }), ErrorCode::InsufficientHistory);
}

// ---- Sharpe

TEST(Sharpe, ZeroMeanIsZero) {
  EXPECT_EQ(sharpe_ratio(curve_of({100.0, 150.0, 75.0, 112.5, 56.25})), 0.0);
}

TEST(Sharpe, HandComputedFourReturns) {
  const std::vector<double> v{100.0, 102.0, 106.08, 112.4448, 121.440384};
  // Returns 2%, 4%, 6%, 8%: mean 0.05, sample variance 0.002 / 3 = 1/1500.
  const double expect = 0.05 / std::sqrt(1.0 / 1500.0) * std::sqrt(252.0);
  EXPECT_NEAR(sharpe_ratio(curve_of(v)), expect, 1e-9);
  EXPECT_NEAR(sharpe_ratio(curve_of(v)), oracle::sharpe(v, 252.0), 1e-12);
}

TEST(Sharpe, StreamingEqualsTwoPass) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_curve(rng, 20 + 40 * std::size_t(trial), 0.001 + 0.002 * trial);
    for (double rf : {0.0, 0.03}) EXPECT_NEAR(sharpe_ratio(curve_of(v), rf), oracle::sharpe(v, 252.0, rf), 1e-12);
  }
}

TEST(Sharpe, ZeroVarianceIsAnError) {
  EXPECT_EQ(code_of([] { sharpe_ratio(curve_of({1.0, 1.0, 1.0})); }), ErrorCode::ZeroVariance);
}

// ---- max drawdown

TEST(MaxDrawdown, HandCases) {
  EXPECT_EQ(max_drawdown(curve_of({100.0, 50.0, 75.0})), 0.5);
  EXPECT_EQ(max_drawdown(curve_of({1.0, 1.0, 2.0, 3.0, 3.0})), 0.0);
}

TEST(MaxDrawdown, MatchesPairwiseOracle) {
  std::mt19937_64 rng(7);
  const auto v = random_curve(rng, 1000);
  EXPECT_EQ(max_drawdown(curve_of(v)), oracle::max_drawdown(v));
}

TEST(MaxDrawdownProperties, PairwiseOracleUpToLength2000) {
  std::mt19937_64 rng(11);
  for (std::size_t n : {2u, 3u, 10u, 100u, 1000u, 2000u}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto v = random_curve(rng, n, 0.05);
      const double got = max_drawdown(curve_of(v));
      EXPECT_EQ(got, oracle::max_drawdown(v)) << n;
      EXPECT_GE(got, 0.0);
      EXPECT_LE(got, 1.0);
    }
  }
}

TEST(MaxDrawdownProperties, AppendingRunningPeakNeverIncreases) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = random_curve(rng, 30 + trial, 0.04);
    const double before = max_drawdown(curve_of(v));
    v.push_back(*std::max_element(v.begin(), v.end()));
    EXPECT_LE(max_drawdown(curve_of(v)), before);
  }
}

// ---- reports

TEST(Report, MetricsArePureAndConsistent) {
  std::mt19937_64 rng(17);
  auto curve = curve_of(random_curve(rng, 300));
  const auto a = metrics_report(curve, "x", 4);
  const auto b = metrics_report(curve, "x", 4);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.final_value, curve.values.back());
  EXPECT_EQ(a.initial_value, curve.values.front());
  EXPECT_EQ(*a.sharpe, sharpe_ratio(curve));
  EXPECT_EQ(a.max_drawdown, max_drawdown(curve));
}

TEST(Report, UndefinedSharpeRendersNotAvailable) {
  const auto r = metrics_report(curve_of({1e6, 1e6, 1e6}), "Hold");
  EXPECT_FALSE(r.sharpe.has_value());
  EXPECT_TRUE(report_to_json(r)["sharpe"].is_null());
  const auto rows = text_cells(compare({r}, "label").render_text());
  EXPECT_EQ(rows[5][0], "Sharpe ratio");
  EXPECT_EQ(rows[5][1], "n/a");
}

TEST(Report, JsonSchema) {
  std::mt19937_64 rng(19);
  EquityCurve curve = curve_of(random_curve(rng, 30));
  for (std::size_t i = 0; i < 30; ++i) curve.timestamps.push_back({make_timestamp(2019, 1, 1).seconds + std::int64_t(i) * 86400});
  const auto r = metrics_report(curve, "Min-Var.", 42);
  const auto j = report_to_json(r);
  std::vector<std::string> keys;
  for (const auto& [k, _] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"schema_version", "strategy", "date_range", "seed", "initial_value",
                                            "final_value", "annualized_return", "annualized_std", "sharpe",
                                            "max_drawdown"}));
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["seed"], 42);
  EXPECT_EQ(report_from_json(nlohmann::json::parse(report_to_string(r))), r);
}

TEST(Report, JsonSchemaErrors) {
  EXPECT_EQ(code_of([] { report_from_json(nlohmann::json::parse(R"({"strategy":"x"})")); }),
            ErrorCode::SchemaMismatch);
  EXPECT_EQ(code_of([] { report_from_json(nlohmann::json::parse(R"({"schema_version":2})")); }),
            ErrorCode::SchemaMismatch);
  EXPECT_EQ(code_of([] { report_from_json(nlohmann::json::parse(R"({"schema_version":1,"strategy":"x"})")); }),
            ErrorCode::SchemaMismatch);
}

// ---- comparison tables

TEST(Formatting, PaperPrecision) {
  EXPECT_EQ(format_currency(127044.0), "127,044");
  EXPECT_EQ(format_currency(1403337.0), "1,403,337");
  EXPECT_EQ(format_currency(100000.0), "100,000");
  EXPECT_EQ(format_currency(999.4), "999");
  EXPECT_EQ(format_percent(0.1489), "14.89%");
  EXPECT_EQ(format_percent(0.1489, "\\%"), "14.89\\%");
  EXPECT_EQ(format_sharpe(1.38), "1.38");
  EXPECT_EQ(format_sharpe(std::nullopt), "n/a");
}

TEST(Compare, SingleReportIsOneColumn) {
  auto spy = fixture("SPY", 100000, 127044, 0.1489, 0.0963, 1.49, 0.2093);
  const auto table = compare({spy});
  EXPECT_EQ(table.label, "2019/01/01-2020/09/23");
  const auto rows = text_cells(table.render_text());
  ASSERT_EQ(rows.size(), 7u);
  const std::vector<std::vector<std::string>> expect = {
      {"2019/01/01-2020/09/23", "SPY"}, {"Initial value", "100,000"}, {"Final value", "127,044"},
      {"Annualized return", "14.89%"},  {"Annualized Std", "9.63%"},  {"Sharpe ratio", "1.49"},
      {"Max drawdown", "20.93%"}};
  EXPECT_EQ(rows, expect);
}

TEST(Compare, IdenticalReportsGiveIdenticalColumns) {
  auto r = fixture("A", 1e6, 1.2e6, 0.1, 0.2, 0.5, 0.3);
  const auto rows = text_cells(compare({r, r}).render_text());
  for (const auto& row : rows) EXPECT_EQ(row[1], row[2]);
}

TEST(Compare, PublishedTableCells) {
  const auto rows = text_cells(compare(table2_fixture()).render_text());
  const std::vector<std::vector<std::string>> expect = {
      {"2019/01/01-2020/09/23", "TD3", "DDPG", "Min-Var.", "DJIA"},
      {"Initial value", "1,000,000", "1,000,000", "1,000,000", "1,000,000"},
      {"Final value", "1,403,337", "1,396,607", "1,171,120", "1,185,260"},
      {"Annualized return", "21.40%", "20.34%", "8.38%", "10.61%"},
      {"Annualized Std", "14.60%", "15.89%", "26.21%", "28.63%"},
      {"Sharpe ratio", "1.38", "1.28", "0.44", "0.48"},
      {"Max drawdown", "11.52%", "13.72%", "34.34%", "37.01%"}};
  EXPECT_EQ(rows, expect);
}

TEST(Compare, GoldenText) {
  EXPECT_EQ(compare(table2_fixture()).render(TableFormat::text), slurp(golden("table2.txt")));
}

TEST(Compare, GoldenLatex) {
  const auto latex = compare(table2_fixture()).render(TableFormat::latex);
  EXPECT_EQ(latex, slurp(golden("table2.tex")));
  EXPECT_NE(latex.find("2019/01/01-2020/09/23 & TD3 & DDPG & Min-Var. & DJIA"), std::string::npos);
  EXPECT_NE(latex.find("Annualized return & 21.40\\% & 20.34\\% & 8.38\\% & 10.61\\%"), std::string::npos);
}

TEST(Compare, GoldenCsv) { EXPECT_EQ(compare(table2_fixture()).render(TableFormat::csv), slurp(golden("table2.csv"))); }

TEST(Compare, NeedsAReport) { EXPECT_EQ(code_of([] { compare({}); }), ErrorCode::InvalidConfig); }

TEST(EquityCurveCsv, TimestampValueLinesRoundTrip) {
  std::mt19937_64 rng(23);
  EquityCurve c = curve_of(random_curve(rng, 5));
  c.values[1] = 1e6;
  for (std::size_t i = 0; i < 5; ++i) c.timestamps.push_back({make_timestamp(2019, 1, 2).seconds + std::int64_t(i) * 86400});
  std::ostringstream out;
  write_curve_csv(out, c);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "timestamp,value");
  for (std::size_t i = 0; i < 5; ++i) {
    ASSERT_TRUE(std::getline(in, line));
    const auto comma = line.find(',');
    EXPECT_EQ(line.substr(0, comma), format_timestamp(c.timestamps[i]));
    EXPECT_EQ(std::stod(line.substr(comma + 1)), c.values[i]);
  }
  EXPECT_FALSE(std::getline(in, line));
}

// ---- runner

TEST(Runner, HoldPolicyKeepsCapital) {
  const auto test = bundled().slice(400, 500);
  const auto cfg = multi_stock_config();
  const std::size_t obs = 1 + 4 * test.assets();
  const agents::Policy hold(agents::Algorithm::ddpg, rl::ActionSpace::continuous(test.assets()),
                            agents::Mlp({obs, 8, test.assets()}, agents::Activation::relu, agents::Activation::tanh),
                            std::nullopt);
  const auto run = run_policy(hold, test, cfg);
  EXPECT_EQ(run.curve.values.size(), env::TradingEnvironment(test, cfg).episode_length() + 1);
  for (double v : run.curve.values) EXPECT_EQ(v, cfg.initial_capital);
  for (const auto& row : run.trace)
    for (auto h : row.holdings) EXPECT_EQ(h, 0);
}

TEST(Runner, BuyAndHoldThroughBacktestEqualsStrategy) {
  const auto test = bundled().slice(300, 500);
  auto cfg = multi_stock_config();
  cfg.costs = {.flat_fee = 1.0, .per_share_rate = 1e-3, .half_spread = 0.01};
  const auto a = run_backtest(baselines::StrategyConfig::buy_and_hold(), test, cfg);
  const auto b = baselines::run_strategy(test, baselines::StrategyConfig::buy_and_hold(), cfg.initial_capital, cfg.costs);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.timestamps, b.timestamps);
}

TEST(Runner, PpoPolicyIsBitReproducible) {
  const auto train = bundled().slice(0, 400).select({"SYN01", "SYN02", "SYN03"});
  const auto test = bundled().slice(400, 500).select({"SYN01", "SYN02", "SYN03"});
  const auto cfg = multi_stock_config();
  env::TradingEnvironment environment(train, cfg);
  env::TradingTask task(environment);
  auto ac = agents::AgentConfig::defaults(agents::Algorithm::ppo);
  ac.hidden = {16};
  ac.total_steps = 1024;
  ac.rollout_length = 256;
  ac.seed = 9;
  const auto policy = agents::train_ppo(task, ac);
  const auto a = run_policy(policy, test, cfg);
  const auto b = run_policy(policy, test, cfg);
  EXPECT_EQ(a.curve.values, b.curve.values);
  EXPECT_EQ(a.curve.values.size(), env::TradingEnvironment(test, cfg).episode_length() + 1);
  bool traded = false;
  for (const auto& row : a.trace)
    for (auto h : row.holdings) traded = traded || h != 0;
  EXPECT_TRUE(traded);
}

TEST(Runner, LayoutMismatch) {
  const auto test = bundled().slice(400, 500);
  const agents::Policy wrong(agents::Algorithm::ddpg, rl::ActionSpace::continuous(test.assets()),
                             agents::Mlp({7, 4, test.assets()}, agents::Activation::relu, agents::Activation::tanh),
                             std::nullopt);
  EXPECT_EQ(code_of([&] { run_policy(wrong, test, multi_stock_config()); }), ErrorCode::LayoutMismatch);
  const agents::Policy discrete(agents::Algorithm::dqn, rl::ActionSpace::discrete(21, -10),
                                agents::Mlp({1 + 4 * test.assets(), 4, 21}, agents::Activation::relu,
                                            agents::Activation::identity),
                                std::nullopt);
  EXPECT_EQ(code_of([&] { run_policy(discrete, test, multi_stock_config()); }), ErrorCode::LayoutMismatch);
}
