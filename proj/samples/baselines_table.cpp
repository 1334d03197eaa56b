// Runs the classical baselines over the last 200 rows of a price file and prints a comparison table.
//
//   baselines_table [prices.csv]
//
// Without an argument the synthetic 30-ticker panel is generated in memory.

#include <cstdio>
#include <iostream>

#include "marketgym/backtest/report.hpp"
#include "marketgym/baselines/strategies.hpp"
#include "marketgym/market_data/csv.hpp"
#include "marketgym/market_data/synthetic.hpp"

using namespace marketgym;

int main(int argc, char** argv) {
  try {
    const auto frame = argc > 1 ? market_data::ingest_csv(argv[1]) : market_data::synthetic_frame();
    if (frame.steps() < 460) {
      std::cerr << "need at least 460 rows, got " << frame.steps() << "\n";
      return 2;
    }
    const std::size_t start = frame.steps() - 200;  // min-variance estimates on the 252 rows before this
    const env::CostModel costs{.per_share_rate = 0.001};
    std::vector<backtest::MetricsReport> reports;
    for (const auto& s : {baselines::StrategyConfig::buy_and_hold(), baselines::StrategyConfig::equal_weighted(),
                          baselines::StrategyConfig::momentum(63), baselines::StrategyConfig::min_variance(),
                          baselines::StrategyConfig::mean_variance(5.0)})
      reports.push_back(backtest::metrics_report(baselines::run_strategy(frame, s, 1e6, costs, start),
                                                 baselines::display_name(s)));
    std::cout << backtest::compare(reports).render_text();
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
