// Trains PPO on the first ticker of the synthetic panel and compares it with a random policy on held-out rows.

#include <iostream>

#include "marketgym/agents/train.hpp"
#include "marketgym/backtest/report.hpp"
#include "marketgym/backtest/runner.hpp"
#include "marketgym/env/rl_adapter.hpp"
#include "marketgym/market_data/indicators.hpp"
#include "marketgym/market_data/synthetic.hpp"

using namespace marketgym;

int main() {
  const auto frame = market_data::with_default_indicators(market_data::synthetic_frame().select({"SYN01"}));
  const auto train_rows = frame.slice(0, 380);
  const auto test_rows = frame.slice(380, frame.steps());

  env::EnvConfig config;
  config.task = env::Task::single_stock;
  config.action = {env::ActionKind::continuous_shares, 100};
  config.initial_capital = 100'000;
  config.costs.per_share_rate = 0.001;

  agents::AgentConfig agent = agents::AgentConfig::defaults(agents::Algorithm::ppo);
  agent.hidden = {32, 32};
  agent.total_steps = 30'000;
  agent.rollout_length = 1200;
  agent.minibatch_size = 100;
  agent.epochs = 5;
  agent.seed = 7;

  env::TradingEnvironment training_env(train_rows, config);
  env::TradingTask task(training_env);
  const auto policy = agents::train(task, agent);

  const auto trained = backtest::metrics_report(backtest::run_backtest(policy, test_rows, config), "PPO", agent.seed);
  const auto random = backtest::metrics_report(backtest::run_random(test_rows, config, agent.seed).curve, "Random");
  std::cout << backtest::compare({trained, random}).render_text();
}
