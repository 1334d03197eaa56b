#pragma once

#include <functional>

#include "marketgym/agents/policy.hpp"
#include "marketgym/agents/rng.hpp"
#include "marketgym/backtest/equity_curve.hpp"
#include "marketgym/baselines/strategies.hpp"
#include "marketgym/env/rl_adapter.hpp"

namespace marketgym::backtest {

struct BacktestRun {
  EquityCurve curve;
  std::vector<env::TraceRow> trace;
};

/// Runs one episode, asking `choose` for every action.
inline BacktestRun run_episode(const market_data::MarketFrame& frame, const env::EnvConfig& config,
                               const std::function<Vector(const Vector&, const rl::ActionSpace&)>& choose) {
  env::TradingEnvironment environment(frame, config);
  env::TradingTask task(environment);
  const auto space = task.action_space();
  Vector obs = task.reset();
  for (bool done = false; !done;) {
    const Vector action = choose(obs, space);
    auto tr = task.step(std::span<const double>(action.data(), static_cast<std::size_t>(action.size())));
    obs = std::move(tr.observation);
    done = tr.done;
  }
  BacktestRun run;
  run.curve.values = environment.values();
  run.curve.timestamps.assign(frame.timestamps().begin() + static_cast<std::ptrdiff_t>(config.warmup),
                              frame.timestamps().end());
  run.curve.periods_per_year = periods_per_year(frame.granularity());
  run.trace = environment.trace();
  return run;
}

/// Checks that the policy was trained against an environment with this layout.
inline void check_layout(const agents::Policy& policy, const market_data::MarketFrame& frame,
                         const env::EnvConfig& config) {
  env::TradingEnvironment environment(frame, config);
  env::TradingTask task(environment);
  const auto expected = task.action_space();
  const auto& got = policy.action_space();
  require(policy.observation_size() == task.observation_size(), ErrorCode::LayoutMismatch,
          "policy expects observations of length " + std::to_string(policy.observation_size()) +
              ", environment produces " + std::to_string(task.observation_size()));
  require(got.type == expected.type && got.count == expected.count && got.first == expected.first &&
              got.dim == expected.dim,
          ErrorCode::LayoutMismatch, "policy action space does not match the environment");
}

/// Deterministic evaluation episode of a trained policy.
inline BacktestRun run_policy(const agents::Policy& policy, const market_data::MarketFrame& frame,
                              const env::EnvConfig& config) {
  check_layout(policy, frame, config);
  return run_episode(frame, config, [&](const Vector& obs, const rl::ActionSpace&) { return policy.act(obs); });
}

/// Uniformly random actions; the sanity floor for trained agents.
inline BacktestRun run_random(const market_data::MarketFrame& frame, const env::EnvConfig& config,
                              std::uint64_t seed) {
  agents::Rng rng(seed);
  return run_episode(frame, config, [&](const Vector&, const rl::ActionSpace& space) -> Vector {
    if (space.type == rl::ActionType::discrete)
      return Vector::Constant(1, double(space.first + static_cast<std::int64_t>(rng.index(space.count))));
    Vector a(static_cast<Eigen::Index>(space.dim));
    for (auto& x : a) x = rng.uniform(-1.0, 1.0);
    return a;
  });
}

inline EquityCurve run_backtest(const agents::Policy& policy, const market_data::MarketFrame& frame,
                                const env::EnvConfig& config) {
  return run_policy(policy, frame, config).curve;
}

/// Baseline strategies start trading at the environment's warmup row.
inline EquityCurve run_backtest(const baselines::StrategyConfig& strategy, const market_data::MarketFrame& frame,
                                const env::EnvConfig& config) {
  return baselines::run_strategy(frame, strategy, config.initial_capital, config.costs, config.warmup);
}

}  // namespace marketgym::backtest
