#pragma once

#include <cmath>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "marketgym/env/execution.hpp"
#include "marketgym/env/reward.hpp"
#include "marketgym/env/turbulence.hpp"
#include "marketgym/env/types.hpp"
#include "marketgym/market_data/frame.hpp"

namespace marketgym::env {

struct EnvConfig {
  Task task = Task::multi_stock;
  ActionSpec action;
  RewardSpec reward;
  CostModel costs;
  TurbulenceGate gate;
  double initial_capital = 1'000'000.0;
  std::size_t warmup = 0;          // rows skipped before the first decision
  bool observe_indicators = true;  // false zero-fills the MACD/RSI slots and skips the indicator check

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

struct StepInfo {
  Trades requested;
  Trades executed;
  double fees = 0.0;
  double spread_cost = 0.0;
  double turbulence = 0.0;
  bool gate_triggered = false;
  double value = 0.0;  // v_{t+1}, after the price update
};

struct StepOutcome {
  Vector observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// One row of the episode trace: the state after a step (or after reset for step 0).
struct TraceRow {
  std::size_t step = 0;
  Timestamp timestamp;
  double balance = 0.0;
  double value = 0.0;
  double reward = 0.0;
  double turbulence = 0.0;
  std::vector<std::int64_t> holdings;
};

/// Time-driven trading MDP over a market frame. Decisions are taken at each close
/// and filled at that close (plus or minus the half spread); the episode ends on
/// the last row. Observation layout: [balance, holdings(n), close(n), macd(n), rsi(n)].
///
/// Not thread-safe; distinct instances may share the same frame.
class TradingEnvironment {
 public:
  TradingEnvironment(std::shared_ptr<const market_data::MarketFrame> frame, EnvConfig config)
      : frame_(std::move(frame)), config_(std::move(config)) {
    const std::size_t n = frame_->assets();
    if (config_.task == Task::single_stock)
      require(n == 1, ErrorCode::TaskShapeMismatch, "single-stock task needs exactly one ticker, got " +
                                                        std::to_string(n));
    if (config_.task == Task::portfolio_allocation)
      require(config_.action.kind == ActionKind::simplex_weights, ErrorCode::TaskShapeMismatch,
              "portfolio allocation uses simplex weight actions");
    else
      require(config_.action.kind != ActionKind::simplex_weights, ErrorCode::TaskShapeMismatch,
              "simplex weight actions belong to the portfolio-allocation task");
    if (config_.action.kind != ActionKind::simplex_weights)
      require(config_.action.max_shares >= 1, ErrorCode::InvalidConfig, "max shares per trade k must be >= 1");
    require(config_.initial_capital > 0 && std::isfinite(config_.initial_capital), ErrorCode::InvalidConfig,
            "initial capital must be > 0");
    config_.costs.validate();
    config_.reward.validate();
    config_.gate.validate(n);
    if (config_.observe_indicators) {
      frame_->indicator(market_data::kMacd);
      frame_->indicator(market_data::kRsi);
    }
    require(config_.warmup + 1 < frame_->steps(), ErrorCode::SeriesTooShort,
            "frame must have at least warmup + 2 rows for one step");
    turbulence_ = config_.gate.enabled ? turbulence_series(frame_->close(), config_.gate.lookback, config_.gate.ridge)
                                       : Vector::Zero(static_cast<Eigen::Index>(frame_->steps()));
    reset();
  }

  TradingEnvironment(const market_data::MarketFrame& frame, EnvConfig config)
      : TradingEnvironment(std::make_shared<const market_data::MarketFrame>(frame), std::move(config)) {}

  const market_data::MarketFrame& frame() const { return *frame_; }
  const EnvConfig& config() const { return config_; }
  std::size_t assets() const { return frame_->assets(); }
  std::size_t observation_size() const { return 1 + 4 * assets(); }
  std::size_t action_size() const { return assets(); }
  /// Steps per episode; the equity curve has one more point.
  std::size_t episode_length() const { return frame_->steps() - 1 - config_.warmup; }
  const PortfolioState& state() const { return state_; }
  bool done() const { return done_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  double turbulence_at(std::size_t row) const { return turbulence_[static_cast<Eigen::Index>(row)]; }

  /// Number of legal actions per asset for discrete shares, 2k + 1.
  std::size_t legal_action_count() const { return config_.action.discrete_count(); }

  Vector reset() {
    const std::size_t n = assets();
    state_.step_index = config_.warmup;
    state_.balance = config_.initial_capital;
    state_.holdings.assign(n, 0);
    state_.prices = frame_->close().row(static_cast<Eigen::Index>(state_.step_index)).transpose();
    done_ = false;
    values_.assign(1, state_.value());
    trace_.assign(1, TraceRow{0, frame_->timestamps()[state_.step_index], state_.balance, values_.back(), 0.0,
                              turbulence_at(state_.step_index), state_.holdings});
    return observe();
  }

  /// Agent-facing step. Discrete actions are share counts in [-k, k]; continuous
  /// actions are clipped to [-1, 1] and scaled to round(a * k) shares; simplex
  /// actions are raw scores normalized by a shifted softmax into target weights.
  StepOutcome step(std::span<const double> action) {
    require(!done_, ErrorCode::EpisodeDone, "episode is done; call reset()");
    require(action.size() == action_size(), ErrorCode::ActionShapeMismatch,
            "action length " + std::to_string(action.size()) + " != " + std::to_string(action_size()));
    for (const double a : action) require(std::isfinite(a), ErrorCode::NonFiniteAction, "action must be finite");
    return advance(resolve(action));
  }

  /// Native step with explicit share trades, sharing the execution path of step().
  StepOutcome step_trades(std::span<const std::int64_t> trades) {
    require(!done_, ErrorCode::EpisodeDone, "episode is done; call reset()");
    require(trades.size() == action_size(), ErrorCode::ActionShapeMismatch, "trade vector length mismatch");
    return advance(Trades(trades.begin(), trades.end()));
  }

  /// Maps an agent action to requested share trades at the current state.
  Trades resolve(std::span<const double> action) const {
    const int k = config_.action.max_shares;
    Trades trades(action.size());
    switch (config_.action.kind) {
      case ActionKind::discrete_shares:
        for (std::size_t i = 0; i < action.size(); ++i)
          trades[i] = static_cast<std::int64_t>(std::clamp(std::round(action[i]), -double(k), double(k)));
        break;
      case ActionKind::continuous_shares:
        for (std::size_t i = 0; i < action.size(); ++i)
          trades[i] = static_cast<std::int64_t>(std::round(std::clamp(action[i], -1.0, 1.0) * k));
        break;
      case ActionKind::simplex_weights: {
        const Vector raw = Eigen::Map<const Vector>(action.data(), static_cast<Eigen::Index>(action.size()));
        trades = weights_to_trades(softmax(raw), state_);
        break;
      }
    }
    return trades;
  }

  Vector observe() const {
    const auto n = static_cast<Eigen::Index>(assets());
    const auto row = static_cast<Eigen::Index>(state_.step_index);
    Vector obs = Vector::Zero(1 + 4 * n);
    obs[0] = state_.balance;
    for (Eigen::Index i = 0; i < n; ++i) obs[1 + i] = static_cast<double>(state_.holdings[static_cast<std::size_t>(i)]);
    obs.segment(1 + n, n) = state_.prices;
    if (config_.observe_indicators) {
      obs.segment(1 + 2 * n, n) = frame_->indicator(market_data::kMacd).row(row).transpose();
      obs.segment(1 + 3 * n, n) = frame_->indicator(market_data::kRsi).row(row).transpose();
    }
    return obs;
  }

 private:
  StepOutcome advance(Trades requested) {
    StepOutcome out;
    const double turbulence = turbulence_at(state_.step_index);
    const Trades gated = apply_turbulence_gate(requested, turbulence, config_.gate, state_);
    out.info.gate_triggered = config_.gate.enabled && turbulence >= config_.gate.threshold;
    out.info.turbulence = turbulence;
    out.info.requested = std::move(requested);

    const double value_before = values_.back();
    ExecutionReport exec = execute_trades(state_, gated, config_.costs);
    out.info.executed = std::move(exec.executed);
    out.info.fees = exec.fees;
    out.info.spread_cost = exec.spread_cost;

    ++state_.step_index;
    state_.prices = frame_->close().row(static_cast<Eigen::Index>(state_.step_index)).transpose();
    const double value_after = state_.value();
    values_.push_back(value_after);
    out.info.value = value_after;

    double reward = 0.0;
    switch (config_.reward.kind) {
      case RewardKind::delta_value: reward = reward_delta_value(value_before, value_after); break;
      case RewardKind::log_return: reward = reward_log_return(value_before, value_after); break;
      case RewardKind::trailing_sharpe:
        reward = values_.size() >= 3 ? reward_trailing_sharpe(values_, config_.reward.window) : 0.0;
        break;
    }
    out.reward = reward * config_.reward.effective_scaling();
    out.done = state_.step_index + 1 >= frame_->steps();
    done_ = out.done;
    out.observation = observe();
    trace_.push_back(TraceRow{trace_.size(), frame_->timestamps()[state_.step_index], state_.balance, value_after,
                              out.reward, turbulence_at(state_.step_index), state_.holdings});
    return out;
  }

  std::shared_ptr<const market_data::MarketFrame> frame_;
  EnvConfig config_;
  Vector turbulence_;
  PortfolioState state_;
  bool done_ = false;
  std::vector<double> values_;
  std::vector<TraceRow> trace_;
};

/// Episode trace CSV: step,timestamp,balance,value,reward,turbulence,h_<ticker>...
inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace,
                            const std::vector<std::string>& tickers) {
  out << "step,timestamp,balance,value,reward,turbulence";
  for (const auto& t : tickers) out << ",h_" << t;
  out << '\n';
  for (const auto& row : trace) {
    out << row.step << ',' << format_timestamp(row.timestamp) << ',' << format_double(row.balance) << ','
        << format_double(row.value) << ',' << format_double(row.reward) << ',' << format_double(row.turbulence);
    for (const auto h : row.holdings) out << ',' << h;
    out << '\n';
  }
}

}  // namespace marketgym::env
