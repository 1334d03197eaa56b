#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "marketgym/backtest/equity_curve.hpp"
#include "marketgym/baselines/simplex.hpp"
#include "marketgym/env/trading_env.hpp"
#include "marketgym/market_data/frame.hpp"

namespace marketgym::baselines {

/// Ridge-regularized sample covariance of a window x n return matrix, checked for
/// numerical rank the same way the turbulence index is.
inline Matrix estimation_covariance(const Matrix& returns) {
  const auto n = returns.cols();
  require(returns.rows() >= n + 2, ErrorCode::InsufficientHistory,
          "estimation window needs at least n + 2 rows, got " + std::to_string(returns.rows()));
  Matrix sigma = sample_covariance(returns);
  sigma.diagonal().array() += default_ridge(sigma);
  Eigen::LLT<Matrix> llt(sigma);
  require(llt.info() == Eigen::Success && llt.rcond() > 1e-14, ErrorCode::SingularCovariance,
          "return covariance is numerically singular");
  return sigma;
}

inline SolverResult min_variance_solve(const Matrix& returns, const SolverOptions& options = {}) {
  const Matrix sigma = estimation_covariance(returns);
  return minimize_on_simplex(sigma, Vector::Zero(sigma.rows()), options);
}

inline WeightVector min_variance_weights(const Matrix& returns) { return WeightVector(min_variance_solve(returns).weights); }

/// Maximizes w'mu - lambda w'Sigma w, posed as minimizing lambda w'Sigma w - w'mu.
inline SolverResult mean_variance_solve(const Matrix& returns, double risk_aversion, const SolverOptions& options = {}) {
  require(risk_aversion >= 0 && std::isfinite(risk_aversion), ErrorCode::InvalidConfig, "risk aversion must be >= 0");
  const Matrix sigma = estimation_covariance(returns);
  return minimize_on_simplex(risk_aversion * sigma, column_mean(returns), options);
}

inline WeightVector mean_variance_weights(const Matrix& returns, double risk_aversion) {
  return WeightVector(mean_variance_solve(returns, risk_aversion).weights);
}

/// Assets ordered by trailing return p_t / p_{t-lookback} - 1, best first; ties go
/// to the alphabetically earlier ticker.
inline std::vector<std::size_t> momentum_ranking(const market_data::MarketFrame& frame, std::size_t t,
                                                 std::size_t lookback) {
  require(lookback >= 1, ErrorCode::InvalidConfig, "momentum lookback must be >= 1");
  require(t >= lookback && t < frame.steps(), ErrorCode::InsufficientHistory,
          "momentum at step " + std::to_string(t) + " needs " + std::to_string(lookback) + " prior steps");
  const auto& close = frame.close();
  const auto now = static_cast<Eigen::Index>(t), then = static_cast<Eigen::Index>(t - lookback);
  std::vector<double> ret(frame.assets());
  for (std::size_t i = 0; i < ret.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    ret[i] = close(now, c) / close(then, c) - 1.0;
  }
  std::vector<std::size_t> order(frame.assets());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ret[a] != ret[b]) return ret[a] > ret[b];
    return frame.tickers()[a] < frame.tickers()[b];
  });
  return order;
}

enum class StrategyKind { buy_and_hold, equal_weighted, momentum, mean_variance, min_variance };

inline std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::buy_and_hold: return "buy_and_hold";
    case StrategyKind::equal_weighted: return "equal_weighted";
    case StrategyKind::momentum: return "momentum";
    case StrategyKind::mean_variance: return "mean_variance";
    case StrategyKind::min_variance: return "min_variance";
  }
  return "?";
}

inline std::optional<StrategyKind> parse_strategy_kind(std::string_view s) {
  for (auto k : {StrategyKind::buy_and_hold, StrategyKind::equal_weighted, StrategyKind::momentum,
                 StrategyKind::mean_variance, StrategyKind::min_variance})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct StrategyConfig {
  StrategyKind kind = StrategyKind::buy_and_hold;
  std::size_t rebalance_every = 21;
  std::size_t lookback = 63;                // momentum
  std::optional<std::size_t> top_k;         // momentum; ceil(n / 3) when unset
  double risk_aversion = 1.0;               // mean-variance
  std::size_t estimation_window = 252;      // mean- and min-variance

  static StrategyConfig of(StrategyKind kind) {
    StrategyConfig c;
    c.kind = kind;
    return c;
  }
  static StrategyConfig buy_and_hold() { return of(StrategyKind::buy_and_hold); }
  static StrategyConfig equal_weighted(std::size_t rebalance_every = 21) {
    StrategyConfig c = of(StrategyKind::equal_weighted);
    c.rebalance_every = rebalance_every;
    return c;
  }
  static StrategyConfig momentum(std::size_t lookback = 63, std::optional<std::size_t> top_k = std::nullopt) {
    StrategyConfig c = of(StrategyKind::momentum);
    c.lookback = lookback;
    c.top_k = top_k;
    return c;
  }
  static StrategyConfig mean_variance(double risk_aversion = 1.0, std::size_t window = 252) {
    StrategyConfig c = of(StrategyKind::mean_variance);
    c.risk_aversion = risk_aversion;
    c.estimation_window = window;
    return c;
  }
  static StrategyConfig min_variance(std::size_t window = 252) {
    StrategyConfig c = of(StrategyKind::min_variance);
    c.estimation_window = window;
    return c;
  }

  /// Rows of history needed before the first decision.
  std::size_t history() const {
    switch (kind) {
      case StrategyKind::momentum: return lookback;
      case StrategyKind::mean_variance:
      case StrategyKind::min_variance: return estimation_window;
      default: return 0;
    }
  }

  std::size_t selected(std::size_t assets) const { return top_k.value_or((assets + 2) / 3); }

  void validate(std::size_t assets) const {
    require(rebalance_every >= 1, ErrorCode::InvalidConfig, "rebalance_every must be >= 1");
    if (kind == StrategyKind::momentum) {
      require(lookback >= 1, ErrorCode::InvalidConfig, "momentum lookback must be >= 1");
      require(selected(assets) >= 1 && selected(assets) <= assets, ErrorCode::InvalidConfig,
              "momentum top_k must be in [1, n]");
    }
    if (kind == StrategyKind::mean_variance || kind == StrategyKind::min_variance)
      require(estimation_window >= assets + 2, ErrorCode::InvalidConfig, "estimation window must be >= n + 2");
    if (kind == StrategyKind::mean_variance)
      require(risk_aversion >= 0 && std::isfinite(risk_aversion), ErrorCode::InvalidConfig,
              "risk aversion must be >= 0");
  }

  friend bool operator==(const StrategyConfig&, const StrategyConfig&) = default;
};

/// Display label used in comparison tables.
inline std::string display_name(const StrategyConfig& c) {
  switch (c.kind) {
    case StrategyKind::buy_and_hold: return "Buy&Hold";
    case StrategyKind::equal_weighted: return "Equal-Wt.";
    case StrategyKind::momentum: return "Momentum";
    case StrategyKind::mean_variance: return "Mean-Var.";
    case StrategyKind::min_variance: return "Min-Var.";
  }
  return "?";
}

/// Target weights at row t.
inline WeightVector strategy_weights(const market_data::MarketFrame& frame, const StrategyConfig& config,
                                     std::size_t t) {
  const std::size_t n = frame.assets();
  switch (config.kind) {
    case StrategyKind::buy_and_hold:
    case StrategyKind::equal_weighted: return WeightVector::equal(n);
    case StrategyKind::momentum: {
      const auto ranking = momentum_ranking(frame, t, config.lookback);
      const std::size_t k = config.selected(n);
      Vector w = Vector::Zero(static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < k; ++j) w[static_cast<Eigen::Index>(ranking[j])] = 1.0 / double(k);
      return WeightVector(std::move(w));
    }
    case StrategyKind::mean_variance:
    case StrategyKind::min_variance: {
      const std::size_t W = config.estimation_window;
      require(t >= W, ErrorCode::InsufficientHistory, "estimation window exceeds available history");
      const auto& close = frame.close();
      const auto first = static_cast<Eigen::Index>(t - W);
      const auto rows = static_cast<Eigen::Index>(W);
      const Matrix returns = (close.middleRows(first + 1, rows).array() / close.middleRows(first, rows).array() - 1.0)
                                 .matrix();
      return config.kind == StrategyKind::min_variance ? min_variance_weights(returns)
                                                       : mean_variance_weights(returns, config.risk_aversion);
    }
  }
  fail(ErrorCode::InvalidConfig, "unknown strategy");
}

struct StrategyOptions {
  double capital = 1'000'000.0;
  env::CostModel costs;
  /// First decision row; defaults to the strategy's history requirement.
  std::optional<std::size_t> start;
};

struct StrategyRun {
  backtest::EquityCurve curve;
  std::vector<env::TraceRow> trace;
};

/// Trades the strategy through the trading environment's execution engine. The
/// curve starts at the first decision row and ends on the last row of the frame.
inline StrategyRun run_strategy_traced(const market_data::MarketFrame& frame, const StrategyConfig& config,
                                       const StrategyOptions& options) {
  config.validate(frame.assets());
  const std::size_t start = options.start.value_or(config.history());
  require(start >= config.history() && start + 1 < frame.steps(), ErrorCode::InsufficientHistory,
          std::string(to_string(config.kind)) + " needs " + std::to_string(config.history()) +
              " rows of history plus one step; frame has " + std::to_string(frame.steps()));
  env::EnvConfig ec;
  ec.task = env::Task::multi_stock;
  ec.action.kind = env::ActionKind::continuous_shares;
  ec.costs = options.costs;
  ec.initial_capital = options.capital;
  ec.warmup = start;
  ec.observe_indicators = false;
  env::TradingEnvironment environment(frame, ec);

  const env::Trades hold(frame.assets(), 0);
  for (std::size_t step = 0; !environment.done(); ++step) {
    const bool decide = config.kind == StrategyKind::buy_and_hold ? step == 0 : step % config.rebalance_every == 0;
    if (decide) {
      const auto w = strategy_weights(frame, config, environment.state().step_index);
      environment.step_trades(env::weights_to_trades(w.values(), environment.state()));
    } else {
      environment.step_trades(hold);
    }
  }
  StrategyRun run;
  run.curve.values = environment.values();
  run.curve.timestamps.assign(frame.timestamps().begin() + static_cast<std::ptrdiff_t>(start), frame.timestamps().end());
  run.curve.periods_per_year = periods_per_year(frame.granularity());
  run.trace = environment.trace();
  return run;
}

inline backtest::EquityCurve run_strategy(const market_data::MarketFrame& frame, const StrategyConfig& config,
                                          double capital, const env::CostModel& costs,
                                          std::optional<std::size_t> start = std::nullopt) {
  return run_strategy_traced(frame, config, {capital, costs, start}).curve;
}

}  // namespace marketgym::baselines
