#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "marketgym/env/types.hpp"

namespace marketgym::env {

/// Cash, integer holdings, and the close prices they are marked at.
struct PortfolioState {
  std::size_t step_index = 0;
  double balance = 0.0;
  std::vector<std::int64_t> holdings;
  Vector prices;

  double value() const {
    double v = balance;
    for (std::size_t i = 0; i < holdings.size(); ++i)
      v += static_cast<double>(holdings[i]) * prices[static_cast<Eigen::Index>(i)];
    return v;
  }
};

struct ExecutionReport {
  Trades executed;           // signed shares actually traded
  double fees = 0.0;         // flat fees + percentage commissions
  double spread_cost = 0.0;  // value lost to the bid-ask spread versus marking at close
  std::size_t trade_count = 0;
};

/// Fills trades at the state's close prices with frictions. Sells run first so
/// their proceeds can fund buys; sells are clipped to holdings, buys are processed
/// in asset order and clipped so the balance never goes negative.
inline ExecutionReport execute_trades(PortfolioState& state, std::span<const std::int64_t> requested,
                                      const CostModel& costs) {
  const std::size_t n = state.holdings.size();
  require(requested.size() == n, ErrorCode::ActionShapeMismatch, "trade vector length mismatch");
  ExecutionReport report;
  report.executed.assign(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    if (requested[i] >= 0) continue;
    const std::int64_t q = std::min<std::int64_t>(-requested[i], state.holdings[i]);
    if (q <= 0) continue;
    const double p = state.prices[static_cast<Eigen::Index>(i)];
    const double fill = std::max(p - costs.half_spread, 0.0);
    const double notional = static_cast<double>(q) * fill;
    const double fee = costs.flat_fee + costs.per_share_rate * notional;
    // Proceeds grow with quantity, so if the full sale cannot cover its fee nothing can.
    if (state.balance + notional - fee < 0.0) continue;
    state.balance = state.balance + notional - fee;
    state.holdings[i] -= q;
    report.executed[i] = -q;
    report.fees += fee;
    report.spread_cost += static_cast<double>(q) * (p - fill);
    ++report.trade_count;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (requested[i] <= 0) continue;
    const double p = state.prices[static_cast<Eigen::Index>(i)];
    const double fill = p + costs.half_spread;
    const double unit = fill * (1.0 + costs.per_share_rate);
    auto cost_of = [&](std::int64_t q) {
      const double notional = static_cast<double>(q) * fill;
      return notional + costs.flat_fee + costs.per_share_rate * notional;
    };
    if (state.balance < costs.flat_fee + unit) continue;
    std::int64_t q = std::min<std::int64_t>(
        requested[i], static_cast<std::int64_t>(std::floor((state.balance - costs.flat_fee) / unit)));
    while (q > 0 && cost_of(q) > state.balance) --q;
    if (q <= 0) continue;
    const double notional = static_cast<double>(q) * fill;
    const double fee = costs.flat_fee + costs.per_share_rate * notional;
    state.balance -= notional + fee;
    state.holdings[i] += q;
    report.executed[i] = q;
    report.fees += fee;
    report.spread_cost += static_cast<double>(q) * (fill - p);
    ++report.trade_count;
  }
  return report;
}

/// Shifted softmax: any finite vector maps to a point on the simplex.
inline Vector softmax(const Eigen::Ref<const Vector>& raw) {
  const Vector e = (raw.array() - raw.maxCoeff()).exp();
  return e / e.sum();
}

/// Integer trades that move holdings to floor(w * v / p), with v the current value.
inline Trades weights_to_trades(const Eigen::Ref<const Vector>& weights, const PortfolioState& state) {
  const double v = state.value();
  Trades trades(state.holdings.size());
  for (std::size_t i = 0; i < trades.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const auto target = static_cast<std::int64_t>(std::floor(std::max(weights[k], 0.0) * v / state.prices[k]));
    trades[i] = target - state.holdings[i];
  }
  return trades;
}

/// Turbulence gate: below the threshold the trades pass through untouched.
/// At or above it, buys are blocked and every position sells ceil(h/2) shares.
inline Trades apply_turbulence_gate(const Trades& trades, double turbulence, const TurbulenceGate& gate,
                                    const PortfolioState& state) {
  if (!gate.enabled || turbulence < gate.threshold) return trades;
  Trades out(trades.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -((state.holdings[i] + 1) / 2);
  return out;
}

}  // namespace marketgym::env
