#pragma once

#include <algorithm>

#include "marketgym/market_data/frame.hpp"

namespace marketgym::market_data {

/// Exponential moving average with alpha = 2/(period+1), seeded at index period-1
/// with the simple mean of the first `period` values. Earlier rows repeat the seed.
inline Vector ema(const Eigen::Ref<const Vector>& values, int period) {
  const auto T = values.size();
  require(period >= 1 && T >= period, ErrorCode::SeriesTooShort,
          "EMA(" + std::to_string(period) + ") needs at least " + std::to_string(period) + " values");
  const double alpha = 2.0 / (period + 1.0);
  Vector out(T);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < period; ++i) acc += values[i];
  out[period - 1] = acc / period;
  for (Eigen::Index i = period; i < T; ++i) out[i] = alpha * values[i] + (1.0 - alpha) * out[i - 1];
  for (Eigen::Index i = 0; i < period - 1; ++i) out[i] = out[period - 1];
  return out;
}

struct MacdParams {
  int fast = 12;
  int slow = 26;
  int signal = 9;
};

/// MACD line EMA(fast) - EMA(slow) per asset, backfilled to the first row where
/// the slow EMA is defined. Also adds the signal line when the series is long enough.
inline MarketFrame compute_macd(const MarketFrame& frame, const MacdParams& p = {}) {
  const auto T = static_cast<Eigen::Index>(frame.steps());
  require(p.fast >= 1 && p.slow > p.fast && p.signal >= 1, ErrorCode::InvalidConfig, "invalid MACD periods");
  require(T > p.slow, ErrorCode::SeriesTooShort,
          "MACD needs more than " + std::to_string(p.slow) + " rows, frame has " + std::to_string(T));
  const Eigen::Index first = p.slow - 1;
  const bool with_signal = T - first >= p.signal;
  Matrix macd(T, frame.close().cols());
  Matrix signal(T, frame.close().cols());
  for (Eigen::Index c = 0; c < macd.cols(); ++c) {
    const Vector line = ema(frame.close().col(c), p.fast) - ema(frame.close().col(c), p.slow);
    macd.col(c) = line;
    macd.col(c).head(first).setConstant(line[first]);
    if (with_signal) {
      const Vector sig = ema(line.tail(T - first), p.signal);
      signal.col(c).tail(T - first) = sig;
      signal.col(c).head(first).setConstant(sig[0]);
    }
  }
  auto out = frame.with_indicator(kMacd, std::move(macd));
  return with_signal ? out.with_indicator(kMacdSignal, std::move(signal)) : out;
}

/// Wilder RSI of one series. Average gain/loss are seeded with the simple mean of the
/// first `period` changes, then smoothed as avg = (avg*(period-1) + x)/period.
inline Vector rsi(const Eigen::Ref<const Vector>& close, int period) {
  const auto T = close.size();
  require(period >= 1 && T > period, ErrorCode::SeriesTooShort,
          "RSI(" + std::to_string(period) + ") needs more than " + std::to_string(period) + " values");
  auto value = [](double gain, double loss) {
    if (loss == 0.0) return gain == 0.0 ? 50.0 : 100.0;
    return std::clamp(100.0 - 100.0 / (1.0 + gain / loss), 0.0, 100.0);
  };
  double gain = 0.0, loss = 0.0;
  for (Eigen::Index i = 1; i <= period; ++i) {
    const double d = close[i] - close[i - 1];
    gain += std::max(d, 0.0);
    loss += std::max(-d, 0.0);
  }
  gain /= period;
  loss /= period;
  Vector out(T);
  out[period] = value(gain, loss);
  for (Eigen::Index i = period + 1; i < T; ++i) {
    const double d = close[i] - close[i - 1];
    gain = (gain * (period - 1) + std::max(d, 0.0)) / period;
    loss = (loss * (period - 1) + std::max(-d, 0.0)) / period;
    out[i] = value(gain, loss);
  }
  out.head(period).setConstant(out[period]);
  return out;
}

inline MarketFrame compute_rsi(const MarketFrame& frame, int period = 14) {
  const auto T = static_cast<Eigen::Index>(frame.steps());
  require(T > period, ErrorCode::SeriesTooShort,
          "RSI needs more than " + std::to_string(period) + " rows, frame has " + std::to_string(T));
  Matrix out(T, frame.close().cols());
  for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c) = rsi(frame.close().col(c), period);
  return frame.with_indicator(kRsi, std::move(out));
}

/// MACD(12, 26, 9) and RSI(14).
inline MarketFrame with_default_indicators(const MarketFrame& frame) { return compute_rsi(compute_macd(frame)); }

}  // namespace marketgym::market_data
