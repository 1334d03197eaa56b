#pragma once

#include <cmath>
#include <span>

#include "marketgym/error.hpp"

namespace marketgym::env {

inline double reward_delta_value(double value, double next_value) { return next_value - value; }

inline double reward_log_return(double value, double next_value) {
  require(value > 0 && next_value > 0, ErrorCode::NonPositiveValue, "log return needs positive values");
  return std::log(next_value / value);
}

/// mean(R)/std(R) over the last `window` differences R_t = v_t - v_{t-1}
/// (fewer if the series is shorter). Sample standard deviation; 0 when it vanishes.
inline double reward_trailing_sharpe(std::span<const double> values, std::size_t window) {
  require(window >= 2, ErrorCode::WindowTooShort, "trailing Sharpe window must be >= 2");
  const std::size_t diffs = values.size() < 2 ? 0 : std::min(window, values.size() - 1);
  require(diffs >= 2, ErrorCode::WindowTooShort, "trailing Sharpe needs at least 2 value differences");
  const std::size_t first = values.size() - diffs;
  double mean = 0.0;
  for (std::size_t i = first; i < values.size(); ++i) mean += values[i] - values[i - 1];
  mean /= static_cast<double>(diffs);
  double ss = 0.0;
  for (std::size_t i = first; i < values.size(); ++i) {
    const double d = values[i] - values[i - 1] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(diffs - 1));
  return sd == 0.0 ? 0.0 : mean / sd;
}

}  // namespace marketgym::env
