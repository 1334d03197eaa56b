#pragma once

#include <cmath>
#include <optional>

#include "marketgym/backtest/equity_curve.hpp"

namespace marketgym::backtest {

/// Streaming mean and sample variance (Welford).
class RunningMoments {
 public:
  void push(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / double(count_);
    m2_ += delta * (x - mean_);
  }
  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double sample_variance() const { return count_ < 2 ? 0.0 : m2_ / double(count_ - 1); }
  double sample_std() const { return std::sqrt(sample_variance()); }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline RunningMoments return_moments(const EquityCurve& curve) {
  RunningMoments m;
  for (std::size_t i = 1; i < curve.values.size(); ++i) m.push(curve.values[i] / curve.values[i - 1] - 1.0);
  return m;
}

/// (v_T / v_0)^(A / T) - 1.
inline double annualized_return(const EquityCurve& curve) {
  curve.validate();
  const double T = double(curve.periods());
  return std::pow(curve.values.back() / curve.values.front(), curve.periods_per_year / T) - 1.0;
}

/// Sample standard deviation of simple returns, scaled by sqrt(A).
inline double annualized_std(const EquityCurve& curve) {
  curve.validate();
  require(curve.periods() >= 2, ErrorCode::InsufficientHistory, "annualized std needs at least two periods");
  return return_moments(curve).sample_std() * std::sqrt(curve.periods_per_year);
}

/// mean(r - rf/A) / std(r) * sqrt(A); `risk_free` is an annual rate.
inline double sharpe_ratio(const EquityCurve& curve, double risk_free = 0.0) {
  curve.validate();
  require(curve.periods() >= 2, ErrorCode::InsufficientHistory, "Sharpe ratio needs at least two periods");
  const auto m = return_moments(curve);
  const double sd = m.sample_std();
  require(sd > 0, ErrorCode::ZeroVariance, "Sharpe ratio is undefined for zero return variance");
  return (m.mean() - risk_free / curve.periods_per_year) / sd * std::sqrt(curve.periods_per_year);
}

/// Largest fractional decline from a running peak, in one pass.
inline double max_drawdown(const EquityCurve& curve) {
  curve.validate();
  double peak = curve.values.front(), worst = 0.0;
  for (const double v : curve.values) {
    peak = std::max(peak, v);
    worst = std::max(worst, (peak - v) / peak);
  }
  return worst;
}

}  // namespace marketgym::backtest
