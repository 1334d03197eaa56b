#pragma once

#include <ostream>
#include <vector>

#include "marketgym/error.hpp"
#include "marketgym/linalg.hpp"
#include "marketgym/time.hpp"

namespace marketgym::backtest {

/// Portfolio values v_0..v_T at successive instants; v_0 is the initial capital.
struct EquityCurve {
  std::vector<Timestamp> timestamps;
  std::vector<double> values;
  double periods_per_year = 252.0;

  std::size_t periods() const { return values.empty() ? 0 : values.size() - 1; }

  void validate() const {
    require(values.size() >= 2, ErrorCode::InsufficientHistory, "equity curve needs at least two values");
    require(timestamps.empty() || timestamps.size() == values.size(), ErrorCode::ShapeMismatch,
            "equity curve timestamps and values differ in length");
    for (const double v : values)
      require(v > 0 && std::isfinite(v), ErrorCode::NonPositiveValue, "equity curve values must be positive");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
      require(timestamps[i - 1] < timestamps[i], ErrorCode::InvalidConfig, "equity curve timestamps must increase");
    require(periods_per_year > 0, ErrorCode::InvalidConfig, "periods per year must be > 0");
  }

  /// Simple per-period returns v_t / v_{t-1} - 1.
  std::vector<double> returns() const {
    std::vector<double> r;
    for (std::size_t i = 1; i < values.size(); ++i) r.push_back(values[i] / values[i - 1] - 1.0);
    return r;
  }
};

/// `timestamp,value` per line, for external plotting.
inline void write_curve_csv(std::ostream& out, const EquityCurve& curve) {
  out << "timestamp,value\n";
  for (std::size_t i = 0; i < curve.values.size(); ++i)
    out << (curve.timestamps.empty() ? std::to_string(i) : format_timestamp(curve.timestamps[i])) << ','
        << format_double(curve.values[i]) << '\n';
}

}  // namespace marketgym::backtest
