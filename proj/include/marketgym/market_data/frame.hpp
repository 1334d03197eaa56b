#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "marketgym/error.hpp"
#include "marketgym/linalg.hpp"
#include "marketgym/time.hpp"

namespace marketgym::market_data {

inline constexpr const char* kMacd = "macd";
inline constexpr const char* kMacdSignal = "macd_signal";
inline constexpr const char* kRsi = "rsi";

struct Bar {
  std::string ticker;
  Timestamp timestamp;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;
};

/// Describes the first OHLCV invariant the bar breaks, or nullopt if it is valid.
inline std::optional<std::string> bar_violation(double open, double high, double low, double close, double volume) {
  if (!(std::isfinite(open) && std::isfinite(high) && std::isfinite(low) && std::isfinite(close) &&
        std::isfinite(volume)))
    return "non-finite field";
  if (open <= 0 || high <= 0 || low <= 0 || close <= 0) return "prices must be strictly positive";
  if (volume < 0) return "negative volume";
  if (low > high) return "low > high";
  if (open < low || open > high) return "open outside [low, high]";
  if (close < low || close > high) return "close outside [low, high]";
  return std::nullopt;
}

inline std::optional<std::string> bar_violation(const Bar& b) {
  return bar_violation(b.open, b.high, b.low, b.close, b.volume);
}

/// Bucket index of an instant at a granularity (UTC day, hour, or minute).
inline std::int64_t bucket_of(Timestamp t, Granularity g) {
  const std::int64_t p = period_seconds(g);
  return t.seconds >= 0 ? t.seconds / p : -((-t.seconds + p - 1) / p);
}

/// Aligned multi-asset OHLCV panel. Rows are timestamps, columns are tickers.
/// Immutable once constructed; transformations return new frames.
class MarketFrame {
 public:
  MarketFrame(std::vector<std::string> tickers, std::vector<Timestamp> timestamps, Granularity granularity,
              Matrix open, Matrix high, Matrix low, Matrix close, Matrix volume,
              std::map<std::string, Matrix> indicators = {})
      : tickers_(std::move(tickers)),
        timestamps_(std::move(timestamps)),
        granularity_(granularity),
        open_(std::move(open)),
        high_(std::move(high)),
        low_(std::move(low)),
        close_(std::move(close)),
        volume_(std::move(volume)),
        indicators_(std::move(indicators)) {
    validate();
  }

  std::size_t assets() const { return tickers_.size(); }
  std::size_t steps() const { return timestamps_.size(); }

  const std::vector<std::string>& tickers() const { return tickers_; }
  const std::vector<Timestamp>& timestamps() const { return timestamps_; }
  Granularity granularity() const { return granularity_; }

  const Matrix& open() const { return open_; }
  const Matrix& high() const { return high_; }
  const Matrix& low() const { return low_; }
  const Matrix& close() const { return close_; }
  const Matrix& volume() const { return volume_; }

  const std::map<std::string, Matrix>& indicators() const { return indicators_; }
  bool has_indicator(const std::string& name) const { return indicators_.count(name) != 0; }

  const Matrix& indicator(const std::string& name) const {
    const auto it = indicators_.find(name);
    if (it == indicators_.end()) fail(ErrorCode::MissingIndicator, "frame has no indicator '" + name + "'");
    return it->second;
  }

  MarketFrame with_indicator(const std::string& name, Matrix values) const {
    auto indicators = indicators_;
    indicators[name] = std::move(values);
    return MarketFrame(tickers_, timestamps_, granularity_, open_, high_, low_, close_, volume_,
                       std::move(indicators));
  }

  /// Rows [begin, end).
  MarketFrame slice(std::size_t begin, std::size_t end) const {
    require(begin < end && end <= steps(), ErrorCode::EmptySplit, "row slice out of range");
    const auto rows = static_cast<Eigen::Index>(end - begin);
    const auto b = static_cast<Eigen::Index>(begin);
    std::map<std::string, Matrix> indicators;
    for (const auto& [name, m] : indicators_) indicators[name] = m.middleRows(b, rows);
    return MarketFrame(tickers_, {timestamps_.begin() + b, timestamps_.begin() + b + rows}, granularity_,
                       open_.middleRows(b, rows), high_.middleRows(b, rows), low_.middleRows(b, rows),
                       close_.middleRows(b, rows), volume_.middleRows(b, rows), std::move(indicators));
  }

  /// Keeps the listed tickers, in the given order.
  MarketFrame select(const std::vector<std::string>& tickers) const {
    std::vector<Eigen::Index> cols;
    for (const auto& t : tickers) {
      const auto it = std::find(tickers_.begin(), tickers_.end(), t);
      if (it == tickers_.end()) fail(ErrorCode::InvalidConfig, "unknown ticker '" + t + "'");
      cols.push_back(it - tickers_.begin());
    }
    auto pick = [&](const Matrix& m) {
      Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
      return out;
    };
    std::map<std::string, Matrix> indicators;
    for (const auto& [name, m] : indicators_) indicators[name] = pick(m);
    return MarketFrame(tickers, timestamps_, granularity_, pick(open_), pick(high_), pick(low_), pick(close_),
                       pick(volume_), std::move(indicators));
  }

  Bar bar(std::size_t row, std::size_t asset) const {
    const auto r = static_cast<Eigen::Index>(row);
    const auto c = static_cast<Eigen::Index>(asset);
    return Bar{tickers_[asset], timestamps_[row], open_(r, c), high_(r, c), low_(r, c), close_(r, c),
               volume_(r, c)};
  }

  /// Index of the first timestamp >= t (steps() if none).
  std::size_t lower_bound(Timestamp t) const {
    return static_cast<std::size_t>(std::lower_bound(timestamps_.begin(), timestamps_.end(), t) -
                                    timestamps_.begin());
  }

  friend bool operator==(const MarketFrame& a, const MarketFrame& b) {
    return a.tickers_ == b.tickers_ && a.timestamps_ == b.timestamps_ && a.granularity_ == b.granularity_ &&
           a.open_ == b.open_ && a.high_ == b.high_ && a.low_ == b.low_ && a.close_ == b.close_ &&
           a.volume_ == b.volume_ && a.indicators_ == b.indicators_;
  }

 private:
  void validate() const {
    const auto n = static_cast<Eigen::Index>(tickers_.size());
    const auto t = static_cast<Eigen::Index>(timestamps_.size());
    require(n > 0, ErrorCode::InvalidConfig, "frame needs at least one ticker");
    require(t > 0, ErrorCode::EmptyIntersection, "frame needs at least one timestamp");
    for (const Matrix* m : {&open_, &high_, &low_, &close_, &volume_})
      require(m->rows() == t && m->cols() == n, ErrorCode::ShapeMismatch, "price panel shape mismatch");
    for (const auto& [name, m] : indicators_)
      require(m.rows() == t && m.cols() == n, ErrorCode::ShapeMismatch, "indicator '" + name + "' shape mismatch");
    for (std::size_t i = 1; i < timestamps_.size(); ++i)
      require(bucket_of(timestamps_[i - 1], granularity_) < bucket_of(timestamps_[i], granularity_),
              ErrorCode::InvalidConfig,
              "timestamps must be strictly increasing at " + std::string(to_string(granularity_)) +
                  " granularity (" + format_timestamp(timestamps_[i]) + ")");
    for (Eigen::Index r = 0; r < t; ++r)
      for (Eigen::Index c = 0; c < n; ++c)
        if (auto why = bar_violation(open_(r, c), high_(r, c), low_(r, c), close_(r, c), volume_(r, c)))
          fail(ErrorCode::MalformedRow, tickers_[static_cast<std::size_t>(c)] + " at " +
                                            format_timestamp(timestamps_[static_cast<std::size_t>(r)]) + ": " +
                                            *why);
  }

  std::vector<std::string> tickers_;
  std::vector<Timestamp> timestamps_;
  Granularity granularity_;
  Matrix open_, high_, low_, close_, volume_;
  std::map<std::string, Matrix> indicators_;
};

}  // namespace marketgym::market_data
