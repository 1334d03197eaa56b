#pragma once

#include <algorithm>
#include <vector>

#include "marketgym/market_data/frame.hpp"

namespace marketgym::market_data {

/// Aggregates bars into coarser UTC buckets: first open, max high, min low,
/// last close, summed volume. Bucket timestamps are the bucket start.
/// Indicators are dropped; recompute them on the resampled frame.
inline MarketFrame resample(const MarketFrame& frame, Granularity target) {
  if (coarseness(target) < coarseness(frame.granularity()))
    fail(ErrorCode::CannotUpsample, "cannot resample " + std::string(to_string(frame.granularity())) + " bars to " +
                                        std::string(to_string(target)));
  if (target == frame.granularity()) {
    return MarketFrame(frame.tickers(), frame.timestamps(), target, frame.open(), frame.high(), frame.low(),
                       frame.close(), frame.volume());
  }

  const auto& ts = frame.timestamps();
  std::vector<std::size_t> starts;  // first source row of each bucket
  for (std::size_t r = 0; r < ts.size(); ++r)
    if (r == 0 || bucket_of(ts[r], target) != bucket_of(ts[r - 1], target)) starts.push_back(r);
  starts.push_back(ts.size());

  const auto B = static_cast<Eigen::Index>(starts.size() - 1);
  const auto n = static_cast<Eigen::Index>(frame.assets());
  Matrix open(B, n), high(B, n), low(B, n), close(B, n), volume(B, n);
  std::vector<Timestamp> stamps;
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto first = static_cast<Eigen::Index>(starts[static_cast<std::size_t>(b)]);
    const auto end = static_cast<Eigen::Index>(starts[static_cast<std::size_t>(b) + 1]);
    stamps.push_back(Timestamp{bucket_of(ts[static_cast<std::size_t>(first)], target) * period_seconds(target)});
    open.row(b) = frame.open().row(first);
    close.row(b) = frame.close().row(end - 1);
    high.row(b) = frame.high().middleRows(first, end - first).colwise().maxCoeff();
    low.row(b) = frame.low().middleRows(first, end - first).colwise().minCoeff();
    volume.row(b) = frame.volume().middleRows(first, end - first).colwise().sum();
  }
  return MarketFrame(frame.tickers(), std::move(stamps), target, std::move(open), std::move(high), std::move(low),
                     std::move(close), std::move(volume));
}

}  // namespace marketgym::market_data
