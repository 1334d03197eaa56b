#pragma once

#include <string>
#include <vector>

#include "marketgym/market_data/frame.hpp"

namespace marketgym::market_data {

/// Half-open interval [begin, end).
struct TimeRange {
  Timestamp begin;
  Timestamp end;

  bool contains(Timestamp t) const { return begin <= t && t < end; }
  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

/// Chronologically ordered, non-overlapping train/validation/test ranges.
class SplitSpec {
 public:
  SplitSpec(TimeRange train, TimeRange validation, TimeRange test)
      : train_(train), validation_(validation), test_(test) {
    for (const auto* r : {&train_, &validation_, &test_})
      require(r->begin < r->end, ErrorCode::InvalidSplit, "split range must have begin < end");
    require(train_.end <= validation_.begin && validation_.end <= test_.begin, ErrorCode::InvalidSplit,
            "split ranges must be non-overlapping and ordered train < validation < test");
  }

  const TimeRange& train() const { return train_; }
  const TimeRange& validation() const { return validation_; }
  const TimeRange& test() const { return test_; }

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;

 private:
  TimeRange train_, validation_, test_;
};

struct SplitFrames {
  MarketFrame train;
  MarketFrame validation;
  MarketFrame test;
};

/// Rows of `frame` whose timestamps fall in `range`.
inline MarketFrame slice_range(const MarketFrame& frame, const TimeRange& range, const std::string& which) {
  const std::size_t b = frame.lower_bound(range.begin);
  const std::size_t e = frame.lower_bound(range.end);
  if (b >= e) fail(ErrorCode::EmptySplit, which + " range contains no timestamps of the frame");
  return frame.slice(b, e);
}

inline SplitFrames split(const MarketFrame& frame, const SplitSpec& spec) {
  return SplitFrames{slice_range(frame, spec.train(), "train"), slice_range(frame, spec.validation(), "validation"),
                     slice_range(frame, spec.test(), "test")};
}

namespace detail {

/// Timestamp bounding row index `i` from above (exclusive end of rows < i).
inline Timestamp row_boundary(const MarketFrame& frame, std::size_t i) {
  const auto& ts = frame.timestamps();
  return i < ts.size() ? ts[i] : Timestamp{ts.back().seconds + 1};
}

}  // namespace detail

/// Split spec covering rows [a, b), [b, c), [c, d).
inline SplitSpec index_split(const MarketFrame& frame, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  require(a < b && b < c && c < d && d <= frame.steps(), ErrorCode::InvalidSplit, "invalid row boundaries");
  const auto& ts = frame.timestamps();
  return SplitSpec({ts[a], detail::row_boundary(frame, b)}, {ts[b], detail::row_boundary(frame, c)},
                   {ts[c], detail::row_boundary(frame, d)});
}

/// Walk-forward windows: each window is train_len + val_len + test_len contiguous rows,
/// starting at 0 and advancing by `stride`; a trailing partial window is dropped.
inline std::vector<SplitSpec> rolling_windows(const MarketFrame& frame, std::size_t train_len, std::size_t val_len,
                                              std::size_t test_len, std::size_t stride) {
  require(stride >= 1, ErrorCode::InvalidConfig, "stride must be >= 1");
  require(train_len >= 1 && val_len >= 1 && test_len >= 1, ErrorCode::InvalidConfig,
          "window segments must be non-empty");
  const std::size_t total = train_len + val_len + test_len;
  const std::size_t T = frame.steps();
  if (total > T)
    fail(ErrorCode::WindowTooLarge,
         "window of " + std::to_string(total) + " rows exceeds frame length " + std::to_string(T));
  std::vector<SplitSpec> out;
  for (std::size_t start = 0; start + total <= T; start += stride)
    out.push_back(index_split(frame, start, start + train_len, start + train_len + val_len, start + total));
  return out;
}

}  // namespace marketgym::market_data
