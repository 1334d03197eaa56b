#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "marketgym/market_data/frame.hpp"

namespace marketgym::market_data {

inline constexpr std::array<const char*, 7> kCanonicalColumns = {"ticker", "timestamp", "open", "high",
                                                                 "low",    "close",     "volume"};

/// Maps canonical field names to the column headers used by a particular file.
/// Fields without an entry use their canonical name.
struct CsvSchema {
  std::map<std::string, std::string> columns;

  std::string column_for(const std::string& field) const {
    const auto it = columns.find(field);
    return it == columns.end() ? field : it->second;
  }

  friend bool operator==(const CsvSchema&, const CsvSchema&) = default;
};

struct IngestOptions {
  std::optional<Granularity> granularity;  // inferred from the smallest gap when absent
  bool forward_fill = false;               // opt-in: union of timestamps, gaps filled from last close
  std::vector<std::string> tickers;        // empty keeps every ticker
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

inline bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline Granularity infer_granularity(const std::vector<Timestamp>& sorted) {
  std::int64_t gap = 0;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const auto d = sorted[i].seconds - sorted[i - 1].seconds;
    if (d > 0 && (gap == 0 || d < gap)) gap = d;
  }
  if (gap == 0 || gap >= 86400) return Granularity::daily;
  if (gap >= 3600) return Granularity::hourly;
  return Granularity::minute;
}

}  // namespace detail

/// Parses bar rows from a CSV stream and aligns them into a frame.
/// Tickers are ordered ascending; timestamps are the intersection across tickers
/// unless forward filling is requested.
inline MarketFrame read_csv(std::istream& in, const CsvSchema& schema = {}, const IngestOptions& options = {}) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      header = detail::split_csv_line(line);
      break;
    }
  }
  require(!header.empty(), ErrorCode::MissingColumn, "missing header row");
  if (!header.empty() && header[0].size() >= 3 && header[0].compare(0, 3, "\xEF\xBB\xBF") == 0)
    header[0] = header[0].substr(3);

  std::array<std::size_t, kCanonicalColumns.size()> index{};
  for (std::size_t f = 0; f < kCanonicalColumns.size(); ++f) {
    const std::string col = schema.column_for(kCanonicalColumns[f]);
    const auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end()) fail(ErrorCode::MissingColumn, "column '" + col + "' not found in header");
    index[f] = static_cast<std::size_t>(it - header.begin());
  }

  const std::set<std::string> keep(options.tickers.begin(), options.tickers.end());
  std::map<std::string, std::map<Timestamp, Bar>> by_ticker;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const auto where = "line " + std::to_string(line_no);
    if (fields.size() != header.size())
      fail(ErrorCode::MalformedRow, where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
    Bar bar;
    bar.ticker = fields[index[0]];
    if (bar.ticker.empty()) fail(ErrorCode::MalformedRow, where + ": empty ticker");
    const auto ts = parse_timestamp(fields[index[1]]);
    if (!ts) fail(ErrorCode::MalformedRow, where + ": bad timestamp '" + fields[index[1]] + "'");
    bar.timestamp = *ts;
    double* targets[] = {&bar.open, &bar.high, &bar.low, &bar.close, &bar.volume};
    for (std::size_t f = 2; f < kCanonicalColumns.size(); ++f)
      if (!detail::parse_number(fields[index[f]], *targets[f - 2]))
        fail(ErrorCode::MalformedRow,
             where + ": bad " + std::string(kCanonicalColumns[f]) + " '" + fields[index[f]] + "'");
    if (auto why = bar_violation(bar)) fail(ErrorCode::MalformedRow, where + ": " + *why);
    if (!keep.empty() && !keep.count(bar.ticker)) continue;
    auto& series = by_ticker[bar.ticker];
    if (!series.emplace(bar.timestamp, bar).second)
      fail(ErrorCode::DuplicateBar, bar.ticker + " at " + format_timestamp(bar.timestamp) + " (" + where + ")");
  }
  require(!by_ticker.empty(), ErrorCode::EmptyIntersection, "no bars in input");
  for (const auto& t : options.tickers)
    require(by_ticker.count(t) != 0, ErrorCode::InvalidConfig, "ticker '" + t + "' not present in input");

  std::vector<Timestamp> timestamps;
  if (options.forward_fill) {
    std::set<Timestamp> all;
    Timestamp latest_start{};
    bool first = true;
    for (const auto& [_, series] : by_ticker) {
      for (const auto& [ts, __] : series) all.insert(ts);
      const Timestamp start = series.begin()->first;
      if (first || start > latest_start) latest_start = start;
      first = false;
    }
    for (const auto ts : all)
      if (ts >= latest_start) timestamps.push_back(ts);
  } else {
    auto it = by_ticker.begin();
    for (const auto& [ts, _] : it->second) timestamps.push_back(ts);
    for (++it; it != by_ticker.end(); ++it) {
      std::vector<Timestamp> kept;
      for (const auto ts : timestamps)
        if (it->second.count(ts)) kept.push_back(ts);
      timestamps = std::move(kept);
    }
  }
  require(!timestamps.empty(), ErrorCode::EmptyIntersection, "no timestamp is shared by all tickers");

  const auto T = static_cast<Eigen::Index>(timestamps.size());
  const auto n = static_cast<Eigen::Index>(by_ticker.size());
  Matrix open(T, n), high(T, n), low(T, n), close(T, n), volume(T, n);
  std::vector<std::string> tickers;
  Eigen::Index c = 0;
  for (const auto& [ticker, series] : by_ticker) {
    tickers.push_back(ticker);
    const Bar* last = nullptr;
    for (Eigen::Index r = 0; r < T; ++r) {
      const auto it = series.find(timestamps[static_cast<std::size_t>(r)]);
      if (it != series.end()) {
        last = &it->second;
        open(r, c) = last->open;
        high(r, c) = last->high;
        low(r, c) = last->low;
        close(r, c) = last->close;
        volume(r, c) = last->volume;
      } else {
        // Forward fill: flat bar at the previous close with no volume. Preceded by
        // at least one real bar because timestamps start at the latest first bar.
        if (!last) {
          const auto prev = series.lower_bound(timestamps[static_cast<std::size_t>(r)]);
          last = &std::prev(prev)->second;
        }
        open(r, c) = high(r, c) = low(r, c) = close(r, c) = last->close;
        volume(r, c) = 0.0;
      }
    }
    ++c;
  }
  const Granularity granularity = options.granularity.value_or(detail::infer_granularity(timestamps));
  return MarketFrame(std::move(tickers), std::move(timestamps), granularity, std::move(open), std::move(high),
                     std::move(low), std::move(close), std::move(volume));
}

inline MarketFrame ingest_csv(const std::filesystem::path& path, const CsvSchema& schema = {},
                              const IngestOptions& options = {}) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return read_csv(in, schema, options);
}

/// Canonical export: header `ticker,timestamp,open,high,low,close,volume`, rows sorted by
/// (timestamp, ticker), shortest round-trip decimals.
inline void write_csv(std::ostream& out, const MarketFrame& frame) {
  for (std::size_t f = 0; f < kCanonicalColumns.size(); ++f) out << (f ? "," : "") << kCanonicalColumns[f];
  out << '\n';
  for (std::size_t r = 0; r < frame.steps(); ++r) {
    for (std::size_t c = 0; c < frame.assets(); ++c) {
      const Bar b = frame.bar(r, c);
      out << b.ticker << ',' << format_timestamp(b.timestamp) << ',' << format_double(b.open) << ','
          << format_double(b.high) << ',' << format_double(b.low) << ',' << format_double(b.close) << ','
          << format_double(b.volume) << '\n';
    }
  }
}

inline std::string to_csv(const MarketFrame& frame) {
  std::ostringstream out;
  write_csv(out, frame);
  return out.str();
}

}  // namespace marketgym::market_data
