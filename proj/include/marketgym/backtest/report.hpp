#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "marketgym/backtest/metrics.hpp"

namespace marketgym::backtest {

inline constexpr int kReportSchemaVersion = 1;

struct MetricsReport {
  std::string strategy;
  double initial_value = 0.0;
  double final_value = 0.0;
  double annualized_return = 0.0;
  double annualized_std = 0.0;
  std::optional<double> sharpe;  // empty when return variance is zero
  double max_drawdown = 0.0;
  std::optional<Timestamp> start, end;
  std::optional<std::uint64_t> seed;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline MetricsReport metrics_report(const EquityCurve& curve, std::string strategy,
                                    std::optional<std::uint64_t> seed = std::nullopt, double risk_free = 0.0) {
  curve.validate();
  MetricsReport r;
  r.strategy = std::move(strategy);
  r.initial_value = curve.values.front();
  r.final_value = curve.values.back();
  r.annualized_return = annualized_return(curve);
  r.annualized_std = curve.periods() >= 2 ? annualized_std(curve) : 0.0;
  if (curve.periods() >= 2 && return_moments(curve).sample_std() > 0) r.sharpe = sharpe_ratio(curve, risk_free);
  r.max_drawdown = max_drawdown(curve);
  if (!curve.timestamps.empty()) {
    r.start = curve.timestamps.front();
    r.end = curve.timestamps.back();
  }
  r.seed = seed;
  return r;
}

inline nlohmann::ordered_json report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["strategy"] = r.strategy;
  nlohmann::ordered_json range = nullptr;
  if (r.start && r.end) range = {{"start", format_timestamp(*r.start)}, {"end", format_timestamp(*r.end)}};
  j["date_range"] = range;
  j["seed"] = r.seed ? nlohmann::ordered_json(*r.seed) : nlohmann::ordered_json(nullptr);
  j["initial_value"] = r.initial_value;
  j["final_value"] = r.final_value;
  j["annualized_return"] = r.annualized_return;
  j["annualized_std"] = r.annualized_std;
  j["sharpe"] = r.sharpe ? nlohmann::ordered_json(*r.sharpe) : nlohmann::ordered_json(nullptr);
  j["max_drawdown"] = r.max_drawdown;
  return j;
}

inline std::string report_to_string(const MetricsReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline MetricsReport report_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("schema_version") && j["schema_version"].is_number_integer(),
          ErrorCode::SchemaMismatch, "report has no schema_version");
  const int version = j["schema_version"].get<int>();
  require(version == kReportSchemaVersion, ErrorCode::SchemaMismatch,
          "report schema_version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kReportSchemaVersion) + ")");
  try {
    MetricsReport r;
    r.strategy = j.at("strategy").get<std::string>();
    r.initial_value = j.at("initial_value").get<double>();
    r.final_value = j.at("final_value").get<double>();
    r.annualized_return = j.at("annualized_return").get<double>();
    r.annualized_std = j.at("annualized_std").get<double>();
    if (!j.at("sharpe").is_null()) r.sharpe = j["sharpe"].get<double>();
    r.max_drawdown = j.at("max_drawdown").get<double>();
    if (j.contains("date_range") && !j["date_range"].is_null()) {
      r.start = parse_timestamp(j["date_range"].at("start").get<std::string>());
      r.end = parse_timestamp(j["date_range"].at("end").get<std::string>());
    }
    if (j.contains("seed") && !j["seed"].is_null()) r.seed = j["seed"].get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, std::string("malformed report: ") + e.what());
  }
}

// Table formatting follows the usual performance-table conventions: whole currency
// units with thousands separators, percents and Sharpe to two decimals.

inline std::string format_currency(double v) {
  const long long whole = std::llround(v);
  std::string digits = std::to_string(whole < 0 ? -whole : whole);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return whole < 0 ? "-" + out : out;
}

inline std::string format_fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

inline std::string format_percent(double fraction, std::string_view percent_sign = "%") {
  return format_fixed2(fraction * 100.0) + std::string(percent_sign);
}

inline std::string format_sharpe(const std::optional<double>& s) { return s ? format_fixed2(*s) : "n/a"; }

inline std::string format_date_range(Timestamp start, Timestamp end) {
  return format_report_date(start) + "-" + format_report_date(end);
}

enum class TableFormat { text, csv, latex };

inline std::optional<TableFormat> parse_table_format(std::string_view s) {
  if (s == "text") return TableFormat::text;
  if (s == "csv") return TableFormat::csv;
  if (s == "latex") return TableFormat::latex;
  return std::nullopt;
}

inline constexpr const char* kSharpeFootnote =
    "Sharpe ratio: annualized mean over sample std of simple per-period returns, risk-free rate 0. "
    "The trailing-Sharpe reward uses dollar value differences instead.";

/// One column per strategy, in the order given.
struct ComparisonTable {
  std::string label;  // top-left cell, usually the date range
  std::vector<MetricsReport> columns;

  /// The six rows as display strings, in table order.
  std::vector<std::pair<std::string, std::vector<std::string>>> cells(std::string_view percent_sign) const {
    std::vector<std::pair<std::string, std::vector<std::string>>> rows = {
        {"Initial value", {}}, {"Final value", {}},  {"Annualized return", {}},
        {"Annualized Std", {}}, {"Sharpe ratio", {}}, {"Max drawdown", {}}};
    for (const auto& r : columns) {
      rows[0].second.push_back(format_currency(r.initial_value));
      rows[1].second.push_back(format_currency(r.final_value));
      rows[2].second.push_back(format_percent(r.annualized_return, percent_sign));
      rows[3].second.push_back(format_percent(r.annualized_std, percent_sign));
      rows[4].second.push_back(format_sharpe(r.sharpe));
      rows[5].second.push_back(format_percent(r.max_drawdown, percent_sign));
    }
    return rows;
  }

  std::string render(TableFormat format) const {
    switch (format) {
      case TableFormat::text: return render_text();
      case TableFormat::csv: return render_csv();
      case TableFormat::latex: return render_latex();
    }
    return {};
  }

  std::string render_text() const {
    const auto rows = cells("%");
    std::vector<std::size_t> width(columns.size() + 1, label.size());
    for (const auto& [name, _] : rows) width[0] = std::max(width[0], name.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      width[c + 1] = columns[c].strategy.size();
      for (const auto& row : rows) width[c + 1] = std::max(width[c + 1], row.second[c].size());
    }
    std::ostringstream out;
    auto line = [&](const std::string& head, auto&& cell) {
      out << head << std::string(width[0] - head.size(), ' ');
      for (std::size_t c = 0; c < columns.size(); ++c) {
        const std::string& v = cell(c);
        out << " | " << std::string(width[c + 1] - v.size(), ' ') << v;
      }
      out << '\n';
    };
    line(label, [&](std::size_t c) -> const std::string& { return columns[c].strategy; });
    std::size_t total = width[0];
    for (std::size_t c = 1; c < width.size(); ++c) total += 3 + width[c];
    out << std::string(total, '-') << '\n';
    for (const auto& [name, values] : rows) line(name, [&](std::size_t c) -> const std::string& { return values[c]; });
    out << '\n' << kSharpeFootnote << '\n';
    return out.str();
  }

  /// Raw values at full precision; an empty cell stands for an undefined Sharpe ratio.
  std::string render_csv() const {
    std::ostringstream out;
    out << "metric";
    for (const auto& r : columns) out << ',' << csv_field(r.strategy);
    out << '\n';
    auto row = [&](const char* name, auto&& get) {
      out << name;
      for (const auto& r : columns) out << ',' << get(r);
      out << '\n';
    };
    row("initial_value", [](const MetricsReport& r) { return format_double(r.initial_value); });
    row("final_value", [](const MetricsReport& r) { return format_double(r.final_value); });
    row("annualized_return", [](const MetricsReport& r) { return format_double(r.annualized_return); });
    row("annualized_std", [](const MetricsReport& r) { return format_double(r.annualized_std); });
    row("sharpe", [](const MetricsReport& r) { return r.sharpe ? format_double(*r.sharpe) : std::string(); });
    row("max_drawdown", [](const MetricsReport& r) { return format_double(r.max_drawdown); });
    return out.str();
  }

  std::string render_latex() const {
    const auto rows = cells("\\%");
    std::ostringstream out;
    out << "\\begin{tabular}{|l|" << repeat("c|", columns.size()) << "}\\hline\n";
    out << latex_escape(label);
    for (const auto& r : columns) out << " & " << latex_escape(r.strategy);
    out << " \\\\\n\\hline\n";
    for (const auto& [name, values] : rows) {
      out << name;
      for (const auto& v : values) out << " & " << v;
      out << " \\\\\n";
    }
    out << "\\hline\n\\end{tabular}\n";
    return out.str();
  }

 private:
  static std::string repeat(std::string_view s, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) out += s;
    return out;
  }
  static std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
  }
  static std::string latex_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '&' || c == '%' || c == '_' || c == '#' || c == '$') out += '\\';
      out += c;
    }
    return out;
  }
};

/// Builds the comparison table. The label defaults to the shared date range of the
/// reports when they all have the same one.
inline ComparisonTable compare(std::vector<MetricsReport> reports, std::optional<std::string> label = std::nullopt) {
  require(!reports.empty(), ErrorCode::InvalidConfig, "comparison needs at least one report");
  ComparisonTable table;
  if (label) {
    table.label = *label;
  } else if (reports.front().start && reports.front().end) {
    bool shared = true;
    for (const auto& r : reports) shared = shared && r.start == reports.front().start && r.end == reports.front().end;
    if (shared) table.label = format_date_range(*reports.front().start, *reports.front().end);
  }
  table.columns = std::move(reports);
  return table;
}

}  // namespace marketgym::backtest
