#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "marketgym/error.hpp"
#include "marketgym/linalg.hpp"

namespace marketgym::env {

enum class Task { single_stock, multi_stock, portfolio_allocation };
enum class ActionKind { discrete_shares, continuous_shares, simplex_weights };
enum class RewardKind { delta_value, log_return, trailing_sharpe };

struct ActionSpec {
  ActionKind kind = ActionKind::continuous_shares;
  int max_shares = 100;  // k; unused for simplex weights

  /// Number of legal per-asset actions for discrete shares: {-k, ..., k}.
  std::size_t discrete_count() const { return 2 * static_cast<std::size_t>(max_shares) + 1; }

  friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
};

struct CostModel {
  double flat_fee = 0.0;        // currency per executed trade
  double per_share_rate = 0.0;  // fraction of trade notional
  double half_spread = 0.0;     // currency per share, added to buys, subtracted from sells

  void validate() const {
    require(flat_fee >= 0 && per_share_rate >= 0 && half_spread >= 0 && std::isfinite(flat_fee) &&
                std::isfinite(per_share_rate) && std::isfinite(half_spread),
            ErrorCode::InvalidConfig, "cost model fields must be finite and >= 0");
  }

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

struct RewardSpec {
  RewardKind kind = RewardKind::delta_value;
  std::size_t window = 20;        // trailing Sharpe window, in value differences
  std::optional<double> scaling;  // default 1e-4 for delta_value, 1 otherwise

  double effective_scaling() const { return scaling.value_or(kind == RewardKind::delta_value ? 1e-4 : 1.0); }

  void validate() const {
    require(effective_scaling() > 0 && std::isfinite(effective_scaling()), ErrorCode::InvalidConfig,
            "reward scaling must be > 0");
    require(kind != RewardKind::trailing_sharpe || window >= 2, ErrorCode::InvalidConfig,
            "trailing Sharpe window must be >= 2");
  }

  friend bool operator==(const RewardSpec&, const RewardSpec&) = default;
};

struct TurbulenceGate {
  bool enabled = false;
  std::size_t lookback = 252;
  double threshold = 100.0;
  std::optional<double> ridge;  // default 1e-8 * trace(cov) / n

  void validate(std::size_t assets) const {
    if (!enabled) return;
    require(lookback > assets + 1, ErrorCode::InvalidConfig, "turbulence lookback must exceed n + 1");
    require(threshold > 0, ErrorCode::InvalidConfig, "turbulence threshold must be > 0");
    require(!ridge || *ridge >= 0, ErrorCode::InvalidConfig, "turbulence ridge must be >= 0");
  }

  friend bool operator==(const TurbulenceGate&, const TurbulenceGate&) = default;
};

/// Share trades per asset: positive buys, negative sells.
using Trades = std::vector<std::int64_t>;

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::single_stock: return "single_stock";
    case Task::multi_stock: return "multi_stock";
    case Task::portfolio_allocation: return "portfolio_allocation";
  }
  return "";
}

inline std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::discrete_shares: return "discrete";
    case ActionKind::continuous_shares: return "continuous";
    case ActionKind::simplex_weights: return "simplex";
  }
  return "";
}

inline std::string_view to_string(RewardKind k) {
  switch (k) {
    case RewardKind::delta_value: return "delta_value";
    case RewardKind::log_return: return "log_return";
    case RewardKind::trailing_sharpe: return "trailing_sharpe";
  }
  return "";
}

inline std::optional<Task> parse_task(std::string_view s) {
  if (s == "single_stock") return Task::single_stock;
  if (s == "multi_stock") return Task::multi_stock;
  if (s == "portfolio_allocation" || s == "portfolio") return Task::portfolio_allocation;
  return std::nullopt;
}

inline std::optional<ActionKind> parse_action_kind(std::string_view s) {
  if (s == "discrete") return ActionKind::discrete_shares;
  if (s == "continuous") return ActionKind::continuous_shares;
  if (s == "simplex") return ActionKind::simplex_weights;
  return std::nullopt;
}

inline std::optional<RewardKind> parse_reward_kind(std::string_view s) {
  if (s == "delta_value") return RewardKind::delta_value;
  if (s == "log_return") return RewardKind::log_return;
  if (s == "trailing_sharpe") return RewardKind::trailing_sharpe;
  return std::nullopt;
}

}  // namespace marketgym::env
