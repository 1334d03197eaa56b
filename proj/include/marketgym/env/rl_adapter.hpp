#pragma once

#include "marketgym/env/trading_env.hpp"
#include "marketgym/rl/environment.hpp"

namespace marketgym::env {

/// Exposes a TradingEnvironment through the learner-facing interface.
/// Discrete shares (single asset) become the integer actions -k..k.
class TradingTask final : public rl::Environment {
 public:
  explicit TradingTask(TradingEnvironment& env) : env_(env) {}

  std::size_t observation_size() const override { return env_.observation_size(); }

  rl::ActionSpace action_space() const override {
    const auto& spec = env_.config().action;
    if (spec.kind == ActionKind::discrete_shares && env_.assets() == 1)
      return rl::ActionSpace::discrete(spec.discrete_count(), -static_cast<std::int64_t>(spec.max_shares));
    return rl::ActionSpace::continuous(env_.action_size());
  }

  Vector reset() override { return env_.reset(); }

  rl::Transition step(std::span<const double> action) override {
    const auto& spec = env_.config().action;
    if (spec.kind == ActionKind::discrete_shares && env_.assets() > 1) {
      // Multi-asset discrete shares are driven by a continuous head scaled to [-k, k].
      std::vector<double> shares(action.begin(), action.end());
      for (auto& a : shares) a = std::clamp(a, -1.0, 1.0) * spec.max_shares;
      auto out = env_.step(shares);
      return {std::move(out.observation), out.reward, out.done};
    }
    auto out = env_.step(action);
    return {std::move(out.observation), out.reward, out.done};
  }

  TradingEnvironment& environment() { return env_; }

 private:
  TradingEnvironment& env_;
};

}  // namespace marketgym::env
