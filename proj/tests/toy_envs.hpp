#pragma once

#include <vector>

#include "marketgym/agents/rng.hpp"
#include "marketgym/rl/environment.hpp"

namespace toy {

using marketgym::Vector;
namespace rl = marketgym::rl;

/// Two states, two actions, never terminates. Action 0 stays, action 1 switches;
/// staying in state 1 pays 1, everything else pays 0. Observations are one-hot.
class ChainMdp final : public rl::Environment {
 public:
  static constexpr double reward(int s, int a) { return s == 1 && a == 0 ? 1.0 : 0.0; }
  static constexpr int next(int s, int a) { return a == 0 ? s : 1 - s; }

  std::size_t observation_size() const override { return 2; }
  rl::ActionSpace action_space() const override { return rl::ActionSpace::discrete(2); }
  Vector reset() override {
    state_ = 0;
    return observe();
  }
  rl::Transition step(std::span<const double> action) override {
    const int a = static_cast<int>(action[0]);
    const double r = reward(state_, a);
    state_ = next(state_, a);
    return {observe(), r, false};
  }
  Vector observe() const {
    Vector o = Vector::Zero(2);
    o[state_] = 1.0;
    return o;
  }

 private:
  int state_ = 0;
};

/// One-step episodes with a constant observation and noisy per-arm rewards.
/// Records every reward paid, per arm, for sample-mean comparisons.
class DiscreteBandit final : public rl::Environment {
 public:
  DiscreteBandit(std::vector<double> means, double noise, std::uint64_t seed)
      : means_(std::move(means)), noise_(noise), rng_(seed), paid_(means_.size()) {}

  std::size_t observation_size() const override { return 1; }
  rl::ActionSpace action_space() const override { return rl::ActionSpace::discrete(means_.size()); }
  Vector reset() override { return Vector::Ones(1); }
  rl::Transition step(std::span<const double> action) override {
    const auto a = static_cast<std::size_t>(action[0]);
    const double r = means_[a] + (noise_ > 0 ? rng_.uniform(-noise_, noise_) : 0.0);
    paid_[a].push_back(r);
    return {Vector::Ones(1), r, true};
  }
  const std::vector<std::vector<double>>& paid() const { return paid_; }

 private:
  std::vector<double> means_;
  double noise_;
  marketgym::agents::Rng rng_;
  std::vector<std::vector<double>> paid_;
};

/// One-step continuous bandit with reward -(a - target)^2.
class QuadraticBandit final : public rl::Environment {
 public:
  explicit QuadraticBandit(double target) : target_(target) {}
  std::size_t observation_size() const override { return 1; }
  rl::ActionSpace action_space() const override { return rl::ActionSpace::continuous(1); }
  Vector reset() override { return Vector::Ones(1); }
  rl::Transition step(std::span<const double> action) override {
    const double d = action[0] - target_;
    return {Vector::Ones(1), -d * d, true};
  }

 private:
  double target_;
};

}  // namespace toy
