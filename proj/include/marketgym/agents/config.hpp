#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "marketgym/agents/mlp.hpp"
#include "marketgym/error.hpp"

namespace marketgym::agents {

enum class Algorithm { dqn, ddpg, td3, ppo };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::dqn: return "dqn";
    case Algorithm::ddpg: return "ddpg";
    case Algorithm::td3: return "td3";
    case Algorithm::ppo: return "ppo";
  }
  return "";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  if (s == "dqn") return Algorithm::dqn;
  if (s == "ddpg") return Algorithm::ddpg;
  if (s == "td3") return Algorithm::td3;
  if (s == "ppo") return Algorithm::ppo;
  return std::nullopt;
}

struct AgentConfig {
  Algorithm algorithm = Algorithm::td3;
  std::vector<std::size_t> hidden{64, 64};
  Activation hidden_activation = Activation::relu;

  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double gamma = 0.99;
  double tau = 0.005;
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 100'000;
  std::size_t total_steps = 100'000;
  std::size_t learning_starts = 1'000;  // uniform-random exploration before off-policy updates

  // DQN
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_fraction = 0.1;  // of total_steps
  std::size_t target_update_interval = 0;  // 0: Polyak update with tau after every gradient step

  // DDPG / TD3
  double exploration_sigma = 0.1;
  std::size_t policy_delay = 2;
  double target_noise = 0.2;
  double noise_clip = 0.5;

  // PPO
  double clip_ratio = 0.2;
  std::size_t epochs = 10;
  double gae_lambda = 0.95;
  std::size_t rollout_length = 2048;
  std::size_t minibatch_size = 64;
  double entropy_coef = 0.0;
  double init_log_std = 0.0;
  double max_grad_norm = 0.5;  // 0 disables clipping

  bool normalize_observations = true;
  bool self_test = true;  // finite-difference check of the freshly built networks
  std::uint64_t seed = 0;

  void validate() const {
    auto check = [](bool ok, const std::string& what) { require(ok, ErrorCode::InvalidConfig, what); };
    check(gamma >= 0 && gamma < 1, "gamma must be in [0, 1)");
    check(tau > 0 && tau <= 1, "tau must be in (0, 1]");
    check(actor_lr > 0 && critic_lr > 0, "learning rates must be > 0");
    check(clip_ratio > 0, "PPO clip ratio must be > 0");
    check(batch_size > 0 && buffer_capacity >= batch_size, "batch size must be in (0, buffer capacity]");
    check(total_steps > 0, "total steps must be > 0");
    check(!hidden.empty(), "at least one hidden layer is required");
    for (auto w : hidden) check(w > 0, "hidden widths must be > 0");
    check(epsilon_start >= 0 && epsilon_start <= 1 && epsilon_end >= 0 && epsilon_end <= 1 && epsilon_fraction > 0,
          "epsilon schedule out of range");
    check(exploration_sigma >= 0 && target_noise >= 0 && noise_clip >= 0, "noise scales must be >= 0");
    check(policy_delay >= 1, "policy delay must be >= 1");
    check(gae_lambda >= 0 && gae_lambda <= 1, "GAE lambda must be in [0, 1]");
    check(epochs >= 1 && rollout_length >= 1 && minibatch_size >= 1, "PPO batch settings must be >= 1");
  }

  /// Community defaults per algorithm (DDPG has no policy delay or target smoothing).
  static AgentConfig defaults(Algorithm algorithm) {
    AgentConfig c;
    c.algorithm = algorithm;
    if (algorithm == Algorithm::ddpg) {
      c.policy_delay = 1;
      c.target_noise = 0.0;
    }
    if (algorithm == Algorithm::ppo) c.actor_lr = 3e-4;
    return c;
  }

  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

/// One row of the training log, emitted at the end of every episode.
struct LogRow {
  std::size_t global_step = 0;
  std::size_t episode = 0;
  double episodic_return = 0.0;
  double critic_loss = 0.0;  // Q/value loss averaged since the previous row
  double actor_loss = 0.0;   // policy loss averaged since the previous row
};

class Policy;

struct TrainHooks {
  std::size_t checkpoint_interval = 0;  // env steps between checkpoint callbacks; 0 disables
  std::function<void(std::size_t global_step, const Policy&)> on_checkpoint;
  std::function<void(const LogRow&)> on_log;
};

}  // namespace marketgym::agents
