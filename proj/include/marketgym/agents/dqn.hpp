#pragma once

#include <algorithm>

#include "marketgym/agents/gradient_check.hpp"
#include "marketgym/agents/optimizer.hpp"
#include "marketgym/agents/replay_buffer.hpp"
#include "marketgym/agents/training.hpp"

namespace marketgym::agents {

/// Q-network, its target copy, and the squared-TD-error update.
class DqnLearner {
 public:
  DqnLearner(std::size_t observation_size, std::size_t actions, const AgentConfig& config, Rng& rng)
      : config_(config),
        q(Mlp::random(detail::layer_sizes(observation_size, config.hidden, actions), config.hidden_activation,
                      Activation::identity, rng)),
        q_target(q),
        optimizer(q, {.learning_rate = config.critic_lr}) {}

  /// One gradient step on mean (Q(s,a) - y)^2 with y = r + gamma * max_a' Q_target(s', a') * (1 - done).
  /// Batch actions hold 0-based action indices. Returns the loss before the step.
  double update(const Batch& batch) {
    const auto B = static_cast<Eigen::Index>(batch.size());
    const Matrix next_q = q_target.forward(batch.next_observations);
    ForwardCache cache;
    const Matrix current = q.forward(batch.observations, cache);
    Matrix upstream = Matrix::Zero(current.rows(), B);
    double loss = 0.0;
    for (Eigen::Index j = 0; j < B; ++j) {
      const double target = batch.rewards[j] + config_.gamma * (1.0 - batch.dones[j]) * next_q.col(j).maxCoeff();
      const auto a = static_cast<Eigen::Index>(batch.actions(0, j));
      const double err = current(a, j) - target;
      loss += err * err;
      upstream(a, j) = 2.0 * err / double(B);
    }
    optimizer.step(q, q.backward(cache, upstream));
    ++updates_;
    if (config_.target_update_interval == 0)
      soft_update(q_target, q, config_.tau);
    else if (updates_ % config_.target_update_interval == 0)
      q_target = q;
    return loss / double(B);
  }

 private:
  AgentConfig config_;
  std::size_t updates_ = 0;

 public:
  Mlp q;
  Mlp q_target;
  Adam optimizer;
};

inline double epsilon_at(const AgentConfig& c, std::size_t step) {
  const double horizon = std::max(1.0, c.epsilon_fraction * double(c.total_steps));
  const double frac = std::min(1.0, double(step) / horizon);
  return c.epsilon_start + (c.epsilon_end - c.epsilon_start) * frac;
}

/// Deep Q-learning with uniform experience replay, epsilon-greedy exploration, and a
/// target network. Requires a discrete action space.
inline Policy train_dqn(rl::Environment& env, const AgentConfig& config, const TrainHooks& hooks = {}) {
  config.validate();
  const auto space = env.action_space();
  require(space.type == rl::ActionType::discrete && space.count >= 1, ErrorCode::IncompatibleActionSpace,
          "DQN needs a discrete action space (single-stock discrete shares)");
  Rng rng(config.seed);
  DqnLearner learner(env.observation_size(), space.count, config, rng);
  if (config.self_test) self_test(learner.q, rng);
  detail::ObservationFilter filter(env.observation_size(), config.normalize_observations);
  detail::EpisodeLog log(hooks);
  ReplayBuffer buffer(config.buffer_capacity);
  auto snapshot = [&] { return Policy(Algorithm::dqn, space, learner.q, filter.normalizer()); };

  Vector obs = env.reset();
  filter.observe(obs);
  for (std::size_t step = 0; step < config.total_steps; ++step) {
    std::size_t index;
    if (step < config.learning_starts || rng.uniform() < epsilon_at(config, step)) {
      index = rng.index(space.count);
    } else {
      Eigen::Index best = 0;
      learner.q.forward(filter.apply(obs)).maxCoeff(&best);
      index = static_cast<std::size_t>(best);
    }
    const double action = static_cast<double>(space.first + static_cast<std::int64_t>(index));
    rl::Transition tr = env.step(std::span<const double>(&action, 1));
    filter.observe(tr.observation);
    buffer.push({obs, Vector::Constant(1, double(index)), tr.reward, tr.observation, tr.done});

    if (step + 1 >= config.learning_starts && buffer.size() >= config.batch_size) {
      Batch batch = buffer.sample(config.batch_size, rng);
      batch.observations = filter.apply_columns(batch.observations);
      batch.next_observations = filter.apply_columns(batch.next_observations);
      log.record_losses(learner.update(batch), 0.0);
    }
    log.record_step(tr.reward, tr.done);
    obs = tr.done ? env.reset() : std::move(tr.observation);
    if (tr.done) filter.observe(obs);
    if (log.checkpoint_due()) log.checkpoint(snapshot());
  }
  Policy policy = snapshot();
  policy.set_checkpoint_step(config.total_steps);
  return policy;
}

}  // namespace marketgym::agents
