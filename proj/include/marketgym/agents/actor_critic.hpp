#pragma once

#include <algorithm>

#include "marketgym/agents/gradient_check.hpp"
#include "marketgym/agents/optimizer.hpp"
#include "marketgym/agents/replay_buffer.hpp"
#include "marketgym/agents/training.hpp"

namespace marketgym::agents {

struct ActorCriticStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;  // -mean Q1(s, actor(s)); 0 on steps without an actor update
  bool actor_updated = false;
};

/// Deterministic tanh actor with Q critics, shared by DDPG and TD3.
/// DDPG: one critic, actor updated every step, no target smoothing.
/// TD3: twin critics with a min target, delayed actor and target updates, and
/// clipped Gaussian noise on the target action.
class ActorCriticLearner {
 public:
  ActorCriticLearner(std::size_t observation_size, std::size_t action_size, const AgentConfig& config, bool twin,
                     Rng& rng)
      : config_(config),
        twin_(twin),
        actor(Mlp::random(detail::layer_sizes(observation_size, config.hidden, action_size), config.hidden_activation,
                          Activation::tanh, rng, 0.1)),
        actor_target(actor),
        critic1(Mlp::random(detail::layer_sizes(observation_size + action_size, config.hidden, 1),
                            config.hidden_activation, Activation::identity, rng)),
        critic1_target(critic1),
        critic2(twin ? Mlp::random(critic1.sizes(), config.hidden_activation, Activation::identity, rng) : Mlp()),
        critic2_target(critic2),
        actor_optimizer(actor, {.learning_rate = config.actor_lr}),
        critic1_optimizer(critic1, {.learning_rate = config.critic_lr}),
        critic2_optimizer(critic2, {.learning_rate = config.critic_lr}) {}

  bool twin() const { return twin_; }

  /// Makes the second critic (and its target and optimizer state) a copy of the first.
  void sync_twin_critics() {
    critic2 = critic1;
    critic2_target = critic1_target;
    critic2_optimizer = critic1_optimizer;
  }

  /// Critic targets y = r + gamma * (1 - done) * min_i Q_i'(s', a'), with a' the target
  /// actor's (optionally smoothed) action. Exposed for inspection in tests.
  Vector targets(const Batch& batch, Rng& rng) const {
    Matrix next_actions = actor_target.forward(batch.next_observations);
    if (config_.target_noise > 0) {
      for (auto& a : next_actions.reshaped())
        a = std::clamp(a + std::clamp(config_.target_noise * rng.normal(), -config_.noise_clip, config_.noise_clip),
                       -1.0, 1.0);
    }
    const Matrix next_inputs = stack(batch.next_observations, next_actions);
    Vector next_q = critic1_target.forward(next_inputs).row(0).transpose();
    if (twin_) {
      const Vector q2 = critic2_target.forward(next_inputs).row(0).transpose();
      const Vector q1 = next_q;
      next_q = q1.cwiseMin(q2);
      for (Eigen::Index j = 0; j < next_q.size(); ++j)
        if (!(next_q[j] <= q1[j] && next_q[j] <= q2[j]))
          fail(ErrorCode::TrainingDiverged, "min-target exceeds an individual critic target");
    }
    return batch.rewards + config_.gamma * (1.0 - batch.dones.array()).matrix().cwiseProduct(next_q);
  }

  ActorCriticStats update(const Batch& batch, Rng& rng) {
    ActorCriticStats stats;
    const double B = double(batch.size());
    const Vector y = targets(batch, rng);
    const Matrix inputs = stack(batch.observations, batch.actions);

    auto fit_critic = [&](Mlp& critic, Adam& opt) {
      ForwardCache cache;
      const Matrix q = critic.forward(inputs, cache);
      const Matrix err = q - y.transpose();
      opt.step(critic, critic.backward(cache, 2.0 * err / B));
      return err.squaredNorm() / B;
    };
    stats.critic_loss = fit_critic(critic1, critic1_optimizer);
    if (twin_) stats.critic_loss = 0.5 * (stats.critic_loss + fit_critic(critic2, critic2_optimizer));

    ++critic_updates_;
    if (critic_updates_ % config_.policy_delay == 0) {
      stats.actor_loss = update_actor(batch.observations);
      stats.actor_updated = true;
      soft_update(actor_target, actor, config_.tau);
      soft_update(critic1_target, critic1, config_.tau);
      if (twin_) soft_update(critic2_target, critic2, config_.tau);
    }
    return stats;
  }

  /// Gradient of -mean Q1(s, actor(s)) with respect to the actor parameters.
  Gradients actor_gradient(const Matrix& observations, double* loss = nullptr) const {
    const double B = double(observations.cols());
    ForwardCache actor_cache, critic_cache;
    const Matrix actions = actor.forward(observations, actor_cache);
    const Matrix q = critic1.forward(stack(observations, actions), critic_cache);
    if (loss) *loss = -q.sum() / B;
    Matrix input_grad;
    critic1.backward(critic_cache, Matrix::Constant(1, q.cols(), -1.0 / B), &input_grad);
    return actor.backward(actor_cache, input_grad.bottomRows(actions.rows()));
  }

  static Matrix stack(const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
  }

 private:
  double update_actor(const Matrix& observations) {
    double loss = 0.0;
    const Gradients g = actor_gradient(observations, &loss);
    actor_optimizer.step(actor, g);
    return loss;
  }

  AgentConfig config_;
  bool twin_;
  std::size_t critic_updates_ = 0;

 public:
  Mlp actor, actor_target;
  Mlp critic1, critic1_target;
  Mlp critic2, critic2_target;
  Adam actor_optimizer, critic1_optimizer, critic2_optimizer;
};

namespace detail {

inline Policy train_actor_critic(rl::Environment& env, const AgentConfig& config, const TrainHooks& hooks,
                                 Algorithm algorithm) {
  config.validate();
  const auto space = env.action_space();
  require(space.type == rl::ActionType::continuous, ErrorCode::IncompatibleActionSpace,
          std::string(to_string(algorithm)) + " needs a continuous action space");
  const bool twin = algorithm == Algorithm::td3;
  AgentConfig effective = config;
  if (!twin) {
    effective.policy_delay = 1;
    effective.target_noise = 0.0;
  }
  Rng rng(config.seed);
  ActorCriticLearner learner(env.observation_size(), space.dim, effective, twin, rng);
  if (config.self_test) {
    self_test(learner.actor, rng);
    self_test(learner.critic1, rng);
  }
  ObservationFilter filter(env.observation_size(), config.normalize_observations);
  EpisodeLog log(hooks);
  ReplayBuffer buffer(config.buffer_capacity);
  auto snapshot = [&] { return Policy(algorithm, space, learner.actor, filter.normalizer()); };

  Vector obs = env.reset();
  filter.observe(obs);
  Vector action(static_cast<Eigen::Index>(space.dim));
  for (std::size_t step = 0; step < config.total_steps; ++step) {
    if (step < config.learning_starts) {
      for (auto& a : action) a = rng.uniform(-1.0, 1.0);
    } else {
      action = learner.actor.forward(filter.apply(obs));
      for (auto& a : action) a = std::clamp(a + config.exploration_sigma * rng.normal(), -1.0, 1.0);
    }
    rl::Transition tr = env.step(std::span<const double>(action.data(), static_cast<std::size_t>(action.size())));
    filter.observe(tr.observation);
    buffer.push({obs, action, tr.reward, tr.observation, tr.done});

    if (step + 1 >= config.learning_starts && buffer.size() >= config.batch_size) {
      Batch batch = buffer.sample(config.batch_size, rng);
      batch.observations = filter.apply_columns(batch.observations);
      batch.next_observations = filter.apply_columns(batch.next_observations);
      const auto stats = learner.update(batch, rng);
      log.record_losses(stats.critic_loss, stats.actor_loss);
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

}  // namespace detail

inline Policy train_ddpg(rl::Environment& env, const AgentConfig& config, const TrainHooks& hooks = {}) {
  return detail::train_actor_critic(env, config, hooks, Algorithm::ddpg);
}

inline Policy train_td3(rl::Environment& env, const AgentConfig& config, const TrainHooks& hooks = {}) {
  return detail::train_actor_critic(env, config, hooks, Algorithm::td3);
}

}  // namespace marketgym::agents
