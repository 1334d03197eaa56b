#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "marketgym/agents/gradient_check.hpp"
#include "marketgym/agents/heads.hpp"
#include "marketgym/agents/optimizer.hpp"
#include "marketgym/agents/training.hpp"

namespace marketgym::agents {

/// On-policy samples with precomputed advantages. Observations are already normalized;
/// discrete actions are stored as 0-based indices.
struct PpoRollout {
  Matrix observations;
  Matrix actions;
  Vector log_probs;
  Vector advantages;
  Vector returns;

  std::size_t size() const { return static_cast<std::size_t>(log_probs.size()); }
};

/// GAE(lambda): delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t),
/// A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}. `values` has one extra
/// entry, the bootstrap value after the last step.
inline Vector generalized_advantages(const Vector& rewards, const Vector& values, const Vector& dones, double gamma,
                                     double lambda) {
  const auto N = rewards.size();
  require(values.size() == N + 1 && dones.size() == N, ErrorCode::ShapeMismatch, "GAE input lengths mismatch");
  Vector adv(N);
  double next = 0.0;
  for (Eigen::Index t = N - 1; t >= 0; --t) {
    const double live = 1.0 - dones[t];
    const double delta = rewards[t] + gamma * values[t + 1] * live - values[t];
    next = delta + gamma * lambda * live * next;
    adv[t] = next;
  }
  return adv;
}

/// Clipped-surrogate policy optimization with a categorical head for discrete actions
/// and a diagonal Gaussian head (state-independent log std) for continuous ones.
class PpoLearner {
 public:
  struct SurrogateGradient {
    Gradients network;
    Vector log_std;  // empty for categorical heads
    double loss = 0.0;
  };

  PpoLearner(std::size_t observation_size, rl::ActionSpace space, const AgentConfig& config, Rng& rng)
      : config_(config),
        space_(space),
        policy_net(Mlp::random(detail::layer_sizes(observation_size, config.hidden, output_width(space)),
                               config.hidden_activation, Activation::identity, rng, 0.01)),
        log_std(space.type == rl::ActionType::continuous
                    ? Vector::Constant(static_cast<Eigen::Index>(space.dim), config.init_log_std)
                    : Vector()),
        value_net(Mlp::random(detail::layer_sizes(observation_size, config.hidden, 1), config.hidden_activation,
                              Activation::identity, rng)),
        policy_optimizer(policy_net, {.learning_rate = config.actor_lr}),
        log_std_optimizer(log_std.size(), {.learning_rate = config.actor_lr}),
        value_optimizer(value_net, {.learning_rate = config.critic_lr}) {}

  static std::size_t output_width(const rl::ActionSpace& space) {
    return space.type == rl::ActionType::discrete ? space.count : space.dim;
  }

  bool discrete() const { return space_.type == rl::ActionType::discrete; }

  double log_prob(const Vector& head_output, const Vector& action) const {
    return discrete() ? heads::categorical_log_prob(head_output, static_cast<Eigen::Index>(action[0]))
                      : heads::gaussian_log_prob(head_output, log_std, action);
  }

  /// Samples an action (index for discrete heads) and returns its log-probability.
  std::pair<Vector, double> sample(const Vector& observation, Rng& rng) const {
    const Vector out = policy_net.forward(observation);
    Vector action;
    if (discrete()) {
      const Vector p = heads::softmax(out);
      double u = rng.uniform();
      Eigen::Index k = 0;
      while (k + 1 < p.size() && u >= p[k]) u -= p[k++];
      action = Vector::Constant(1, double(k));
    } else {
      action = out;
      for (Eigen::Index i = 0; i < action.size(); ++i) action[i] += std::exp(log_std[i]) * rng.normal();
    }
    return {action, log_prob(out, action)};
  }

  /// Probability ratios pi_new(a|s) / pi_old(a|s) for the given sample indices.
  Vector ratios(const PpoRollout& r, const std::vector<std::size_t>& idx) const {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    const Matrix heads_out = policy_net.forward(gather(r.observations, idx));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto k = static_cast<Eigen::Index>(idx[j]);
      out[static_cast<Eigen::Index>(j)] =
          std::exp(log_prob(heads_out.col(static_cast<Eigen::Index>(j)), r.actions.col(k)) - r.log_probs[k]);
    }
    return out;
  }

  /// Gradient of the loss -mean(min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)) - c_ent * entropy
  /// on a minibatch, using advantages as given.
  SurrogateGradient surrogate_gradient(const PpoRollout& r, const std::vector<std::size_t>& idx) const {
    const double B = double(idx.size());
    const double eps = config_.clip_ratio;
    ForwardCache cache;
    const Matrix out = policy_net.forward(gather(r.observations, idx), cache);
    Matrix upstream = Matrix::Zero(out.rows(), out.cols());
    SurrogateGradient g;
    if (!discrete()) g.log_std = Vector::Zero(log_std.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      const auto k = static_cast<Eigen::Index>(idx[j]);
      const Vector head = out.col(c);
      const Vector action = r.actions.col(k);
      const double ratio = std::exp(log_prob(head, action) - r.log_probs[k]);
      const double A = r.advantages[k];
      const double unclipped = ratio * A;
      const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * A;
      g.loss -= std::min(unclipped, clipped) / B;
      // d loss / d log pi: the unclipped branch carries ratio * A, the clipped one is flat
      const double dlogp = unclipped <= clipped ? -ratio * A / B : 0.0;
      if (discrete()) {
        upstream.col(c) = dlogp * heads::categorical_log_prob_grad(head, static_cast<Eigen::Index>(action[0]));
        if (config_.entropy_coef > 0) {
          const Vector p = heads::softmax(head);
          const double H = heads::categorical_entropy(head);
          const Vector dH = -(p.array() * (p.array().max(1e-300).log() + H)).matrix();
          upstream.col(c) -= config_.entropy_coef / B * dH;
          g.loss -= config_.entropy_coef * H / B;
        }
      } else {
        upstream.col(c) = dlogp * heads::gaussian_log_prob_grad_mean(head, log_std, action);
        g.log_std += dlogp * heads::gaussian_log_prob_grad_log_std(head, log_std, action);
      }
    }
    if (!discrete() && config_.entropy_coef > 0) {
      g.log_std.array() -= config_.entropy_coef;
      g.loss -= config_.entropy_coef * heads::gaussian_entropy(log_std);
    }
    g.network = policy_net.backward(cache, upstream);
    return g;
  }

  struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
  };

  /// Normalizes advantages, then runs `epochs` passes of shuffled minibatches.
  UpdateStats update(PpoRollout r, Rng& rng) {
    const auto N = r.size();
    if (N > 1) {
      const double mean = r.advantages.mean();
      const double sd = std::sqrt((r.advantages.array() - mean).square().sum() / double(N - 1));
      r.advantages = ((r.advantages.array() - mean) / (sd + 1e-8)).matrix();
    }
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    UpdateStats stats;
    std::size_t batches = 0;
    for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
      for (std::size_t i = N; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
      for (std::size_t start = 0; start < N; start += config_.minibatch_size) {
        const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(N, start + config_.minibatch_size)));
        SurrogateGradient g = surrogate_gradient(r, idx);
        clip_global_norm(g.network, config_.max_grad_norm, discrete() ? nullptr : &g.log_std);
        policy_optimizer.step(policy_net, g.network);
        if (!discrete()) log_std_optimizer.step(log_std, g.log_std);

        ForwardCache cache;
        const Matrix v = value_net.forward(gather(r.observations, idx), cache);
        Matrix err(1, v.cols());
        for (std::size_t j = 0; j < idx.size(); ++j)
          err(0, static_cast<Eigen::Index>(j)) = v(0, static_cast<Eigen::Index>(j)) - r.returns[static_cast<Eigen::Index>(idx[j])];
        Gradients vg = value_net.backward(cache, 2.0 * err / double(idx.size()));
        clip_global_norm(vg, config_.max_grad_norm);
        value_optimizer.step(value_net, vg);

        stats.policy_loss += g.loss;
        stats.value_loss += err.squaredNorm() / double(idx.size());
        ++batches;
      }
    }
    stats.policy_loss /= double(batches);
    stats.value_loss /= double(batches);
    return stats;
  }

  static Matrix gather(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(idx[j]));
    return out;
  }

 private:
  AgentConfig config_;
  rl::ActionSpace space_;

 public:
  Mlp policy_net;
  Vector log_std;
  Mlp value_net;
  Adam policy_optimizer;
  AdamVector log_std_optimizer;
  Adam value_optimizer;
};

/// Proximal policy optimization: rollouts of `rollout_length` steps, GAE advantages
/// normalized per rollout, and `epochs` minibatch passes per rollout.
inline Policy train_ppo(rl::Environment& env, const AgentConfig& config, const TrainHooks& hooks = {}) {
  config.validate();
  const auto space = env.action_space();
  Rng rng(config.seed);
  PpoLearner learner(env.observation_size(), space, config, rng);
  if (config.self_test) {
    self_test(learner.policy_net, rng);
    self_test(learner.value_net, rng);
  }
  detail::ObservationFilter filter(env.observation_size(), config.normalize_observations);
  detail::EpisodeLog log(hooks);
  auto snapshot = [&] { return Policy(Algorithm::ppo, space, learner.policy_net, filter.normalizer()); };

  const auto obs_dim = static_cast<Eigen::Index>(env.observation_size());
  const auto act_rows = static_cast<Eigen::Index>(learner.discrete() ? 1 : space.dim);
  Vector raw = env.reset();
  filter.observe(raw);
  std::size_t step = 0;
  while (step < config.total_steps) {
    const auto N = static_cast<Eigen::Index>(std::min(config.rollout_length, config.total_steps - step));
    PpoRollout r{Matrix(obs_dim, N), Matrix(act_rows, N), Vector(N), Vector(N), Vector(N)};
    Vector rewards(N), dones(N), values(N + 1);
    for (Eigen::Index t = 0; t < N; ++t) {
      const Vector obs = filter.apply(raw);
      auto [action, logp] = learner.sample(obs, rng);
      r.observations.col(t) = obs;
      r.actions.col(t) = action;
      r.log_probs[t] = logp;
      values[t] = learner.value_net.forward(obs)[0];

      Vector env_action = action;
      if (learner.discrete())
        env_action[0] = double(space.first) + action[0];
      else
        env_action = env_action.cwiseMax(-1.0).cwiseMin(1.0);
      rl::Transition tr =
          env.step(std::span<const double>(env_action.data(), static_cast<std::size_t>(env_action.size())));
      filter.observe(tr.observation);
      rewards[t] = tr.reward;
      dones[t] = tr.done ? 1.0 : 0.0;
      log.record_step(tr.reward, tr.done);
      ++step;
      raw = tr.done ? env.reset() : std::move(tr.observation);
      if (tr.done) filter.observe(raw);
      if (log.checkpoint_due()) log.checkpoint(snapshot());
    }
    values[N] = dones[N - 1] > 0 ? 0.0 : learner.value_net.forward(filter.apply(raw))[0];
    r.advantages = generalized_advantages(rewards, values, dones, config.gamma, config.gae_lambda);
    r.returns = r.advantages + values.head(N);
    const auto stats = learner.update(std::move(r), rng);
    log.record_losses(stats.value_loss, stats.policy_loss);
  }
  Policy policy = snapshot();
  policy.set_checkpoint_step(config.total_steps);
  return policy;
}

}  // namespace marketgym::agents
