#include <gtest/gtest.h>

#include <numeric>

#include "marketgym/agents/train.hpp"
#include "marketgym/env/rl_adapter.hpp"
#include "marketgym/market_data/indicators.hpp"
#include "marketgym/market_data/synthetic.hpp"
#include "oracles/oracles.hpp"
#include "toy_envs.hpp"

using namespace marketgym;
using namespace marketgym::agents;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Io;
}

AgentConfig bandit_actor_critic(Algorithm a, std::uint64_t seed) {
  AgentConfig c = AgentConfig::defaults(a);
  c.hidden = {16, 16};
  c.actor_lr = 1e-3;
  c.critic_lr = 1e-3;
  c.batch_size = 64;
  c.buffer_capacity = 10'000;
  c.total_steps = 10'000;
  c.learning_starts = 200;
  c.normalize_observations = false;
  // A relu critic is piecewise linear in the action and the actor can park on a kink.
  c.hidden_activation = Activation::tanh;
  c.seed = seed;
  return c;
}

Batch random_batch(Rng& rng, Eigen::Index obs, Eigen::Index act, Eigen::Index B) {
  Batch b{Matrix(obs, B), Matrix(act, B), Vector(B), Matrix(obs, B), Vector(B)};
  for (auto& x : b.observations.reshaped()) x = rng.uniform(-1, 1);
  for (auto& x : b.actions.reshaped()) x = rng.uniform(-1, 1);
  for (auto& x : b.next_observations.reshaped()) x = rng.uniform(-1, 1);
  for (auto& x : b.rewards) x = rng.uniform(-1, 1);
  for (Eigen::Index j = 0; j < B; ++j) b.dones[j] = j % 5 == 0 ? 1.0 : 0.0;
  return b;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double stddev(const std::vector<double>& v) { return oracle::sample_std(v); }

}  // namespace

// ---- DQN

TEST(Dqn, ChainMdpMatchesValueIteration) {
  const double gamma = 0.5;
  oracle::Mdp mdp;
  for (int s = 0; s < 2; ++s) {
    mdp.reward.push_back({toy::ChainMdp::reward(s, 0), toy::ChainMdp::reward(s, 1)});
    mdp.next.push_back({toy::ChainMdp::next(s, 0), toy::ChainMdp::next(s, 1)});
  }
  const auto qstar = oracle::value_iteration(mdp, gamma);

  AgentConfig c = AgentConfig::defaults(Algorithm::dqn);
  c.hidden = {16};
  c.gamma = gamma;
  c.tau = 0.01;
  c.batch_size = 32;
  c.buffer_capacity = 10'000;
  c.total_steps = 30'000;
  c.learning_starts = 500;
  c.epsilon_end = 0.2;
  c.normalize_observations = false;
  c.seed = 1;
  toy::ChainMdp env;
  const Policy p = train_dqn(env, c);
  double worst = 0.0;
  for (int s = 0; s < 2; ++s) {
    Vector obs = Vector::Zero(2);
    obs[s] = 1.0;
    const Vector q = p.network().forward(obs);
    for (int a = 0; a < 2; ++a) worst = std::max(worst, std::abs(q[a] - qstar[s][a]));
    const int greedy = qstar[s][0] >= qstar[s][1] ? 0 : 1;
    EXPECT_EQ(p.act(obs)[0], greedy) << "state " << s;
  }
  EXPECT_LT(worst, 1e-2);
}

TEST(Dqn, ZeroDiscountLearnsSampleMeans) {
  AgentConfig c = AgentConfig::defaults(Algorithm::dqn);
  c.hidden = {16};
  c.gamma = 0.0;
  c.batch_size = 64;
  c.buffer_capacity = 20'000;
  c.total_steps = 10'000;
  c.learning_starts = 500;
  c.epsilon_end = 0.5;
  c.normalize_observations = false;
  c.seed = 2;
  toy::DiscreteBandit env({0.2, -0.5, 1.0}, 0.1, 99);
  const Policy p = train_dqn(env, c);
  const Vector q = p.network().forward(Vector(Vector::Ones(1)));
  for (int a = 0; a < 3; ++a) {
    const auto& paid = env.paid()[a];
    ASSERT_FALSE(paid.empty());
    EXPECT_NEAR(q[a], oracle::mean(paid), 1e-2) << a;
  }
}

TEST(Dqn, SingleStockQNetworkWidth) {
  const auto frame = market_data::with_default_indicators(market_data::synthetic_frame({.tickers = 1, .days = 60}));
  env::EnvConfig ec;
  ec.task = env::Task::single_stock;
  ec.action = {env::ActionKind::discrete_shares, 10};
  ec.initial_capital = 100'000;
  env::TradingEnvironment environment(frame, ec);
  env::TradingTask task(environment);
  AgentConfig c = AgentConfig::defaults(Algorithm::dqn);
  c.hidden = {8};
  c.total_steps = 40;
  c.learning_starts = 10;
  c.batch_size = 8;
  const Policy p = train_dqn(task, c);
  EXPECT_EQ(p.network().output_size(), 21u);
  const double a = p.act(environment.reset())[0];
  EXPECT_GE(a, -10);
  EXPECT_LE(a, 10);
}

TEST(Dqn, RejectsContinuousSpaces) {
  toy::QuadraticBandit env(0.3);
  EXPECT_EQ(code_of([&] { train_dqn(env, AgentConfig::defaults(Algorithm::dqn)); }),
            ErrorCode::IncompatibleActionSpace);
}

// ---- DDPG / TD3

TEST(ActorCritic, DdpgQuadraticBanditConverges) {
  toy::QuadraticBandit env(0.3);
  const Policy p = train_ddpg(env, bandit_actor_critic(Algorithm::ddpg, 3));
  EXPECT_NEAR(p.act(Vector::Ones(1))[0], 0.3, 0.05);
}

TEST(ActorCritic, Td3TighterThanDdpgAcrossSeeds) {
  std::vector<double> ddpg, td3;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    toy::QuadraticBandit e1(0.3), e2(0.3);
    ddpg.push_back(train_ddpg(e1, bandit_actor_critic(Algorithm::ddpg, seed)).act(Vector::Ones(1))[0]);
    td3.push_back(train_td3(e2, bandit_actor_critic(Algorithm::td3, seed)).act(Vector::Ones(1))[0]);
  }
  for (double a : td3) EXPECT_NEAR(a, 0.3, 0.05);
  EXPECT_NEAR(median(ddpg), 0.3, 0.05);
  EXPECT_LT(stddev(td3), stddev(ddpg)) << "td3 sd " << stddev(td3) << " ddpg sd " << stddev(ddpg);
}

TEST(ActorCritic, TauOneCopiesOnlineNetworks) {
  Rng rng(4);
  AgentConfig c = AgentConfig::defaults(Algorithm::td3);
  c.hidden = {6};
  c.tau = 1.0;
  c.policy_delay = 1;
  ActorCriticLearner learner(3, 2, c, true, rng);
  for (int i = 0; i < 3; ++i) {
    learner.update(random_batch(rng, 3, 2, 16), rng);
    EXPECT_TRUE(learner.actor_target == learner.actor);
    EXPECT_TRUE(learner.critic1_target == learner.critic1);
    EXPECT_TRUE(learner.critic2_target == learner.critic2);
  }
}

TEST(ActorCritic, DegenerateTd3MatchesDdpgFirstStep) {
  AgentConfig c = AgentConfig::defaults(Algorithm::td3);
  c.hidden = {6, 6};
  c.policy_delay = 1;
  c.target_noise = 0.0;
  Rng r1(5), r2(5);
  ActorCriticLearner ddpg(3, 2, c, false, r1);
  ActorCriticLearner td3(3, 2, c, true, r2);
  td3.sync_twin_critics();
  ASSERT_TRUE(ddpg.actor == td3.actor);
  ASSERT_TRUE(ddpg.critic1 == td3.critic1);
  Rng data(6);
  const Batch b = random_batch(data, 3, 2, 32);
  Rng n1(7), n2(7);
  ddpg.update(b, n1);
  td3.update(b, n2);
  EXPECT_TRUE(ddpg.actor == td3.actor);
  EXPECT_TRUE(ddpg.critic1 == td3.critic1);
  EXPECT_TRUE(ddpg.actor_target == td3.actor_target);
}

TEST(ActorCritic, MinTargetBelowEachCriticTarget) {
  Rng rng(8);
  AgentConfig c = AgentConfig::defaults(Algorithm::td3);
  c.hidden = {6};
  c.target_noise = 0.0;
  ActorCriticLearner learner(3, 2, c, true, rng);
  for (int step = 0; step < 20; ++step) {
    const Batch b = random_batch(rng, 3, 2, 16);
    const Vector y = learner.targets(b, rng);
    const Matrix a = learner.actor_target.forward(b.next_observations);
    const Matrix in = ActorCriticLearner::stack(b.next_observations, a);
    const Vector q1 = learner.critic1_target.forward(in).row(0).transpose();
    const Vector q2 = learner.critic2_target.forward(in).row(0).transpose();
    for (Eigen::Index j = 0; j < b.rewards.size(); ++j) {
      const double live = c.gamma * (1 - b.dones[j]);
      EXPECT_LE(y[j], b.rewards[j] + live * q1[j] + 1e-12);
      EXPECT_LE(y[j], b.rewards[j] + live * q2[j] + 1e-12);
    }
    learner.update(b, rng);
  }
}

TEST(ActorCritic, ActorGradientMatchesFiniteDifferences) {
  Rng rng(9);
  AgentConfig c = AgentConfig::defaults(Algorithm::ddpg);
  c.hidden = {5};
  ActorCriticLearner learner(3, 2, c, false, rng);
  const Batch b = random_batch(rng, 3, 2, 8);
  const Vector analytic = flatten(learner.actor_gradient(b.observations));
  auto loss = [&](const Mlp& actor) {
    const Matrix a = actor.forward(b.observations);
    return -learner.critic1.forward(ActorCriticLearner::stack(b.observations, a)).sum() / 8.0;
  };
  Vector theta = learner.actor.parameters();
  Mlp probe = learner.actor;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Vector up = theta, down = theta;
    up[k] += 1e-6;
    down[k] -= 1e-6;
    probe.set_parameters(up);
    const double lu = loss(probe);
    probe.set_parameters(down);
    const double ld = loss(probe);
    EXPECT_NEAR(analytic[k], (lu - ld) / 2e-6, 1e-6 + 1e-4 * std::abs(analytic[k]));
  }
}

TEST(ActorCritic, ActionsStayInBox) {
  toy::QuadraticBandit env(5.0);  // optimum outside the box
  const Policy p = train_ddpg(env, bandit_actor_critic(Algorithm::ddpg, 1));
  const Vector a = p.act(Vector::Ones(1));
  EXPECT_LE(std::abs(a[0]), 1.0);
  EXPECT_GT(a[0], 0.9);
}

TEST(ActorCritic, RejectsDiscreteSpaces) {
  toy::DiscreteBandit env({1, 0}, 0, 0);
  EXPECT_EQ(code_of([&] { train_td3(env, AgentConfig::defaults(Algorithm::td3)); }),
            ErrorCode::IncompatibleActionSpace);
  EXPECT_EQ(code_of([&] { train_ddpg(env, AgentConfig::defaults(Algorithm::ddpg)); }),
            ErrorCode::IncompatibleActionSpace);
}

// ---- PPO

TEST(Ppo, GaeMatchesDiscountedSumOfResiduals) {
  Rng rng(10);
  const Eigen::Index N = 30;
  Vector r(N), v(N + 1), d(N);
  for (Eigen::Index t = 0; t < N; ++t) {
    r[t] = rng.uniform(-1, 1);
    v[t] = rng.uniform(-1, 1);
    d[t] = t % 7 == 6 ? 1.0 : 0.0;
  }
  v[N] = 0.4;
  const double g = 0.9, l = 0.8;
  const Vector adv = generalized_advantages(r, v, d, g, l);
  for (Eigen::Index t = 0; t < N; ++t) {
    double expect = 0.0, w = 1.0;
    for (Eigen::Index u = t; u < N; ++u) {
      const double live = 1.0 - d[u];
      expect += w * (r[u] + g * v[u + 1] * live - v[u]);
      if (live == 0.0) break;
      w *= g * l;
    }
    EXPECT_NEAR(adv[t], expect, 1e-12) << t;
  }
}

namespace {

PpoRollout bandit_rollout(const PpoLearner& learner, const std::vector<double>& arm_rewards, std::size_t N,
                          Rng& rng) {
  PpoRollout r{Matrix::Ones(1, static_cast<Eigen::Index>(N)), Matrix(1, static_cast<Eigen::Index>(N)),
               Vector(static_cast<Eigen::Index>(N)), Vector(static_cast<Eigen::Index>(N)),
               Vector::Zero(static_cast<Eigen::Index>(N))};
  for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(N); ++t) {
    auto [a, logp] = learner.sample(Vector::Ones(1), rng);
    r.actions(0, t) = a[0];
    r.log_probs[t] = logp;
    r.advantages[t] = arm_rewards[static_cast<std::size_t>(a[0])];
  }
  return r;
}

}  // namespace

TEST(Ppo, UnclippedStepIsVanillaPolicyGradient) {
  Rng rng(11);
  AgentConfig c = AgentConfig::defaults(Algorithm::ppo);
  c.hidden = {8};
  c.clip_ratio = std::numeric_limits<double>::infinity();
  PpoLearner learner(1, rl::ActionSpace::discrete(2), c, rng);
  learner.policy_net.layers().back().bias << 0.4, -0.3;  // a non-uniform starting policy
  const std::vector<double> rewards = {1.0, 0.0};
  const auto rollout = bandit_rollout(learner, rewards, 40'000, rng);
  std::vector<std::size_t> all(rollout.size());
  std::iota(all.begin(), all.end(), 0);
  const Vector sampled = flatten(learner.surrogate_gradient(rollout, all).network);

  // Exact gradient of -E[r]: d/dlogit_i = -pi_i (r_i - pi . r), pushed through the network.
  ForwardCache cache;
  const Matrix logits = learner.policy_net.forward(Matrix::Ones(1, 1), cache);
  const Vector pi = heads::softmax(logits.col(0));
  const double baseline = pi[0] * rewards[0] + pi[1] * rewards[1];
  Matrix upstream(2, 1);
  for (int i = 0; i < 2; ++i) upstream(i, 0) = -pi[i] * (rewards[i] - baseline);
  const Vector exact = flatten(learner.policy_net.backward(cache, upstream));
  EXPECT_GT(sampled.dot(exact) / (sampled.norm() * exact.norm()), 0.99);
}

TEST(Ppo, IdenticalPoliciesGiveUnitRatiosAndNoClipping) {
  Rng rng(12);
  AgentConfig c = AgentConfig::defaults(Algorithm::ppo);
  c.hidden = {8};
  PpoLearner learner(1, rl::ActionSpace::discrete(3), c, rng);
  auto rollout = bandit_rollout(learner, {0.5, -1.0, 2.0}, 200, rng);
  std::vector<std::size_t> all(rollout.size());
  std::iota(all.begin(), all.end(), 0);
  const Vector ratios = learner.ratios(rollout, all);
  EXPECT_LT((ratios.array() - 1.0).abs().maxCoeff(), 1e-12);
  AgentConfig wide = c;
  wide.clip_ratio = std::numeric_limits<double>::infinity();
  Rng rng2(12);
  PpoLearner unclipped(1, rl::ActionSpace::discrete(3), wide, rng2);
  EXPECT_TRUE(unclipped.policy_net == learner.policy_net);
  EXPECT_LT((flatten(learner.surrogate_gradient(rollout, all).network) -
             flatten(unclipped.surrogate_gradient(rollout, all).network))
                .norm(),
            1e-15);
}

TEST(Ppo, TwoArmedBanditFindsBetterArm) {
  AgentConfig c = AgentConfig::defaults(Algorithm::ppo);
  c.hidden = {16};
  c.actor_lr = 1e-3;
  c.total_steps = 5'000;
  c.rollout_length = 250;
  c.minibatch_size = 50;
  c.epochs = 4;
  c.normalize_observations = false;
  c.seed = 13;
  toy::DiscreteBandit env({1.0, 0.0}, 0.0, 0);
  const Policy p = train_ppo(env, c);
  const Vector probs = heads::softmax(p.network().forward(p.prepare(Vector::Ones(1))));
  EXPECT_GT(probs[0], 0.95);
  EXPECT_EQ(p.act(Vector::Ones(1))[0], 0.0);
}

TEST(Ppo, ContinuousHeadOnQuadraticBandit) {
  AgentConfig c = AgentConfig::defaults(Algorithm::ppo);
  c.hidden = {16};
  c.actor_lr = 3e-3;
  c.total_steps = 20'000;
  c.rollout_length = 500;
  c.minibatch_size = 100;
  c.epochs = 5;
  c.init_log_std = -1.0;
  c.normalize_observations = false;
  c.seed = 14;
  toy::QuadraticBandit env(0.3);
  const Policy p = train_ppo(env, c);
  EXPECT_NEAR(p.act(Vector::Ones(1))[0], 0.3, 0.05);
}

// ---- determinism, hooks, divergence

TEST(Training, FixedSeedIsBitReproducible) {
  for (auto alg : {Algorithm::dqn, Algorithm::ddpg, Algorithm::td3, Algorithm::ppo}) {
    auto run = [&] {
      const auto frame =
          market_data::with_default_indicators(market_data::synthetic_frame({.tickers = 1, .days = 80, .seed = 5}));
      env::EnvConfig ec;
      ec.task = env::Task::single_stock;
      ec.action = {alg == Algorithm::dqn ? env::ActionKind::discrete_shares : env::ActionKind::continuous_shares, 5};
      ec.initial_capital = 10'000;
      env::TradingEnvironment environment(frame, ec);
      env::TradingTask task(environment);
      AgentConfig c = AgentConfig::defaults(alg);
      c.hidden = {8, 8};
      c.total_steps = 600;
      c.learning_starts = 100;
      c.rollout_length = 128;
      c.batch_size = 16;
      c.seed = 21;
      std::vector<double> returns;
      TrainHooks hooks;
      hooks.on_log = [&](const LogRow& r) { returns.push_back(r.episodic_return); };
      return std::pair{train(task, c, hooks), returns};
    };
    const auto a = run(), b = run();
    EXPECT_TRUE(a.first == b.first) << to_string(alg);
    EXPECT_EQ(a.second, b.second) << to_string(alg);
    EXPECT_FALSE(a.second.empty());
  }
}

TEST(Training, CheckpointsAtInterval) {
  toy::QuadraticBandit env(0.3);
  AgentConfig c = bandit_actor_critic(Algorithm::td3, 0);
  c.total_steps = 1'000;
  std::vector<std::size_t> steps;
  TrainHooks hooks;
  hooks.checkpoint_interval = 250;
  hooks.on_checkpoint = [&](std::size_t s, const Policy& p) {
    steps.push_back(s);
    EXPECT_EQ(p.checkpoint_step(), s);
  };
  const Policy final_policy = train_td3(env, c, hooks);
  EXPECT_EQ(steps, (std::vector<std::size_t>{250, 500, 750, 1000}));
  EXPECT_EQ(final_policy.checkpoint_step(), 1000u);
}

namespace {

/// Rewards so large their squares overflow.
class Exploding final : public rl::Environment {
 public:
  std::size_t observation_size() const override { return 1; }
  rl::ActionSpace action_space() const override { return rl::ActionSpace::continuous(1); }
  Vector reset() override { return Vector::Ones(1); }
  rl::Transition step(std::span<const double>) override { return {Vector::Ones(1), 1e200, true}; }
};

}  // namespace

TEST(Training, NonFiniteLossIsDivergence) {
  Exploding env;
  AgentConfig c = bandit_actor_critic(Algorithm::ddpg, 0);
  c.total_steps = 400;
  std::size_t logged = 0;
  TrainHooks hooks;
  hooks.on_log = [&](const LogRow&) { ++logged; };
  EXPECT_EQ(code_of([&] { train_ddpg(env, c, hooks); }), ErrorCode::TrainingDiverged);
  EXPECT_GT(logged, 0u);
}

TEST(Training, ConfigValidation) {
  toy::QuadraticBandit env(0.3);
  AgentConfig c = AgentConfig::defaults(Algorithm::td3);
  c.gamma = 1.0;
  EXPECT_EQ(code_of([&] { train_td3(env, c); }), ErrorCode::InvalidConfig);
  c = AgentConfig::defaults(Algorithm::td3);
  c.tau = 0.0;
  EXPECT_EQ(code_of([&] { train_td3(env, c); }), ErrorCode::InvalidConfig);
}
