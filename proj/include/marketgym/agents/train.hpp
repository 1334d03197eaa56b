#pragma once

#include "marketgym/agents/actor_critic.hpp"
#include "marketgym/agents/dqn.hpp"
#include "marketgym/agents/ppo.hpp"

namespace marketgym::agents {

inline Policy train(rl::Environment& env, const AgentConfig& config, const TrainHooks& hooks = {}) {
  switch (config.algorithm) {
    case Algorithm::dqn: return train_dqn(env, config, hooks);
    case Algorithm::ddpg: return train_ddpg(env, config, hooks);
    case Algorithm::td3: return train_td3(env, config, hooks);
    case Algorithm::ppo: return train_ppo(env, config, hooks);
  }
  fail(ErrorCode::InvalidConfig, "unknown algorithm");
}

}  // namespace marketgym::agents
