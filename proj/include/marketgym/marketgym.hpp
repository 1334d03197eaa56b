#pragma once

// Everything except the command-line layer (marketgym/cli/*).

#include "marketgym/agents/actor_critic.hpp"
#include "marketgym/agents/config.hpp"
#include "marketgym/agents/dqn.hpp"
#include "marketgym/agents/gradient_check.hpp"
#include "marketgym/agents/heads.hpp"
#include "marketgym/agents/mlp.hpp"
#include "marketgym/agents/normalizer.hpp"
#include "marketgym/agents/optimizer.hpp"
#include "marketgym/agents/policy.hpp"
#include "marketgym/agents/ppo.hpp"
#include "marketgym/agents/replay_buffer.hpp"
#include "marketgym/agents/rng.hpp"
#include "marketgym/agents/train.hpp"
#include "marketgym/agents/training.hpp"
#include "marketgym/backtest/equity_curve.hpp"
#include "marketgym/backtest/metrics.hpp"
#include "marketgym/backtest/report.hpp"
#include "marketgym/backtest/runner.hpp"
#include "marketgym/baselines/simplex.hpp"
#include "marketgym/baselines/strategies.hpp"
#include "marketgym/env/execution.hpp"
#include "marketgym/env/reward.hpp"
#include "marketgym/env/rl_adapter.hpp"
#include "marketgym/env/trading_env.hpp"
#include "marketgym/env/turbulence.hpp"
#include "marketgym/env/types.hpp"
#include "marketgym/error.hpp"
#include "marketgym/linalg.hpp"
#include "marketgym/market_data/csv.hpp"
#include "marketgym/market_data/frame.hpp"
#include "marketgym/market_data/indicators.hpp"
#include "marketgym/market_data/resample.hpp"
#include "marketgym/market_data/split.hpp"
#include "marketgym/market_data/synthetic.hpp"
#include "marketgym/marketgym.hpp"
#include "marketgym/rl/environment.hpp"
#include "marketgym/time.hpp"
