#pragma once

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "marketgym/agents/train.hpp"
#include "marketgym/backtest/metrics.hpp"
#include "marketgym/backtest/report.hpp"
#include "marketgym/backtest/runner.hpp"
#include "marketgym/cli/config.hpp"
#include "marketgym/env/rl_adapter.hpp"
#include "marketgym/market_data/csv.hpp"
#include "marketgym/market_data/indicators.hpp"
#include "marketgym/market_data/split.hpp"

namespace marketgym::cli {

/// Writes through a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(bool(out), ErrorCode::Io, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    require(bool(out), ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

enum class Segment { train, validation, test };

/// The ingested frame with indicators and the row bounds of the three segments.
struct Dataset {
  market_data::MarketFrame frame;
  std::size_t bounds[3][2] = {};  // [segment][begin, end)

  std::size_t begin(Segment s) const { return bounds[int(s)][0]; }
  std::size_t end(Segment s) const { return bounds[int(s)][1]; }
  std::size_t length(Segment s) const { return end(s) - begin(s); }

  /// Rows of the segment preceded by up to `history` earlier rows; the returned
  /// warmup is the number of history rows actually available.
  std::pair<market_data::MarketFrame, std::size_t> with_history(Segment s, std::size_t history) const {
    const std::size_t h = std::min(history, begin(s));
    return {frame.slice(begin(s) - h, end(s)), h};
  }
};

inline market_data::MarketFrame ingest(const RunConfig& config) {
  market_data::IngestOptions options;
  options.granularity = config.data.granularity;
  options.forward_fill = config.data.forward_fill;
  options.tickers = config.data.tickers;
  return market_data::ingest_csv(resolve_data_path(config), config.data.schema, options);
}

inline market_data::SplitSpec resolve_split(const RunConfig& config, const market_data::MarketFrame& frame) {
  if (config.split) return *config.split;
  const auto& r = *config.rolling;
  const auto windows = market_data::rolling_windows(frame, r.train, r.validation, r.test, r.stride);
  const std::size_t index = r.window.value_or(windows.size() - 1);
  require(index < windows.size(), ErrorCode::InvalidConfig,
          "rolling.window " + std::to_string(index) + " out of range; there are " + std::to_string(windows.size()) +
              " windows");
  return windows[index];
}

/// Ingests, validates the split and the environment layout, and computes indicators.
inline Dataset load_dataset(const RunConfig& config) {
  validate_config(config);
  Dataset d{market_data::with_default_indicators(ingest(config))};
  const auto spec = resolve_split(config, d.frame);
  const market_data::TimeRange* ranges[3] = {&spec.train(), &spec.validation(), &spec.test()};
  const char* names[3] = {"train", "validation", "test"};
  for (int s = 0; s < 3; ++s) {
    d.bounds[s][0] = d.frame.lower_bound(ranges[s]->begin);
    d.bounds[s][1] = d.frame.lower_bound(ranges[s]->end);
    require(d.bounds[s][1] >= d.bounds[s][0] + 2, ErrorCode::EmptySplit,
            std::string(names[s]) + " split needs at least two rows");
  }
  config.env.gate.validate(d.frame.assets());
  for (const auto& b : config.baselines) b.validate(d.frame.assets());
  // Constructing an environment runs the task/action/shape checks up front.
  env::TradingEnvironment probe(d.frame.slice(d.begin(Segment::train), d.end(Segment::train)), config.env);
  return d;
}

/// Environment rows reserved so the turbulence gate has a full lookback at the first decision.
inline std::size_t agent_history(const RunConfig& config) { return config.env.gate.enabled ? config.env.gate.lookback : 0; }

inline env::EnvConfig env_with_warmup(const RunConfig& config, std::size_t warmup) {
  env::EnvConfig e = config.env;
  e.warmup = warmup;
  return e;
}

inline backtest::BacktestRun evaluate_policy(const agents::Policy& policy, const Dataset& d, const RunConfig& config,
                                             Segment segment) {
  auto [frame, warmup] = d.with_history(segment, agent_history(config));
  return backtest::run_policy(policy, frame, env_with_warmup(config, warmup));
}

inline backtest::BacktestRun evaluate_random(const Dataset& d, const RunConfig& config, Segment segment,
                                             std::uint64_t seed) {
  auto [frame, warmup] = d.with_history(segment, agent_history(config));
  return backtest::run_random(frame, env_with_warmup(config, warmup), seed);
}

/// Baseline curve over the segment; estimation windows may reach back before it.
inline backtest::EquityCurve evaluate_baseline(const baselines::StrategyConfig& strategy, const Dataset& d,
                                               const RunConfig& config, Segment segment) {
  const std::size_t need = std::max(strategy.history(), agent_history(config));
  require(need <= d.begin(segment), ErrorCode::InsufficientHistory,
          std::string(baselines::to_string(strategy.kind)) + " needs " + std::to_string(strategy.history()) +
              " rows before the evaluated segment, only " + std::to_string(d.begin(segment)) + " exist");
  auto [frame, warmup] = d.with_history(segment, need);
  return backtest::run_backtest(strategy, frame, env_with_warmup(config, warmup));
}

/// Sharpe ratio of dollar value differences, mean(dv) / std(dv) * sqrt(A). A flat
/// curve scores 0, the same value the trailing-Sharpe reward gives it.
inline double dollar_sharpe(const backtest::EquityCurve& curve) {
  backtest::RunningMoments m;
  for (std::size_t i = 1; i < curve.values.size(); ++i) m.push(curve.values[i] - curve.values[i - 1]);
  const double sd = m.sample_std();
  return m.count() >= 2 && sd > 0 ? m.mean() / sd * std::sqrt(curve.periods_per_year) : 0.0;
}

struct CheckpointScore {
  std::size_t index = 0;
  std::size_t global_step = 0;
  double validation_sharpe = 0.0;
};

struct TrainResult {
  agents::Policy policy;  // the checkpoint with the best validation score
  std::vector<agents::LogRow> log;
  std::vector<CheckpointScore> checkpoints;
  std::size_t selected = 0;  // index into checkpoints
};

/// Trains on the train segment, scoring every checkpoint (and the final policy) on
/// the validation segment. Ties keep the earlier checkpoint. On divergence the
/// partial log is handed to `on_abort` before the error propagates.
inline TrainResult train_agent(const RunConfig& config, const Dataset& d,
                               const std::function<void(const TrainResult&)>& on_abort = {}) {
  TrainResult result;
  double best = -std::numeric_limits<double>::infinity();
  auto score = [&](const agents::Policy& policy, std::size_t step) {
    const double s = dollar_sharpe(evaluate_policy(policy, d, config, Segment::validation).curve);
    result.checkpoints.push_back({result.checkpoints.size(), step, s});
    if (s > best) {
      best = s;
      result.policy = policy;
      result.selected = result.checkpoints.size() - 1;
    }
  };
  agents::TrainHooks hooks;
  hooks.checkpoint_interval = config.checkpoint_interval;
  hooks.on_checkpoint = [&](std::size_t step, const agents::Policy& p) { score(p, step); };
  hooks.on_log = [&](const agents::LogRow& row) { result.log.push_back(row); };

  env::TradingEnvironment environment(d.frame.slice(d.begin(Segment::train), d.end(Segment::train)), config.env);
  env::TradingTask task(environment);
  agents::AgentConfig agent = config.agent;
  agent.seed = config.seed;
  try {
    const agents::Policy final_policy = agents::train(task, agent, hooks);
    if (result.checkpoints.empty() || result.checkpoints.back().global_step != final_policy.checkpoint_step())
      score(final_policy, final_policy.checkpoint_step());
  } catch (const Error&) {
    if (on_abort) on_abort(result);
    throw;
  }
  return result;
}

inline std::string train_log_csv(const std::vector<agents::LogRow>& log) {
  std::ostringstream out;
  out << "global_step,episode,episodic_return,critic_loss,actor_loss\n";
  for (const auto& r : log)
    out << r.global_step << ',' << r.episode << ',' << format_double(r.episodic_return) << ','
        << format_double(r.critic_loss) << ',' << format_double(r.actor_loss) << '\n';
  return out.str();
}

inline std::string validation_csv(const TrainResult& r) {
  std::ostringstream out;
  out << "checkpoint,global_step,validation_sharpe,selected\n";
  for (const auto& c : r.checkpoints)
    out << c.index << ',' << c.global_step << ',' << format_double(c.validation_sharpe) << ','
        << (c.index == r.selected ? 1 : 0) << '\n';
  return out.str();
}

inline std::string agent_label(agents::Algorithm a) {
  std::string s(agents::to_string(a));
  for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace marketgym::cli
