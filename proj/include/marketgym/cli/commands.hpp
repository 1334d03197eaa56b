#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "marketgym/cli/pipeline.hpp"
#include "marketgym/market_data/synthetic.hpp"

namespace marketgym::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInvalid = 2,   // config, data or ingest validation failure
  kExitDiverged = 3,  // non-finite training loss
  kExitLayout = 4,    // policy does not fit the environment
  kExitSchema = 5,    // report file schema version mismatch
};

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::string format = "text";  // json | csv | text (| latex for tables)
  bool quiet = false;
};

namespace detail {

inline int report_error(std::ostream& err, const Error& e, int code) {
  err << "error: " << e.what() << '\n';
  return code;
}

inline RunConfig load_run_config(const CommandOptions& opts) {
  require(opts.config.has_value(), ErrorCode::InvalidConfig, "--config is required");
  RunConfig config = load_config(*opts.config);
  if (opts.seed) config.seed = *opts.seed;
  config.agent.seed = config.seed;
  return config;
}

inline std::filesystem::path output_dir(const CommandOptions& opts, const RunConfig* config) {
  if (opts.out) return *opts.out;
  return config ? std::filesystem::path(config->output.dir) : std::filesystem::path("out");
}

inline std::string summary_json(const market_data::MarketFrame& frame) {
  nlohmann::ordered_json j;
  j["assets"] = frame.assets();
  j["steps"] = frame.steps();
  j["start"] = format_timestamp(frame.timestamps().front());
  j["end"] = format_timestamp(frame.timestamps().back());
  j["granularity"] = std::string(to_string(frame.granularity()));
  j["tickers"] = frame.tickers();
  return j.dump(2) + "\n";
}

}  // namespace detail

/// Reads the configured CSV into canonical form: frame.csv and summary.json.
inline int cmd_ingest(const CommandOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const RunConfig config = detail::load_run_config(opts);
    const Dataset d = load_dataset(config);
    const auto dir = detail::output_dir(opts, &config);
    market_data::MarketFrame plain = ingest(config);
    write_file_atomic(dir / "frame.csv", market_data::to_csv(plain));
    const std::string summary = detail::summary_json(d.frame);
    write_file_atomic(dir / "summary.json", summary);
    if (!opts.quiet) {
      if (opts.format == "json") out << summary;
      else
        out << "assets=" << d.frame.assets() << " steps=" << d.frame.steps() << " range="
            << format_timestamp(d.frame.timestamps().front()) << ".." << format_timestamp(d.frame.timestamps().back())
            << " granularity=" << to_string(d.frame.granularity()) << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    return detail::report_error(err, e, kExitInvalid);
  }
}

/// Trains on the train split and keeps the checkpoint with the best validation
/// Sharpe: policy.json, train_log.csv, validation.csv.
inline int cmd_train(const CommandOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig config;
  std::optional<Dataset> dataset;
  std::filesystem::path dir;
  try {
    config = detail::load_run_config(opts);
    dataset = load_dataset(config);
    dir = detail::output_dir(opts, &config);
  } catch (const Error& e) {
    return detail::report_error(err, e, kExitInvalid);
  }
  try {
    const TrainResult result = train_agent(config, *dataset, [&](const TrainResult& partial) {
      write_file_atomic(dir / "train_log.csv", train_log_csv(partial.log));
    });
    write_file_atomic(dir / "policy.json", agents::policy_to_string(result.policy));
    write_file_atomic(dir / "train_log.csv", train_log_csv(result.log));
    write_file_atomic(dir / "validation.csv", validation_csv(result));
    if (!opts.quiet) {
      const auto& best = result.checkpoints[result.selected];
      out << "policy=" << (dir / "policy.json").string() << " checkpoint_step=" << best.global_step
          << " validation_sharpe=" << backtest::format_fixed2(best.validation_sharpe) << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    return detail::report_error(err, e, e.code() == ErrorCode::TrainingDiverged ? kExitDiverged : kExitInvalid);
  }
}

/// One deterministic evaluation episode on the test split: curve.csv, report.json, trace.csv.
inline int cmd_backtest(const CommandOptions& opts, const std::filesystem::path& policy_path,
                        std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig config;
  std::optional<Dataset> dataset;
  agents::Policy policy;
  try {
    config = detail::load_run_config(opts);
    dataset = load_dataset(config);
    policy = agents::load_policy(policy_path);
  } catch (const Error& e) {
    return detail::report_error(err, e, kExitInvalid);
  }
  try {
    const Dataset& d = *dataset;
    const auto run = evaluate_policy(policy, d, config, Segment::test);
    const auto report = backtest::metrics_report(run.curve, agent_label(policy.algorithm()), config.seed);
    const auto dir = detail::output_dir(opts, &config);
    std::ostringstream curve_csv, trace_csv;
    backtest::write_curve_csv(curve_csv, run.curve);
    env::write_trace_csv(trace_csv, run.trace, d.frame.tickers());
    write_file_atomic(dir / "curve.csv", curve_csv.str());
    write_file_atomic(dir / "report.json", backtest::report_to_string(report));
    write_file_atomic(dir / "trace.csv", trace_csv.str());
    if (!opts.quiet) {
      if (opts.format == "json") out << backtest::report_to_string(report);
      else {
        const auto table = backtest::compare({report});
        out << table.render(opts.format == "csv" ? backtest::TableFormat::csv : backtest::TableFormat::text);
      }
    }
    return kExitOk;
  } catch (const Error& e) {
    return detail::report_error(err, e, e.code() == ErrorCode::LayoutMismatch ? kExitLayout : kExitInvalid);
  }
}

/// Renders a comparison table from report files, plus the config's baselines
/// evaluated on the test split when a config is given.
inline int cmd_compare(const CommandOptions& opts, const std::vector<std::filesystem::path>& report_files,
                       std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<backtest::MetricsReport> reports;
  for (const auto& path : report_files) {
    try {
      reports.push_back(backtest::report_from_json(nlohmann::json::parse(read_file(path))));
    } catch (const nlohmann::json::exception& e) {
      err << "error: " << path.string() << ": " << e.what() << '\n';
      return kExitSchema;
    } catch (const Error& e) {
      err << "error: " << path.string() << ": " << e.what() << '\n';
      return e.code() == ErrorCode::SchemaMismatch ? kExitSchema : kExitInvalid;
    }
  }
  std::optional<RunConfig> config;
  try {
    if (opts.config) {
      config = detail::load_run_config(opts);
      if (!config->baselines.empty()) {
        const Dataset d = load_dataset(*config);
        for (const auto& b : config->baselines)
          reports.push_back(backtest::metrics_report(evaluate_baseline(b, d, *config, Segment::test),
                                                     baselines::display_name(b)));
      }
    }
    require(!reports.empty(), ErrorCode::InvalidConfig, "compare needs at least one report file or baseline");
  } catch (const Error& e) {
    return detail::report_error(err, e, kExitInvalid);
  }
  const auto table = backtest::compare(reports);
  const auto dir = detail::output_dir(opts, config ? &*config : nullptr);
  write_file_atomic(dir / "comparison.txt", table.render_text());
  write_file_atomic(dir / "comparison.csv", table.render_csv());
  write_file_atomic(dir / "comparison.tex", table.render_latex());
  if (!opts.quiet) {
    if (opts.format == "json") {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const auto& r : table.columns) arr.push_back(backtest::report_to_json(r));
      out << arr.dump(2) << '\n';
    } else if (const auto f = backtest::parse_table_format(opts.format)) {
      out << table.render(*f);
    } else {
      out << table.render_text();
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Demos

enum class DemoCase { single_stock, multi_stock, portfolio };

inline std::string_view to_string(DemoCase c) {
  switch (c) {
    case DemoCase::single_stock: return "single_stock";
    case DemoCase::multi_stock: return "multi_stock";
    case DemoCase::portfolio: return "portfolio";
  }
  return "?";
}

inline std::optional<DemoCase> parse_demo_case(std::string_view s) {
  for (auto c : {DemoCase::single_stock, DemoCase::multi_stock, DemoCase::portfolio})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

inline constexpr const char* kBundledDataFile = "synthetic_dow30.csv";

/// Locates the bundled dataset: MARKETGYM_DATA_DIR, then the source tree's data/.
inline std::optional<std::filesystem::path> bundled_data_path() {
  if (const char* root = std::getenv("MARKETGYM_DATA_DIR"); root && *root) {
    const auto p = std::filesystem::path(root) / kBundledDataFile;
    if (std::filesystem::exists(p)) return p;
  }
#ifdef MARKETGYM_SOURCE_DATA_DIR
  const auto p = std::filesystem::path(MARKETGYM_SOURCE_DATA_DIR) / kBundledDataFile;
  if (std::filesystem::exists(p)) return p;
#endif
  return std::nullopt;
}

/// Algorithms trained by each demo.
inline std::vector<agents::Algorithm> demo_algorithms(DemoCase c) {
  if (c == DemoCase::single_stock) return {agents::Algorithm::ppo};
  return {agents::Algorithm::td3, agents::Algorithm::ddpg};
}

/// Demo run configs over the bundled data (rows 0-299 train, 300-379 validation,
/// 380-499 test). Hyperparameters are library defaults scaled down to a
/// desk-scale step budget, not tuned values.
inline RunConfig demo_config(DemoCase c, agents::Algorithm algorithm) {
  RunConfig r;
  r.name = "demo_" + std::string(to_string(c));
  r.data.path = "../data/synthetic_dow30.csv";
  r.data.granularity = Granularity::daily;
  const auto day = [](int y, unsigned m, unsigned d) { return make_timestamp(y, m, d); };
  r.split.emplace(market_data::TimeRange{day(2017, 11, 1), day(2018, 12, 26)},
                  market_data::TimeRange{day(2018, 12, 26), day(2019, 4, 17)},
                  market_data::TimeRange{day(2019, 4, 17), day(2019, 10, 2)});
  r.agent = agents::AgentConfig::defaults(algorithm);
  r.agent.hidden = {32, 32};
  r.agent.self_test = true;
  switch (c) {
    case DemoCase::single_stock:
      r.data.tickers = {"SYN01"};
      r.env.task = env::Task::single_stock;
      r.env.action = {env::ActionKind::continuous_shares, 100};
      r.env.initial_capital = 100'000.0;
      r.baselines = {baselines::StrategyConfig::buy_and_hold()};
      break;
    case DemoCase::multi_stock:
      r.env.task = env::Task::multi_stock;
      r.env.action = {env::ActionKind::continuous_shares, 100};
      r.baselines = {baselines::StrategyConfig::min_variance(), baselines::StrategyConfig::equal_weighted()};
      break;
    case DemoCase::portfolio:
      r.env.task = env::Task::portfolio_allocation;
      r.env.action = {env::ActionKind::simplex_weights, 100};
      r.baselines = {baselines::StrategyConfig::min_variance(), baselines::StrategyConfig::equal_weighted()};
      break;
  }
  r.env.costs = {0.0, 0.001, 0.0};
  if (algorithm == agents::Algorithm::ppo) {
    r.agent.total_steps = 30'000;
    r.agent.rollout_length = 1'200;
    r.agent.minibatch_size = 100;
    r.agent.epochs = 5;
    r.checkpoint_interval = 3'000;
  } else {
    r.agent.total_steps = 3'000;
    r.agent.learning_starts = 300;
    r.agent.buffer_capacity = 10'000;
    r.checkpoint_interval = 600;
  }
  r.output.dir = "out/" + r.name;
  return r;
}

struct AgentOutcome {
  std::string label;
  TrainResult training;
  backtest::MetricsReport test_report;
  double train_sharpe = 0.0;         // return-based Sharpe on the train split; 0 when undefined
  double random_train_sharpe = 0.0;  // same for a uniformly random policy
};

struct DemoResult {
  std::vector<AgentOutcome> agents;
  backtest::ComparisonTable table;
};

inline double sharpe_or_zero(const backtest::EquityCurve& curve) {
  return curve.periods() >= 2 && backtest::return_moments(curve).sample_std() > 0 ? backtest::sharpe_ratio(curve)
                                                                                  : 0.0;
}

/// ingest -> train -> backtest -> compare for one use case, writing every artifact
/// under `dir`.
inline DemoResult run_demo(DemoCase c, std::uint64_t seed, const std::filesystem::path& dir,
                           std::optional<std::filesystem::path> data = std::nullopt) {
  if (!data) data = bundled_data_path();
  if (!data) {
    // No bundled file on this machine: regenerate it; the generator is deterministic.
    data = dir / kBundledDataFile;
    write_file_atomic(*data, market_data::to_csv(market_data::synthetic_frame()));
  }
  DemoResult result;
  std::vector<backtest::MetricsReport> reports;
  std::optional<Dataset> dataset;
  RunConfig last;
  for (const auto algorithm : demo_algorithms(c)) {
    RunConfig config = demo_config(c, algorithm);
    config.data.path = std::filesystem::absolute(*data).string();
    config.seed = config.agent.seed = seed;
    if (!dataset) dataset = load_dataset(config);
    const Dataset& d = *dataset;
    const auto agent_dir = dir / std::string(agents::to_string(algorithm));
    write_file_atomic(agent_dir / "config.cfg", emit_config(config));

    AgentOutcome outcome;
    outcome.label = agent_label(algorithm);
    outcome.training = train_agent(config, d);
    write_file_atomic(agent_dir / "policy.json", agents::policy_to_string(outcome.training.policy));
    write_file_atomic(agent_dir / "train_log.csv", train_log_csv(outcome.training.log));
    write_file_atomic(agent_dir / "validation.csv", validation_csv(outcome.training));

    const auto test = evaluate_policy(outcome.training.policy, d, config, Segment::test);
    outcome.test_report = backtest::metrics_report(test.curve, outcome.label, seed);
    std::ostringstream curve_csv;
    backtest::write_curve_csv(curve_csv, test.curve);
    write_file_atomic(agent_dir / "curve.csv", curve_csv.str());
    write_file_atomic(agent_dir / "report.json", backtest::report_to_string(outcome.test_report));

    outcome.train_sharpe = sharpe_or_zero(evaluate_policy(outcome.training.policy, d, config, Segment::train).curve);
    outcome.random_train_sharpe = sharpe_or_zero(evaluate_random(d, config, Segment::train, seed).curve);
    reports.push_back(outcome.test_report);
    result.agents.push_back(std::move(outcome));
    last = config;
  }
  for (const auto& b : last.baselines)
    reports.push_back(
        backtest::metrics_report(evaluate_baseline(b, *dataset, last, Segment::test), baselines::display_name(b)));
  result.table = backtest::compare(std::move(reports));
  write_file_atomic(dir / "comparison.txt", result.table.render_text());
  write_file_atomic(dir / "comparison.csv", result.table.render_csv());
  write_file_atomic(dir / "comparison.tex", result.table.render_latex());
  return result;
}

inline int cmd_demo(DemoCase c, const CommandOptions& opts, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  try {
    const auto dir = opts.out.value_or(std::filesystem::path("out") / ("demo_" + std::string(to_string(c))));
    const auto result = run_demo(c, opts.seed.value_or(0), dir);
    if (!opts.quiet) {
      const auto f = backtest::parse_table_format(opts.format).value_or(backtest::TableFormat::text);
      out << result.table.render(f);
    }
    return kExitOk;
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::TrainingDiverged: return detail::report_error(err, e, kExitDiverged);
      case ErrorCode::LayoutMismatch: return detail::report_error(err, e, kExitLayout);
      default: return detail::report_error(err, e, kExitInvalid);
    }
  }
}

}  // namespace marketgym::cli
