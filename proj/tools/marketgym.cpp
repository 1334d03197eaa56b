// marketgym command-line front end.
#include <CLI11.hpp>

#include "marketgym/cli/commands.hpp"

namespace cli = marketgym::cli;

int main(int argc, char** argv) {
  CLI::App app{"marketgym: trading environments, agents and backtests"};
  app.require_subcommand(1);

  cli::CommandOptions opts;
  std::string config, out;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Seed override");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--format", opts.format, "Stdout format")
        ->check(CLI::IsMember({"json", "csv", "text", "latex"}));
    sub->add_flag("--quiet", opts.quiet, "Print nothing on success");
  };

  auto* ingest = app.add_subcommand("ingest", "Validate and canonicalize the configured data");
  auto* train = app.add_subcommand("train", "Train an agent and keep the best validation checkpoint");
  auto* backtest = app.add_subcommand("backtest", "Evaluate a policy on the test split");
  auto* compare = app.add_subcommand("compare", "Render a comparison table from reports and baselines");
  auto* demo = app.add_subcommand("demo", "Run a use case end to end on the bundled data");
  auto* show = app.add_subcommand("show-config", "Print a demo config in canonical form");
  for (auto* sub : {ingest, train, backtest, compare, demo}) add_common(sub);

  std::string policy_path;
  backtest->add_option("--policy", policy_path, "Policy file from train")->required();
  std::vector<std::string> reports;
  compare->add_option("reports", reports, "MetricsReport JSON files");
  std::string use_case;
  demo->add_option("use_case", use_case, "single_stock | multi_stock | portfolio")
      ->required()
      ->check(CLI::IsMember({"single_stock", "multi_stock", "portfolio"}));
  std::string show_case, show_algorithm;
  show->add_option("use_case", show_case, "single_stock | multi_stock | portfolio")
      ->required()
      ->check(CLI::IsMember({"single_stock", "multi_stock", "portfolio"}));
  show->add_option("algorithm", show_algorithm, "ppo | td3 | ddpg | dqn")
      ->required()
      ->check(CLI::IsMember({"ppo", "td3", "ddpg", "dqn"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitUsage;
  }
  if (!config.empty()) opts.config = config;
  if (!out.empty()) opts.out = out;
  for (auto* sub : {ingest, train, backtest, compare, demo})
    if (sub->count("--seed")) opts.seed = seed;

  if (*ingest) return cli::cmd_ingest(opts);
  if (*train) return cli::cmd_train(opts);
  if (*backtest) return cli::cmd_backtest(opts, policy_path);
  if (*compare) return cli::cmd_compare(opts, {reports.begin(), reports.end()});
  if (*demo) return cli::cmd_demo(*cli::parse_demo_case(use_case), opts);
  if (*show) {
    std::cout << cli::emit_config(
        cli::demo_config(*cli::parse_demo_case(show_case), *marketgym::agents::parse_algorithm(show_algorithm)));
    return 0;
  }
  return cli::kExitUsage;
}
