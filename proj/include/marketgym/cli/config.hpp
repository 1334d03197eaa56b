#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "marketgym/agents/config.hpp"
#include "marketgym/baselines/strategies.hpp"
#include "marketgym/env/trading_env.hpp"
#include "marketgym/market_data/csv.hpp"
#include "marketgym/market_data/split.hpp"

namespace marketgym::cli {

/// Flat `key = value` lines; `#` starts a comment. Keys keep their line numbers so
/// validation errors can point at the offending line.
struct KeyValues {
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  std::map<std::string, Entry> entries;

  static KeyValues parse(std::istream& in, const std::string& origin = "config") {
    KeyValues kv;
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string text = market_data::detail::trim(line);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos)
        fail(ErrorCode::InvalidConfig, origin + ":" + std::to_string(number) + ": expected 'key = value'");
      const std::string key = market_data::detail::trim(std::string_view(text).substr(0, eq));
      const std::string value = market_data::detail::trim(std::string_view(text).substr(eq + 1));
      if (key.empty()) fail(ErrorCode::InvalidConfig, origin + ":" + std::to_string(number) + ": empty key");
      if (!kv.entries.emplace(key, Entry{value, number}).second)
        fail(ErrorCode::InvalidConfig, origin + ":" + std::to_string(number) + ": duplicate key '" + key + "'");
    }
    return kv;
  }
};

struct DataConfig {
  std::string path;
  market_data::CsvSchema schema;
  std::optional<Granularity> granularity;
  bool forward_fill = false;
  std::vector<std::string> tickers;

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

/// Walk-forward parameters in rows; `window` picks one window (default: the last).
struct RollingConfig {
  std::size_t train = 0, validation = 0, test = 0, stride = 1;
  std::optional<std::size_t> window;

  friend bool operator==(const RollingConfig&, const RollingConfig&) = default;
};

struct OutputConfig {
  std::string dir = "out";
  std::vector<std::string> formats{"text", "csv"};

  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
  std::string name = "run";
  std::uint64_t seed = 0;
  DataConfig data;
  std::optional<market_data::SplitSpec> split;
  std::optional<RollingConfig> rolling;
  env::EnvConfig env;
  agents::AgentConfig agent;
  std::size_t checkpoint_interval = 0;  // env steps between validation checkpoints; 0 keeps the final policy
  std::vector<baselines::StrategyConfig> baselines;
  OutputConfig output;

  std::filesystem::path base_dir;  // directory of the config file; not serialized

  bool operator==(const RunConfig& o) const {
    return name == o.name && seed == o.seed && data == o.data && split == o.split && rolling == o.rolling &&
           env == o.env && agent == o.agent && checkpoint_interval == o.checkpoint_interval &&
           baselines == o.baselines && output == o.output;
  }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = market_data::detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

inline double to_double(const std::string& s) {
  double v = 0;
  if (!market_data::detail::parse_number(s, v)) throw std::invalid_argument("expected a number, got '" + s + "'");
  return v;
}

inline std::uint64_t to_unsigned(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
  return v;
}

inline bool to_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

inline std::string from_bool(bool b) { return b ? "true" : "false"; }

template <class T, class Parse>
T parse_enum(const std::string& s, Parse parse, const char* what) {
  const auto v = parse(s);
  if (!v) throw std::invalid_argument(std::string("unknown ") + what + " '" + s + "'");
  return *v;
}

inline std::string format_range(const market_data::TimeRange& r) {
  return format_timestamp(r.begin) + ".." + format_timestamp(r.end);
}

inline market_data::TimeRange parse_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) throw std::invalid_argument("expected 'begin..end', got '" + s + "'");
  const auto b = parse_timestamp(market_data::detail::trim(std::string_view(s).substr(0, dots)));
  const auto e = parse_timestamp(market_data::detail::trim(std::string_view(s).substr(dots + 2)));
  if (!b || !e) throw std::invalid_argument("malformed date in range '" + s + "'");
  return {*b, *e};
}

struct SplitDraft {
  std::optional<market_data::TimeRange> train, validation, test;
};

/// A config key: how to read it into a RunConfig and how to print it back.
/// `get` returns nullopt when the key is omitted from the emitted file.
struct Field {
  std::string key;
  std::function<std::optional<std::string>(const RunConfig&)> get;
  std::function<void(RunConfig&, SplitDraft&, const std::string&)> set;
};

inline std::vector<Field> scalar_fields() {
  using R = RunConfig;
  using S = SplitDraft;
  using Str = const std::string&;
  auto num = [](double v) { return std::optional<std::string>(format_double(v)); };
  auto uns = [](std::uint64_t v) { return std::optional<std::string>(std::to_string(v)); };
  std::vector<Field> f;
  f.push_back({"name", [](const R& c) { return std::optional(c.name); }, [](R& c, S&, Str v) { c.name = v; }});
  f.push_back({"seed", [=](const R& c) { return uns(c.seed); }, [](R& c, S&, Str v) { c.seed = to_unsigned(v); }});

  f.push_back({"data.path", [](const R& c) { return std::optional(c.data.path); },
               [](R& c, S&, Str v) { c.data.path = v; }});
  f.push_back({"data.granularity",
               [](const R& c) { return std::optional<std::string>(c.data.granularity ? to_string(*c.data.granularity) : "auto"); },
               [](R& c, S&, Str v) {
                 c.data.granularity = v == "auto" ? std::nullopt
                                                  : std::optional(parse_enum<Granularity>(v, parse_granularity, "granularity"));
               }});
  f.push_back({"data.forward_fill", [](const R& c) { return std::optional(from_bool(c.data.forward_fill)); },
               [](R& c, S&, Str v) { c.data.forward_fill = to_bool(v); }});
  f.push_back({"data.tickers",
               [](const R& c) { return c.data.tickers.empty() ? std::nullopt : std::optional(join(c.data.tickers)); },
               [](R& c, S&, Str v) { c.data.tickers = split_list(v); }});

  auto range_field = [&](const char* key, auto member) {
    f.push_back({key,
                 [member](const R& c) {
                   return c.split ? std::optional(format_range((*c.split.*member)())) : std::nullopt;
                 },
                 [=](R&, S& s, Str v) {
                   if (std::string(key) == "split.train") s.train = parse_range(v);
                   else if (std::string(key) == "split.validation") s.validation = parse_range(v);
                   else s.test = parse_range(v);
                 }});
  };
  range_field("split.train", &market_data::SplitSpec::train);
  range_field("split.validation", &market_data::SplitSpec::validation);
  range_field("split.test", &market_data::SplitSpec::test);

  auto rolling_field = [&](const char* key, std::size_t RollingConfig::*member) {
    f.push_back({key, [=](const R& c) { return c.rolling ? uns((*c.rolling).*member) : std::nullopt; },
                 [=](R& c, S&, Str v) {
                   if (!c.rolling) c.rolling.emplace();
                   (*c.rolling).*member = to_unsigned(v);
                 }});
  };
  rolling_field("rolling.train", &RollingConfig::train);
  rolling_field("rolling.validation", &RollingConfig::validation);
  rolling_field("rolling.test", &RollingConfig::test);
  rolling_field("rolling.stride", &RollingConfig::stride);
  f.push_back({"rolling.window",
               [=](const R& c) { return c.rolling && c.rolling->window ? uns(*c.rolling->window) : std::nullopt; },
               [](R& c, S&, Str v) {
                 if (!c.rolling) c.rolling.emplace();
                 c.rolling->window = to_unsigned(v);
               }});

  f.push_back({"env.task", [](const R& c) { return std::optional<std::string>(env::to_string(c.env.task)); },
               [](R& c, S&, Str v) { c.env.task = parse_enum<env::Task>(v, env::parse_task, "task"); }});
  f.push_back({"env.action", [](const R& c) { return std::optional<std::string>(env::to_string(c.env.action.kind)); },
               [](R& c, S&, Str v) {
                 c.env.action.kind = parse_enum<env::ActionKind>(v, env::parse_action_kind, "action kind");
               }});
  f.push_back({"env.max_shares", [=](const R& c) { return uns(std::uint64_t(c.env.action.max_shares)); },
               [](R& c, S&, Str v) { c.env.action.max_shares = static_cast<int>(to_unsigned(v)); }});
  f.push_back({"env.reward", [](const R& c) { return std::optional<std::string>(env::to_string(c.env.reward.kind)); },
               [](R& c, S&, Str v) {
                 c.env.reward.kind = parse_enum<env::RewardKind>(v, env::parse_reward_kind, "reward");
               }});
  f.push_back({"env.reward_window", [=](const R& c) { return uns(c.env.reward.window); },
               [](R& c, S&, Str v) { c.env.reward.window = to_unsigned(v); }});
  f.push_back({"env.reward_scaling",
               [=](const R& c) { return c.env.reward.scaling ? num(*c.env.reward.scaling) : std::nullopt; },
               [](R& c, S&, Str v) { c.env.reward.scaling = to_double(v); }});
  f.push_back({"env.capital", [=](const R& c) { return num(c.env.initial_capital); },
               [](R& c, S&, Str v) { c.env.initial_capital = to_double(v); }});
  f.push_back({"env.costs.flat_fee", [=](const R& c) { return num(c.env.costs.flat_fee); },
               [](R& c, S&, Str v) { c.env.costs.flat_fee = to_double(v); }});
  f.push_back({"env.costs.per_share_rate", [=](const R& c) { return num(c.env.costs.per_share_rate); },
               [](R& c, S&, Str v) { c.env.costs.per_share_rate = to_double(v); }});
  f.push_back({"env.costs.half_spread", [=](const R& c) { return num(c.env.costs.half_spread); },
               [](R& c, S&, Str v) { c.env.costs.half_spread = to_double(v); }});
  f.push_back({"env.gate.enabled", [](const R& c) { return std::optional(from_bool(c.env.gate.enabled)); },
               [](R& c, S&, Str v) { c.env.gate.enabled = to_bool(v); }});
  f.push_back({"env.gate.lookback", [=](const R& c) { return uns(c.env.gate.lookback); },
               [](R& c, S&, Str v) { c.env.gate.lookback = to_unsigned(v); }});
  f.push_back({"env.gate.threshold", [=](const R& c) { return num(c.env.gate.threshold); },
               [](R& c, S&, Str v) { c.env.gate.threshold = to_double(v); }});
  f.push_back({"env.gate.ridge", [=](const R& c) { return c.env.gate.ridge ? num(*c.env.gate.ridge) : std::nullopt; },
               [](R& c, S&, Str v) { c.env.gate.ridge = to_double(v); }});

  // agent.algorithm is applied before every other agent key; see parse_config.
  f.push_back({"agent.algorithm",
               [](const R& c) { return std::optional<std::string>(agents::to_string(c.agent.algorithm)); },
               [](R&, S&, Str) {}});
  f.push_back({"agent.hidden",
               [](const R& c) {
                 std::vector<std::string> w;
                 for (auto h : c.agent.hidden) w.push_back(std::to_string(h));
                 return std::optional(join(w));
               },
               [](R& c, S&, Str v) {
                 c.agent.hidden.clear();
                 for (const auto& w : split_list(v)) c.agent.hidden.push_back(to_unsigned(w));
               }});
  f.push_back({"agent.activation",
               [](const R& c) { return std::optional<std::string>(agents::to_string(c.agent.hidden_activation)); },
               [](R& c, S&, Str v) {
                 c.agent.hidden_activation = parse_enum<agents::Activation>(v, agents::parse_activation, "activation");
               }});
  auto agent_double = [&](const char* key, double agents::AgentConfig::*m) {
    f.push_back({key, [=](const R& c) { return num(c.agent.*m); },
                 [=](R& c, S&, Str v) { c.agent.*m = to_double(v); }});
  };
  auto agent_size = [&](const char* key, std::size_t agents::AgentConfig::*m) {
    f.push_back({key, [=](const R& c) { return uns(c.agent.*m); },
                 [=](R& c, S&, Str v) { c.agent.*m = to_unsigned(v); }});
  };
  auto agent_bool = [&](const char* key, bool agents::AgentConfig::*m) {
    f.push_back({key, [=](const R& c) { return std::optional(from_bool(c.agent.*m)); },
                 [=](R& c, S&, Str v) { c.agent.*m = to_bool(v); }});
  };
  agent_double("agent.actor_lr", &agents::AgentConfig::actor_lr);
  agent_double("agent.critic_lr", &agents::AgentConfig::critic_lr);
  agent_double("agent.gamma", &agents::AgentConfig::gamma);
  agent_double("agent.tau", &agents::AgentConfig::tau);
  agent_size("agent.batch_size", &agents::AgentConfig::batch_size);
  agent_size("agent.buffer_capacity", &agents::AgentConfig::buffer_capacity);
  agent_size("agent.total_steps", &agents::AgentConfig::total_steps);
  agent_size("agent.learning_starts", &agents::AgentConfig::learning_starts);
  agent_double("agent.epsilon_start", &agents::AgentConfig::epsilon_start);
  agent_double("agent.epsilon_end", &agents::AgentConfig::epsilon_end);
  agent_double("agent.epsilon_fraction", &agents::AgentConfig::epsilon_fraction);
  agent_size("agent.target_update_interval", &agents::AgentConfig::target_update_interval);
  agent_double("agent.exploration_sigma", &agents::AgentConfig::exploration_sigma);
  agent_size("agent.policy_delay", &agents::AgentConfig::policy_delay);
  agent_double("agent.target_noise", &agents::AgentConfig::target_noise);
  agent_double("agent.noise_clip", &agents::AgentConfig::noise_clip);
  agent_double("agent.clip_ratio", &agents::AgentConfig::clip_ratio);
  agent_size("agent.epochs", &agents::AgentConfig::epochs);
  agent_double("agent.gae_lambda", &agents::AgentConfig::gae_lambda);
  agent_size("agent.rollout_length", &agents::AgentConfig::rollout_length);
  agent_size("agent.minibatch_size", &agents::AgentConfig::minibatch_size);
  agent_double("agent.entropy_coef", &agents::AgentConfig::entropy_coef);
  agent_double("agent.init_log_std", &agents::AgentConfig::init_log_std);
  agent_double("agent.max_grad_norm", &agents::AgentConfig::max_grad_norm);
  agent_bool("agent.normalize_observations", &agents::AgentConfig::normalize_observations);
  agent_bool("agent.self_test", &agents::AgentConfig::self_test);
  f.push_back({"agent.checkpoint_interval", [=](const R& c) { return uns(c.checkpoint_interval); },
               [](R& c, S&, Str v) { c.checkpoint_interval = to_unsigned(v); }});

  f.push_back({"baselines",
               [](const R& c) {
                 std::vector<std::string> kinds;
                 for (const auto& b : c.baselines) kinds.emplace_back(baselines::to_string(b.kind));
                 return kinds.empty() ? std::nullopt : std::optional(join(kinds));
               },
               [](R&, S&, Str) {}});  // handled in parse_config
  f.push_back({"output.dir", [](const R& c) { return std::optional(c.output.dir); },
               [](R& c, S&, Str v) { c.output.dir = v; }});
  f.push_back({"output.formats", [](const R& c) { return std::optional(join(c.output.formats)); },
               [](R& c, S&, Str v) { c.output.formats = split_list(v); }});
  return f;
}

/// Per-strategy parameters live under `baseline.<kind>.<param>`.
inline const std::vector<std::string>& baseline_params() {
  static const std::vector<std::string> params{"rebalance_every", "lookback", "top_k", "risk_aversion",
                                               "estimation_window"};
  return params;
}

inline std::optional<std::string> get_baseline_param(const baselines::StrategyConfig& b, const std::string& p) {
  using K = baselines::StrategyKind;
  if (p == "rebalance_every" && b.kind != K::buy_and_hold) return std::to_string(b.rebalance_every);
  if (p == "lookback" && b.kind == K::momentum) return std::to_string(b.lookback);
  if (p == "top_k" && b.kind == K::momentum && b.top_k) return std::to_string(*b.top_k);
  if (p == "risk_aversion" && b.kind == K::mean_variance) return format_double(b.risk_aversion);
  if (p == "estimation_window" && (b.kind == K::mean_variance || b.kind == K::min_variance))
    return std::to_string(b.estimation_window);
  return std::nullopt;
}

inline void set_baseline_param(baselines::StrategyConfig& b, const std::string& p, const std::string& v) {
  if (p == "rebalance_every") b.rebalance_every = to_unsigned(v);
  else if (p == "lookback") b.lookback = to_unsigned(v);
  else if (p == "top_k") b.top_k = to_unsigned(v);
  else if (p == "risk_aversion") b.risk_aversion = to_double(v);
  else if (p == "estimation_window") b.estimation_window = to_unsigned(v);
  else throw std::invalid_argument("unknown baseline parameter '" + p + "'");
}

}  // namespace detail

/// Builds a RunConfig from parsed key-values. Unknown keys and malformed values
/// are errors naming the line.
inline RunConfig parse_config(const KeyValues& kv, const std::string& origin = "config") {
  RunConfig config;
  detail::SplitDraft draft;
  auto where = [&](const KeyValues::Entry& e) { return origin + ":" + std::to_string(e.line) + ": "; };
  auto apply = [&](const std::string& key, const KeyValues::Entry& e, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& ex) {
      fail(ErrorCode::InvalidConfig, where(e) + key + ": " + ex.what());
    }
  };

  if (const auto it = kv.entries.find("agent.algorithm"); it != kv.entries.end())
    apply(it->first, it->second, [&] {
      config.agent = agents::AgentConfig::defaults(
          detail::parse_enum<agents::Algorithm>(it->second.value, agents::parse_algorithm, "algorithm"));
    });
  if (const auto it = kv.entries.find("baselines"); it != kv.entries.end())
    apply(it->first, it->second, [&] {
      for (const auto& name : detail::split_list(it->second.value)) {
        config.baselines.push_back(baselines::StrategyConfig::of(
            detail::parse_enum<baselines::StrategyKind>(name, baselines::parse_strategy_kind, "baseline")));
      }
    });

  const auto fields = detail::scalar_fields();
  for (const auto& [key, entry] : kv.entries) {
    if (key.rfind("data.schema.", 0) == 0) {
      const std::string field = key.substr(12);
      if (std::find(market_data::kCanonicalColumns.begin(), market_data::kCanonicalColumns.end(), field) ==
          market_data::kCanonicalColumns.end())
        fail(ErrorCode::InvalidConfig, where(entry) + "unknown schema field '" + field + "'");
      config.data.schema.columns[field] = entry.value;
      continue;
    }
    if (key.rfind("baseline.", 0) == 0) {
      const auto dot = key.find('.', 9);
      const std::string kind_name = key.substr(9, dot == std::string::npos ? std::string::npos : dot - 9);
      const auto kind = baselines::parse_strategy_kind(kind_name);
      if (!kind || dot == std::string::npos)
        fail(ErrorCode::InvalidConfig, where(entry) + "unknown key '" + key + "'");
      bool listed = false;
      for (auto& b : config.baselines)
        if (b.kind == *kind) {
          listed = true;
          apply(key, entry, [&] { detail::set_baseline_param(b, key.substr(dot + 1), entry.value); });
        }
      if (!listed)
        fail(ErrorCode::InvalidConfig, where(entry) + "'" + key + "' configures a baseline not listed in 'baselines'");
      continue;
    }
    const auto f = std::find_if(fields.begin(), fields.end(), [&](const auto& x) { return x.key == key; });
    if (f == fields.end()) fail(ErrorCode::InvalidConfig, where(entry) + "unknown key '" + key + "'");
    apply(key, entry, [&] { f->set(config, draft, entry.value); });
  }

  const int ranges = int(draft.train.has_value()) + int(draft.validation.has_value()) + int(draft.test.has_value());
  if (ranges != 0 && ranges != 3)
    fail(ErrorCode::InvalidConfig, origin + ": split needs all of split.train, split.validation and split.test");
  if (ranges == 3) config.split.emplace(*draft.train, *draft.validation, *draft.test);
  config.agent.seed = config.seed;
  return config;
}

inline RunConfig parse_config(std::istream& in, const std::string& origin = "config") {
  return parse_config(KeyValues::parse(in, origin), origin);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(bool(in), ErrorCode::Io, "cannot open config file " + path.string());
  RunConfig config = parse_config(in, path.string());
  config.base_dir = path.parent_path();
  return config;
}

/// Canonical text form; parse_config(emit_config(c)) == c.
inline std::string emit_config(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  auto line = [&](const std::string& key, const std::string& value) {
    const std::string head = key.substr(0, key.find('.'));
    if (!section.empty() && head != section) out << '\n';
    section = head;
    out << key << " = " << value << '\n';
  };
  for (const auto& f : detail::scalar_fields()) {
    if (const auto v = f.get(config)) line(f.key, *v);
    if (f.key == "data.tickers")
      for (const auto& [field, column] : config.data.schema.columns) line("data.schema." + field, column);
  }
  for (const auto& b : config.baselines)
    for (const auto& p : detail::baseline_params())
      if (const auto v = detail::get_baseline_param(b, p))
        line("baseline." + std::string(baselines::to_string(b.kind)) + "." + p, *v);
  return out.str();
}

/// Relative data paths resolve against MARKETGYM_DATA_DIR when it is set, else
/// against the directory holding the config file.
inline std::filesystem::path resolve_data_path(const RunConfig& config) {
  const std::filesystem::path p(config.data.path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("MARKETGYM_DATA_DIR"); root && *root) return std::filesystem::path(root) / p;
  return config.base_dir / p;
}

/// Checks everything that does not need the data itself.
inline void validate_config(const RunConfig& config) {
  require(!config.data.path.empty(), ErrorCode::InvalidConfig, "data.path is required");
  const auto path = resolve_data_path(config);
  require(std::filesystem::exists(path), ErrorCode::Io, "data file not found: " + path.string());
  require(config.split.has_value() != config.rolling.has_value(), ErrorCode::InvalidConfig,
          "exactly one of split.* or rolling.* must be given");
  if (config.rolling)
    require(config.rolling->train > 0 && config.rolling->validation > 0 && config.rolling->test > 0 &&
                config.rolling->stride > 0,
            ErrorCode::InvalidConfig, "rolling.train, rolling.validation, rolling.test and rolling.stride must be > 0");
  config.env.costs.validate();
  config.env.reward.validate();
  require(config.env.initial_capital > 0, ErrorCode::InvalidConfig, "env.capital must be > 0");
  require(config.env.action.kind == env::ActionKind::simplex_weights || config.env.action.max_shares >= 1,
          ErrorCode::InvalidConfig, "env.max_shares must be >= 1");
  config.agent.validate();
  require(!config.output.dir.empty(), ErrorCode::InvalidConfig, "output.dir is required");
  for (const auto& f : config.output.formats)
    require(f == "text" || f == "csv" || f == "json" || f == "latex", ErrorCode::InvalidConfig,
            "unknown output format '" + f + "'");
}

}  // namespace marketgym::cli
