#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "marketgym/agents/config.hpp"
#include "marketgym/agents/mlp.hpp"
#include "marketgym/agents/normalizer.hpp"
#include "marketgym/rl/environment.hpp"

namespace marketgym::agents {

inline constexpr int kPolicyFormatVersion = 1;

/// Trained, immutable evaluation policy: the acting network plus the observation
/// statistics it was trained with. act() is the deterministic eval-mode action
/// (greedy Q, noiseless actor, or distribution mode).
class Policy {
 public:
  Policy() = default;
  Policy(Algorithm algorithm, rl::ActionSpace space, Mlp network, std::optional<RunningNormalizer> normalizer)
      : algorithm_(algorithm), space_(space), network_(std::move(network)), normalizer_(std::move(normalizer)) {}

  Algorithm algorithm() const { return algorithm_; }
  const rl::ActionSpace& action_space() const { return space_; }
  const Mlp& network() const { return network_; }
  const std::optional<RunningNormalizer>& normalizer() const { return normalizer_; }
  std::size_t observation_size() const { return network_.input_size(); }

  std::uint64_t checkpoint_step() const { return checkpoint_step_; }
  void set_checkpoint_step(std::uint64_t step) { checkpoint_step_ = step; }

  Vector prepare(const Vector& observation) const {
    require(observation.size() == static_cast<Eigen::Index>(observation_size()), ErrorCode::ShapeMismatch,
            "observation length " + std::to_string(observation.size()) + " != policy input " +
                std::to_string(observation_size()));
    return normalizer_ ? normalizer_->normalize(observation) : observation;
  }

  Vector act(const Vector& observation) const {
    const Vector out = network_.forward(prepare(observation));
    if (space_.type == rl::ActionType::discrete) {
      Eigen::Index best = 0;
      out.maxCoeff(&best);
      return Vector::Constant(1, static_cast<double>(space_.first + best));
    }
    return out.cwiseMax(-1.0).cwiseMin(1.0);
  }

  friend bool operator==(const Policy& a, const Policy& b) {
    return a.algorithm_ == b.algorithm_ && a.space_.type == b.space_.type && a.space_.count == b.space_.count &&
           a.space_.first == b.space_.first && a.space_.dim == b.space_.dim && a.network_ == b.network_ &&
           a.normalizer_ == b.normalizer_ && a.checkpoint_step_ == b.checkpoint_step_;
  }

 private:
  Algorithm algorithm_ = Algorithm::dqn;
  rl::ActionSpace space_;
  Mlp network_;
  std::optional<RunningNormalizer> normalizer_;
  std::uint64_t checkpoint_step_ = 0;
};

namespace detail {

inline nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector json_vector(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace detail

/// JSON policy document. Weights are stored row-major per layer; doubles are written
/// with round-trip precision so a reloaded policy acts bit-identically.
inline nlohmann::json policy_to_json(const Policy& policy) {
  using nlohmann::json;
  const auto& net = policy.network();
  json layers = json::array();
  for (const auto& l : net.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    layers.push_back({{"weights", w}, {"bias", detail::vector_json(l.bias)}});
  }
  const auto& space = policy.action_space();
  json doc = {
      {"format", "marketgym-policy"},
      {"version", kPolicyFormatVersion},
      {"algorithm", to_string(policy.algorithm())},
      {"checkpoint_step", policy.checkpoint_step()},
      {"action_space",
       {{"type", space.type == rl::ActionType::discrete ? "discrete" : "continuous"},
        {"count", space.count},
        {"first", space.first},
        {"dim", space.dim}}},
      {"network",
       {{"layer_sizes", net.sizes()},
        {"hidden_activation", to_string(net.hidden_activation())},
        {"output_activation", to_string(net.output_activation())},
        {"layers", layers}}},
  };
  if (const auto& norm = policy.normalizer())
    doc["normalizer"] = {{"count", norm->count()},
                         {"mean", detail::vector_json(norm->mean())},
                         {"var", detail::vector_json(norm->var())}};
  else
    doc["normalizer"] = nullptr;
  return doc;
}

inline Policy policy_from_json(const nlohmann::json& doc) {
  try {
    require(doc.at("format") == "marketgym-policy", ErrorCode::SchemaMismatch, "not a policy document");
    require(doc.at("version") == kPolicyFormatVersion, ErrorCode::SchemaMismatch,
            "unsupported policy version " + doc.at("version").dump());
    const auto algorithm = parse_algorithm(doc.at("algorithm").get<std::string>());
    require(algorithm.has_value(), ErrorCode::SchemaMismatch, "unknown algorithm");
    const auto& s = doc.at("action_space");
    rl::ActionSpace space;
    space.type = s.at("type") == "discrete" ? rl::ActionType::discrete : rl::ActionType::continuous;
    space.count = s.at("count").get<std::size_t>();
    space.first = s.at("first").get<std::int64_t>();
    space.dim = s.at("dim").get<std::size_t>();
    const auto& n = doc.at("network");
    const auto hidden = parse_activation(n.at("hidden_activation").get<std::string>());
    const auto output = parse_activation(n.at("output_activation").get<std::string>());
    require(hidden && output, ErrorCode::SchemaMismatch, "unknown activation");
    Mlp net(n.at("layer_sizes").get<std::vector<std::size_t>>(), *hidden, *output);
    const auto& layers = n.at("layers");
    require(layers.size() == net.layers().size(), ErrorCode::SchemaMismatch, "layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& layer = net.layers()[l];
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      require(w.size() == static_cast<std::size_t>(layer.weight.size()), ErrorCode::SchemaMismatch,
              "weight count mismatch");
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = w[k++];
      layer.bias = detail::json_vector(layers[l].at("bias"));
      require(layer.bias.size() == layer.weight.rows(), ErrorCode::SchemaMismatch, "bias size mismatch");
    }
    std::optional<RunningNormalizer> norm;
    if (!doc.at("normalizer").is_null()) {
      const auto& j = doc.at("normalizer");
      norm = RunningNormalizer(detail::json_vector(j.at("mean")), detail::json_vector(j.at("var")),
                               j.at("count").get<double>());
    }
    Policy policy(*algorithm, space, std::move(net), std::move(norm));
    policy.set_checkpoint_step(doc.at("checkpoint_step").get<std::uint64_t>());
    return policy;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, std::string("malformed policy document: ") + e.what());
  }
}

inline std::string policy_to_string(const Policy& policy) { return policy_to_json(policy).dump(1) + "\n"; }

inline Policy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open policy '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, "policy '" + path.string() + "' is not valid JSON");
  }
  return policy_from_json(doc);
}

/// Free-function form of Policy::act.
inline Vector act(const Policy& policy, const Vector& observation) { return policy.act(observation); }

}  // namespace marketgym::agents
