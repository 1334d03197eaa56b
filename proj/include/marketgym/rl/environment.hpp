#pragma once

#include <cstdint>
#include <span>

#include "marketgym/linalg.hpp"

namespace marketgym::rl {

enum class ActionType { discrete, continuous };

/// Discrete spaces carry `count` consecutive integer actions starting at `first`
/// (sent to the environment as a single value). Continuous spaces are boxes
/// [-1, 1]^dim.
struct ActionSpace {
  ActionType type = ActionType::continuous;
  std::size_t count = 0;
  std::int64_t first = 0;
  std::size_t dim = 1;

  static ActionSpace discrete(std::size_t count, std::int64_t first = 0) {
    return {ActionType::discrete, count, first, 1};
  }
  static ActionSpace continuous(std::size_t dim) { return {ActionType::continuous, 0, 0, dim}; }
};

struct Transition {
  Vector observation;
  double reward = 0.0;
  bool done = false;
};

/// Episodic environment contract the learners train against.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t observation_size() const = 0;
  virtual ActionSpace action_space() const = 0;
  virtual Vector reset() = 0;
  virtual Transition step(std::span<const double> action) = 0;
};

}  // namespace marketgym::rl
