#pragma once

#include <vector>

#include "marketgym/agents/rng.hpp"
#include "marketgym/error.hpp"
#include "marketgym/linalg.hpp"

namespace marketgym::agents {

struct Experience {
  Vector observation;
  Vector action;
  double reward = 0.0;
  Vector next_observation;
  bool done = false;
};

/// Column-per-sample training batch.
struct Batch {
  Matrix observations;
  Matrix actions;
  Vector rewards;
  Matrix next_observations;
  Vector dones;  // 1.0 for terminal transitions

  std::size_t size() const { return static_cast<std::size_t>(rewards.size()); }
};

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    require(capacity > 0, ErrorCode::InvalidConfig, "replay capacity must be > 0");
    storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  void push(Experience e) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(e));
    } else {
      storage_[head_] = std::move(e);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// i-th oldest transition still held.
  const Experience& at(std::size_t i) const { return storage_[(head_ + i) % storage_.size()]; }

  Batch sample(std::size_t batch_size, Rng& rng) const {
    require(batch_size > 0 && size() >= batch_size, ErrorCode::InvalidConfig,
            "cannot sample " + std::to_string(batch_size) + " transitions from " + std::to_string(size()));
    const auto& first = storage_.front();
    const auto B = static_cast<Eigen::Index>(batch_size);
    Batch b{Matrix(first.observation.size(), B), Matrix(first.action.size(), B), Vector(B),
            Matrix(first.next_observation.size(), B), Vector(B)};
    for (Eigen::Index j = 0; j < B; ++j) {
      const auto& e = storage_[rng.index(storage_.size())];
      b.observations.col(j) = e.observation;
      b.actions.col(j) = e.action;
      b.rewards[j] = e.reward;
      b.next_observations.col(j) = e.next_observation;
      b.dones[j] = e.done ? 1.0 : 0.0;
    }
    return b;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest element once full
  std::vector<Experience> storage_;
};

}  // namespace marketgym::agents
