#pragma once

#include <cmath>
#include <optional>

#include "marketgym/agents/config.hpp"
#include "marketgym/agents/normalizer.hpp"
#include "marketgym/agents/policy.hpp"
#include "marketgym/rl/environment.hpp"

namespace marketgym::agents::detail {

/// Observation statistics shared by all learners: updated on every observation the
/// environment emits, applied on the way into the networks.
class ObservationFilter {
 public:
  ObservationFilter(std::size_t size, bool enabled) {
    if (enabled) normalizer_.emplace(size);
  }

  void observe(const Vector& obs) {
    if (normalizer_) normalizer_->update(obs);
  }

  Vector apply(const Vector& obs) const { return normalizer_ ? normalizer_->normalize(obs) : obs; }
  Matrix apply_columns(const Matrix& obs) const { return normalizer_ ? normalizer_->normalize_columns(obs) : obs; }
  const std::optional<RunningNormalizer>& normalizer() const { return normalizer_; }

 private:
  std::optional<RunningNormalizer> normalizer_;
};

/// Episode bookkeeping and log emission.
class EpisodeLog {
 public:
  explicit EpisodeLog(const TrainHooks& hooks) : hooks_(hooks) {}

  void record_losses(double critic, double actor) {
    if (!std::isfinite(critic) || !std::isfinite(actor))
      fail(ErrorCode::TrainingDiverged, "non-finite loss at step " + std::to_string(step_));
    critic_sum_ += critic;
    actor_sum_ += actor;
    ++loss_count_;
  }

  void record_step(double reward, bool done) {
    ++step_;
    episode_return_ += reward;
    if (done) {
      ++episode_;
      if (hooks_.on_log) {
        const double k = loss_count_ ? double(loss_count_) : 1.0;
        hooks_.on_log(LogRow{step_, episode_, episode_return_, critic_sum_ / k, actor_sum_ / k});
      }
      episode_return_ = critic_sum_ = actor_sum_ = 0.0;
      loss_count_ = 0;
    }
  }

  bool checkpoint_due() const {
    return hooks_.on_checkpoint && hooks_.checkpoint_interval > 0 && step_ % hooks_.checkpoint_interval == 0;
  }

  void checkpoint(Policy policy) const {
    policy.set_checkpoint_step(step_);
    hooks_.on_checkpoint(step_, policy);
  }

  std::size_t step() const { return step_; }

 private:
  const TrainHooks& hooks_;
  std::size_t step_ = 0;
  std::size_t episode_ = 0;
  double episode_return_ = 0.0;
  double critic_sum_ = 0.0;
  double actor_sum_ = 0.0;
  std::size_t loss_count_ = 0;
};

inline std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace marketgym::agents::detail
