#pragma once

#include <cmath>

#include "marketgym/linalg.hpp"

namespace marketgym::agents {

/// Running mean and variance of observations (parallel Welford update), used to
/// standardize inputs: clip((x - mean) / sqrt(var + eps), -clip, clip).
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(std::size_t size)
      : mean_(Vector::Zero(static_cast<Eigen::Index>(size))), var_(Vector::Ones(static_cast<Eigen::Index>(size))) {}

  RunningNormalizer(Vector mean, Vector var, double count)
      : mean_(std::move(mean)), var_(std::move(var)), count_(count) {}

  void update(const Vector& x) {
    const double n = count_ + 1.0;
    const Vector delta = x - mean_;
    mean_ += delta / n;
    // var tracks the population variance of everything seen so far
    var_ = (var_ * count_ + delta.cwiseProduct(x - mean_)) / n;
    count_ = n;
  }

  Vector normalize(const Vector& x) const {
    return ((x - mean_).array() / (var_.array() + kEpsilon).sqrt()).cwiseMax(-kClip).cwiseMin(kClip).matrix();
  }

  Matrix normalize_columns(const Matrix& xs) const {
    Matrix out(xs.rows(), xs.cols());
    for (Eigen::Index c = 0; c < xs.cols(); ++c) out.col(c) = normalize(xs.col(c));
    return out;
  }

  const Vector& mean() const { return mean_; }
  const Vector& var() const { return var_; }
  double count() const { return count_; }
  std::size_t size() const { return static_cast<std::size_t>(mean_.size()); }

  friend bool operator==(const RunningNormalizer& a, const RunningNormalizer& b) {
    return a.mean_ == b.mean_ && a.var_ == b.var_ && a.count_ == b.count_;
  }

  static constexpr double kEpsilon = 1e-8;
  static constexpr double kClip = 10.0;

 private:
  Vector mean_;
  Vector var_;
  double count_ = 0.0;
};

}  // namespace marketgym::agents
