#pragma once

#include <cmath>

#include "marketgym/linalg.hpp"

// Log-likelihoods of the stochastic policy heads and their analytic derivatives.

namespace marketgym::agents::heads {

inline Vector softmax(const Vector& logits) {
  const Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

inline double categorical_log_prob(const Vector& logits, Eigen::Index action) {
  const double m = logits.maxCoeff();
  return logits[action] - m - std::log((logits.array() - m).exp().sum());
}

/// d log pi(action) / d logits = onehot(action) - softmax(logits).
inline Vector categorical_log_prob_grad(const Vector& logits, Eigen::Index action) {
  Vector g = -softmax(logits);
  g[action] += 1.0;
  return g;
}

inline double categorical_entropy(const Vector& logits) {
  const Vector p = softmax(logits);
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 0) h -= p[i] * std::log(p[i]);
  return h;
}

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

/// Diagonal Gaussian with state-independent log standard deviations.
inline double gaussian_log_prob(const Vector& mean, const Vector& log_std, const Vector& action) {
  const Vector z = (action - mean).array() / log_std.array().exp();
  return -0.5 * z.squaredNorm() - log_std.sum() - kHalfLog2Pi * static_cast<double>(mean.size());
}

/// d log pi / d mean = (a - mu) / sigma^2.
inline Vector gaussian_log_prob_grad_mean(const Vector& mean, const Vector& log_std, const Vector& action) {
  return ((action - mean).array() / (2.0 * log_std.array()).exp()).matrix();
}

/// d log pi / d log_std = ((a - mu) / sigma)^2 - 1.
inline Vector gaussian_log_prob_grad_log_std(const Vector& mean, const Vector& log_std, const Vector& action) {
  const Vector z = (action - mean).array() / log_std.array().exp();
  return (z.array().square() - 1.0).matrix();
}

inline double gaussian_entropy(const Vector& log_std) {
  return log_std.sum() + static_cast<double>(log_std.size()) * (0.5 + kHalfLog2Pi);
}

}  // namespace marketgym::agents::heads
