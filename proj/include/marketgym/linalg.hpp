#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <string>

namespace marketgym {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Column means of a rows-are-observations matrix.
inline Vector column_mean(const Matrix& samples) { return samples.colwise().mean().transpose(); }

/// Sample (n-1) covariance of a rows-are-observations matrix.
inline Matrix sample_covariance(const Matrix& samples) {
  const Matrix centered = samples.rowwise() - samples.colwise().mean();
  return (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
}

/// Default diagonal loading used wherever a return covariance is inverted or optimized over.
inline double default_ridge(const Matrix& covariance) {
  return 1e-8 * covariance.trace() / static_cast<double>(covariance.rows());
}

/// Shortest round-trip decimal representation.
inline std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

}  // namespace marketgym
