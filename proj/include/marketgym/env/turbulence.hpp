#pragma once

#include <algorithm>
#include <optional>

#include "marketgym/error.hpp"
#include "marketgym/linalg.hpp"

namespace marketgym::env {

/// Mahalanobis distance (y - mu)' Sigma^-1 (y - mu) of the current return vector from
/// a window of historical returns (rows are periods). Sigma is the sample covariance
/// plus `ridge` on the diagonal; the default ridge is 1e-8 * trace(Sigma) / n.
inline double compute_turbulence(const Matrix& history, const Vector& current, std::optional<double> ridge = {}) {
  const auto n = history.cols();
  require(current.size() == n, ErrorCode::ShapeMismatch, "return vector length must match history columns");
  require(history.rows() >= n + 2, ErrorCode::InsufficientHistory, "turbulence needs at least n + 2 observations");
  require(history.allFinite() && current.allFinite(), ErrorCode::InvalidConfig, "turbulence inputs must be finite");
  const Vector mu = column_mean(history);
  Matrix sigma = sample_covariance(history);
  const double eps = ridge.value_or(default_ridge(sigma));
  sigma.diagonal().array() += eps;
  const Vector deviation = current - mu;
  const Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14))
    fail(ErrorCode::SingularCovariance, "return covariance is not invertible; use a positive ridge");
  return std::max(0.0, deviation.dot(llt.solve(deviation)));
}

/// Simple returns p_t / p_{t-1} - 1, one row per period starting at row 1 of `close`.
inline Matrix simple_returns(const Matrix& close) {
  if (close.rows() < 2) return Matrix(0, close.cols());
  return (close.bottomRows(close.rows() - 1).array() / close.topRows(close.rows() - 1).array() - 1.0).matrix();
}

/// Turbulence at each row of a close-price panel, estimated from the preceding
/// `lookback` returns. Rows without a full lookback report 0.
inline Vector turbulence_series(const Matrix& close, std::size_t lookback, std::optional<double> ridge = {}) {
  const Matrix returns = simple_returns(close);
  Vector out = Vector::Zero(close.rows());
  const auto L = static_cast<Eigen::Index>(lookback);
  // return row r describes close row r + 1
  for (Eigen::Index r = L; r < returns.rows(); ++r)
    out[r + 1] = compute_turbulence(returns.middleRows(r - L, L), returns.row(r).transpose(), ridge);
  return out;
}

}  // namespace marketgym::env
