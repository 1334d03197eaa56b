#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "marketgym/error.hpp"
#include "marketgym/linalg.hpp"

namespace marketgym::baselines {

/// Long-only, fully invested portfolio weights.
class WeightVector {
 public:
  static constexpr double kTolerance = 1e-9;

  explicit WeightVector(Vector weights) : weights_(std::move(weights)) {
    require(weights_.size() > 0, ErrorCode::ShapeMismatch, "weight vector is empty");
    require((weights_.array() >= 0.0).all() && std::abs(weights_.sum() - 1.0) <= kTolerance,
            ErrorCode::InvalidConfig, "weights must be non-negative and sum to 1");
  }

  static WeightVector equal(std::size_t n) {
    return WeightVector(Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / double(n)));
  }

  const Vector& values() const { return weights_; }
  double operator[](Eigen::Index i) const { return weights_[i]; }
  Eigen::Index size() const { return weights_.size(); }

 private:
  Vector weights_;
};

/// Euclidean projection onto {w >= 0, sum w = 1} by the sorting method.
inline Vector project_to_simplex(const Vector& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / double(j + 1);
    if (u[j] - t > 0) theta = t;
  }
  Vector w = (v.array() - theta).cwiseMax(0.0).matrix();
  return w / w.sum();
}

struct SolverOptions {
  std::size_t max_iterations = 20'000;
  double step_tolerance = 1e-13;  // stop once no weight moves by more than this
};

struct SolverResult {
  Vector weights;
  std::vector<double> objective_trace;  // objective at the start and after every iteration
  std::size_t iterations = 0;
};

/// Projected gradient descent for f(w) = w'Qw - c'w on the simplex, started at
/// equal weights. Step 1/L with L = 2 * trace(Q), an upper bound on the gradient's
/// Lipschitz constant for PSD Q, which makes the objective non-increasing.
inline SolverResult minimize_on_simplex(const Matrix& Q, const Vector& c, const SolverOptions& options = {}) {
  const auto n = Q.rows();
  require(Q.cols() == n && c.size() == n && n > 0, ErrorCode::ShapeMismatch, "quadratic program shape mismatch");
  auto objective = [&](const Vector& w) { return w.dot(Q * w) - c.dot(w); };
  SolverResult result;
  result.weights = Vector::Constant(n, 1.0 / double(n));
  result.objective_trace.push_back(objective(result.weights));
  const double L = 2.0 * Q.trace();
  if (!(L > 0)) {
    // Linear objective: the optimum is the vertex with the largest c (lowest index on ties).
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (c[i] > c[best]) best = i;
    result.weights = Vector::Unit(n, best);
    result.objective_trace.push_back(objective(result.weights));
    result.iterations = 1;
    return result;
  }
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const Vector grad = 2.0 * Q * result.weights - c;
    const Vector next = project_to_simplex(result.weights - grad / L);
    const double move = (next - result.weights).cwiseAbs().maxCoeff();
    const double f = objective(next);
    // Sufficient decrease guarantees this up to rounding; keep the old point otherwise.
    if (f > result.objective_trace.back()) break;
    result.weights = next;
    result.objective_trace.push_back(f);
    result.iterations = it + 1;
    if (move <= options.step_tolerance) break;
  }
  return result;
}

}  // namespace marketgym::baselines
