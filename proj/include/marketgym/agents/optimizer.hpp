#pragma once

#include <cmath>
#include <vector>

#include "marketgym/agents/mlp.hpp"

namespace marketgym::agents {

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam over a flat parameter vector. Steps descend: theta -= lr * m_hat / (sqrt(v_hat) + eps).
class AdamVector {
 public:
  AdamVector() = default;
  AdamVector(Eigen::Index size, AdamParams params)
      : params_(params), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

  void step(Eigen::Ref<Vector> theta, const Vector& grad) {
    ++t_;
    m_ = params_.beta1 * m_ + (1.0 - params_.beta1) * grad;
    v_ = params_.beta2 * v_ + (1.0 - params_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(params_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(params_.beta2, double(t_));
    theta.array() -= params_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + params_.epsilon);
  }

  const AdamParams& params() const { return params_; }

 private:
  AdamParams params_;
  Vector m_, v_;
  long t_ = 0;
};

/// Adam bound to the layer structure of one network.
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, AdamParams params) : params_(params) {
    for (const auto& l : net.layers()) {
      m_.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
      v_.push_back(m_.back());
    }
  }

  void step(Mlp& net, const Gradients& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(params_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(params_.beta2, double(t_));
    auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
      m = params_.beta1 * m + (1.0 - params_.beta1) * g;
      v = params_.beta2 * v + (1.0 - params_.beta2) * g.cwiseProduct(g);
      theta.array() -= params_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + params_.epsilon);
    };
    auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weight, m_[l].weight, v_[l].weight, grads.layers[l].weight);
      update(layers[l].bias, m_[l].bias, v_[l].bias, grads.layers[l].bias);
    }
  }

  const AdamParams& params() const { return params_; }

 private:
  AdamParams params_;
  std::vector<Layer> m_, v_;
  long t_ = 0;
};

/// Rescales gradients so their global norm is at most `max_norm` (no-op when max_norm <= 0).
inline void clip_global_norm(Gradients& grads, double max_norm, Vector* extra = nullptr) {
  if (max_norm <= 0) return;
  double sq = grads.squared_norm();
  if (extra) sq += extra->squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    grads *= max_norm / norm;
    if (extra) *extra *= max_norm / norm;
  }
}

}  // namespace marketgym::agents
