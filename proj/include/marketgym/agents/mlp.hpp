#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "marketgym/agents/rng.hpp"
#include "marketgym/error.hpp"
#include "marketgym/linalg.hpp"

namespace marketgym::agents {

enum class Activation { identity, tanh, relu };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "identity";
}

inline std::optional<Activation> parse_activation(std::string_view s) {
  if (s == "identity") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  return std::nullopt;
}

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Per-parameter gradients, shaped like the network's layers.
struct Gradients {
  std::vector<Layer> layers;

  Gradients& operator+=(const Gradients& other) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].weight += other.layers[l].weight;
      layers[l].bias += other.layers[l].bias;
    }
    return *this;
  }

  Gradients& operator*=(double s) {
    for (auto& l : layers) {
      l.weight *= s;
      l.bias *= s;
    }
    return *this;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& l : layers) s += l.weight.squaredNorm() + l.bias.squaredNorm();
    return s;
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }
};

/// Activations kept from a batched forward pass for backpropagation.
struct ForwardCache {
  std::vector<Matrix> activations;  // activations[0] = input, activations[l+1] = output of layer l
};

/// Fully connected network with one activation for hidden layers and one for the output.
/// Batched inputs are column-per-sample matrices.
class Mlp {
 public:
  Mlp() = default;

  Mlp(std::vector<std::size_t> sizes, Activation hidden, Activation output)
      : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
    require(sizes_.size() >= 2, ErrorCode::ShapeMismatch, "network needs at least input and output widths");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      require(sizes_[l] > 0 && sizes_[l + 1] > 0, ErrorCode::ShapeMismatch, "layer widths must be positive");
      layers_.push_back({Matrix::Zero(static_cast<Eigen::Index>(sizes_[l + 1]), static_cast<Eigen::Index>(sizes_[l])),
                         Vector::Zero(static_cast<Eigen::Index>(sizes_[l + 1]))});
    }
  }

  /// Uniform fan-in initialization, U(-1/sqrt(in), 1/sqrt(in)); the output layer is
  /// scaled by `output_scale`.
  static Mlp random(std::vector<std::size_t> sizes, Activation hidden, Activation output, Rng& rng,
                    double output_scale = 1.0) {
    Mlp net(std::move(sizes), hidden, output);
    for (std::size_t l = 0; l < net.layers_.size(); ++l) {
      auto& layer = net.layers_[l];
      const double bound = (l + 1 == net.layers_.size() ? output_scale : 1.0) / std::sqrt(double(layer.weight.cols()));
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = rng.uniform(-bound, bound);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.uniform(-bound, bound);
    }
    return net;
  }

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  Matrix forward(const Matrix& input) const {
    check_input(input.rows());
    Matrix a = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      a = activate(std::move(z), activation_of(l));
    }
    return a;
  }

  Vector forward(const Vector& input) const { return forward(Matrix(input)).col(0); }

  Matrix forward(const Matrix& input, ForwardCache& cache) const {
    check_input(input.rows());
    cache.activations.clear();
    cache.activations.push_back(input);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * cache.activations.back();
      z.colwise() += layers_[l].bias;
      cache.activations.push_back(activate(std::move(z), activation_of(l)));
    }
    return cache.activations.back();
  }

  /// Reverse-mode gradients of sum(upstream .* output) over the cached batch.
  /// Optionally returns d/d(input) as well.
  Gradients backward(const ForwardCache& cache, const Matrix& upstream, Matrix* input_gradient = nullptr) const {
    require(cache.activations.size() == layers_.size() + 1, ErrorCode::ShapeMismatch, "stale forward cache");
    require(upstream.rows() == static_cast<Eigen::Index>(output_size()) &&
                upstream.cols() == cache.activations.back().cols(),
            ErrorCode::ShapeMismatch, "upstream gradient shape mismatch");
    Gradients grads;
    grads.layers.resize(layers_.size());
    Matrix delta = upstream;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      apply_derivative(delta, cache.activations[l + 1], activation_of(l));
      grads.layers[l].weight = delta * cache.activations[l].transpose();
      grads.layers[l].bias = delta.rowwise().sum();
      if (l > 0 || input_gradient) delta = layers_[l].weight.transpose() * delta;
    }
    if (input_gradient) *input_gradient = std::move(delta);
    return grads;
  }

  Gradients zero_gradients() const {
    Gradients g;
    for (const auto& l : layers_) g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                                                      Vector::Zero(l.bias.size())});
    return g;
  }

  /// Flat parameter view: each layer's weights (column-major) then its bias.
  Vector parameters() const {
    Vector out(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index k = 0;
    for (const auto& l : layers_) {
      out.segment(k, l.weight.size()) = Eigen::Map<const Vector>(l.weight.data(), l.weight.size());
      k += l.weight.size();
      out.segment(k, l.bias.size()) = l.bias;
      k += l.bias.size();
    }
    return out;
  }

  void set_parameters(const Vector& flat) {
    require(flat.size() == static_cast<Eigen::Index>(parameter_count()), ErrorCode::ShapeMismatch,
            "parameter vector length mismatch");
    Eigen::Index k = 0;
    for (auto& l : layers_) {
      Eigen::Map<Vector>(l.weight.data(), l.weight.size()) = flat.segment(k, l.weight.size());
      k += l.weight.size();
      l.bias = flat.segment(k, l.bias.size());
      k += l.bias.size();
    }
  }

  bool all_finite() const {
    for (const auto& l : layers_)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    if (a.sizes_ != b.sizes_ || a.hidden_ != b.hidden_ || a.output_ != b.output_) return false;
    for (std::size_t l = 0; l < a.layers_.size(); ++l)
      if (a.layers_[l].weight != b.layers_[l].weight || a.layers_[l].bias != b.layers_[l].bias) return false;
    return true;
  }

 private:
  Activation activation_of(std::size_t layer) const { return layer + 1 == layers_.size() ? output_ : hidden_; }

  void check_input(Eigen::Index rows) const {
    require(rows == static_cast<Eigen::Index>(input_size()), ErrorCode::ShapeMismatch,
            "network input has " + std::to_string(rows) + " rows, expected " + std::to_string(input_size()));
  }

  static Matrix activate(Matrix z, Activation a) {
    switch (a) {
      case Activation::identity: return z;
      case Activation::tanh: return z.array().tanh().matrix();
      case Activation::relu: return z.cwiseMax(0.0);
    }
    return z;
  }

  /// delta <- delta .* f'(z), written in terms of the activation output y = f(z).
  static void apply_derivative(Matrix& delta, const Matrix& y, Activation a) {
    switch (a) {
      case Activation::identity: break;
      case Activation::tanh: delta.array() *= 1.0 - y.array().square(); break;
      case Activation::relu: delta.array() *= (y.array() > 0.0).cast<double>(); break;
    }
  }

  std::vector<std::size_t> sizes_;
  Activation hidden_ = Activation::relu;
  Activation output_ = Activation::identity;
  std::vector<Layer> layers_;
};

/// Exact gradients of upstream . net(input) for a single input.
inline Gradients mlp_gradients(const Mlp& net, const Vector& input, const Vector& upstream) {
  ForwardCache cache;
  net.forward(Matrix(input), cache);
  return net.backward(cache, Matrix(upstream));
}

/// Polyak averaging: target <- tau * online + (1 - tau) * target.
inline void soft_update(Mlp& target, const Mlp& online, double tau) {
  auto& t = target.layers();
  const auto& o = online.layers();
  for (std::size_t l = 0; l < t.size(); ++l) {
    t[l].weight = tau * o[l].weight + (1.0 - tau) * t[l].weight;
    t[l].bias = tau * o[l].bias + (1.0 - tau) * t[l].bias;
  }
}

}  // namespace marketgym::agents
