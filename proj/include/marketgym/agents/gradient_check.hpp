#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "marketgym/agents/mlp.hpp"

namespace marketgym::agents {

/// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero gradients from
/// turning rounding noise into large relative errors.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Compares analytic gradients of a scalar loss with central differences on up to
/// `max_probes` randomly chosen coordinates of the flat parameter vector.
/// Returns the worst relative error.
inline double finite_difference_check(Mlp net, const std::function<double(const Mlp&)>& loss,
                                      const Vector& analytic, Rng& rng, std::size_t max_probes = 64,
                                      double step = 1e-5) {
  Vector theta = net.parameters();
  require(analytic.size() == theta.size(), ErrorCode::ShapeMismatch, "analytic gradient length mismatch");
  const auto P = static_cast<std::size_t>(theta.size());
  double worst = 0.0;
  for (std::size_t probe = 0; probe < std::min(max_probes, P); ++probe) {
    const auto k = static_cast<Eigen::Index>(max_probes >= P ? probe : rng.index(P));
    const double saved = theta[k];
    theta[k] = saved + step;
    net.set_parameters(theta);
    const double up = loss(net);
    theta[k] = saved - step;
    net.set_parameters(theta);
    const double down = loss(net);
    theta[k] = saved;
    worst = std::max(worst, relative_error((up - down) / (2 * step), analytic[k]));
  }
  return worst;
}

/// Flattens gradients in the same order as Mlp::parameters().
inline Vector flatten(const Gradients& g) {
  Eigen::Index total = 0;
  for (const auto& l : g.layers) total += l.weight.size() + l.bias.size();
  Vector out(total);
  Eigen::Index k = 0;
  for (const auto& l : g.layers) {
    out.segment(k, l.weight.size()) = Eigen::Map<const Vector>(l.weight.data(), l.weight.size());
    k += l.weight.size();
    out.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return out;
}

/// Checks mlp_gradients against central differences of upstream . net(input)
/// at a random input; throws if the worst relative error exceeds `tolerance`.
/// A probe straddling a relu kink can fail spuriously, so a failure is retried
/// at fresh inputs before it counts.
inline void self_test(const Mlp& net, Rng& rng, double tolerance = 1e-4) {
  double err = 0.0;
  for (int attempt = 0; attempt < 3; ++attempt) {
    Vector input(static_cast<Eigen::Index>(net.input_size()));
    Vector upstream(static_cast<Eigen::Index>(net.output_size()));
    for (auto& x : input) x = rng.uniform(-1, 1);
    for (auto& u : upstream) u = rng.uniform(-1, 1);
    const Vector analytic = flatten(mlp_gradients(net, input, upstream));
    err = finite_difference_check(
        net, [&](const Mlp& m) { return upstream.dot(m.forward(input)); }, analytic, rng, 48);
    if (err < tolerance) return;
  }
  fail(ErrorCode::TrainingDiverged, "network gradient self-test failed, relative error " + std::to_string(err));
}

}  // namespace marketgym::agents
