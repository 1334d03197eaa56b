#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "marketgym/market_data/frame.hpp"
#include "marketgym/market_data/indicators.hpp"

namespace testing_support {

using marketgym::Matrix;
using marketgym::Vector;
using marketgym::market_data::MarketFrame;

inline std::vector<std::string> tickers(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(1, char('A' + i)));
  return out;
}

/// Daily frame with flat bars at the given closes (rows are days, columns assets).
inline MarketFrame frame_from_closes(const Matrix& close, std::vector<std::string> names = {},
                                     marketgym::Timestamp start = marketgym::make_timestamp(2020, 1, 1)) {
  if (names.empty()) names = tickers(static_cast<std::size_t>(close.cols()));
  std::vector<marketgym::Timestamp> ts;
  for (Eigen::Index r = 0; r < close.rows(); ++r) ts.push_back({start.seconds + r * 86400});
  const Matrix volume = Matrix::Constant(close.rows(), close.cols(), 1000.0);
  return MarketFrame(std::move(names), std::move(ts), marketgym::Granularity::daily, close, close, close, close,
                     volume);
}

/// Geometric random walk closes, strictly positive.
inline Matrix random_closes(std::mt19937_64& rng, Eigen::Index T, Eigen::Index n, double vol = 0.02,
                            double start = 100.0) {
  std::normal_distribution<double> z(0.0, vol);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  Matrix close(T, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    double p = start * u(rng);
    for (Eigen::Index r = 0; r < T; ++r) {
      close(r, c) = p;
      p *= std::exp(z(rng));
    }
  }
  return close;
}

inline std::vector<double> to_std(const Eigen::Ref<const Vector>& v) { return {v.data(), v.data() + v.size()}; }

inline Vector to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// A fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("marketgym_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
