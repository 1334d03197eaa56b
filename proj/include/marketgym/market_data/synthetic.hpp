#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "marketgym/market_data/frame.hpp"

namespace marketgym::market_data {

struct SyntheticSpec {
  std::size_t tickers = 30;
  std::size_t days = 500;
  Timestamp start = make_timestamp(2017, 11, 1);
  std::uint64_t seed = 20201123;
  double bull_drift = 0.18;       // annualized, market factor
  double bear_drift = -0.25;      // annualized, market factor
  double switch_probability = 0.01;  // per day, either direction
  double market_vol = 0.16;       // annualized
};

namespace detail {

/// Box-Muller over mt19937_64 so the stream is identical across standard libraries.
class PortableNormal {
 public:
  explicit PortableNormal(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline double round_cents(double x) { return std::round(x * 100.0) / 100.0; }

}  // namespace detail

inline std::string synthetic_ticker(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "SYN%02zu", i + 1);
  return buf;
}

/// Daily bars from a one-factor geometric Brownian motion whose market drift
/// switches between a bull and a bear regime. Weekends are skipped.
inline MarketFrame synthetic_frame(const SyntheticSpec& spec = {}) {
  detail::PortableNormal normal(spec.seed);
  const auto n = static_cast<Eigen::Index>(spec.tickers);
  const auto T = static_cast<Eigen::Index>(spec.days);
  const double dt = 1.0 / 252.0;

  std::vector<double> beta(spec.tickers), idio(spec.tickers), price(spec.tickers), base_volume(spec.tickers);
  for (std::size_t i = 0; i < spec.tickers; ++i) {
    beta[i] = 0.6 + 0.8 * normal.uniform();
    idio[i] = 0.12 + 0.22 * normal.uniform();
    price[i] = detail::round_cents(20.0 + 280.0 * normal.uniform());
    base_volume[i] = std::round(2e5 + 4e6 * normal.uniform());
  }

  Matrix open(T, n), high(T, n), low(T, n), close(T, n), volume(T, n);
  std::vector<Timestamp> stamps;
  std::int64_t day = day_index(spec.start);
  bool bull = true;
  for (Eigen::Index t = 0; t < T; ++t) {
    // 1970-01-01 was a Thursday: day % 7 == 2 is Saturday, 3 is Sunday.
    while (((day % 7) + 7) % 7 == 2 || ((day % 7) + 7) % 7 == 3) ++day;
    stamps.push_back(Timestamp{day * 86400});
    ++day;

    if (normal.uniform() < spec.switch_probability) bull = !bull;
    const double drift = bull ? spec.bull_drift : spec.bear_drift;
    const double market = (drift - 0.5 * spec.market_vol * spec.market_vol) * dt +
                          spec.market_vol * std::sqrt(dt) * normal();
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double prev = price[k];
      const double o = detail::round_cents(prev * std::exp(0.003 * normal()));
      const double shock = beta[k] * market + idio[k] * std::sqrt(dt) * normal() - 0.5 * idio[k] * idio[k] * dt;
      const double c = std::max(0.01, detail::round_cents(prev * std::exp(shock)));
      double h = detail::round_cents(std::max(o, c) * std::exp(0.006 * std::abs(normal())));
      double l = detail::round_cents(std::min(o, c) * std::exp(-0.006 * std::abs(normal())));
      h = std::max({h, o, c});
      l = std::max(0.01, std::min({l, o, c}));
      open(t, i) = std::max(o, 0.01);
      high(t, i) = h;
      low(t, i) = l;
      close(t, i) = c;
      volume(t, i) = std::round(base_volume[k] * std::exp(0.3 * normal()));
      price[k] = c;
    }
  }
  std::vector<std::string> tickers;
  for (std::size_t i = 0; i < spec.tickers; ++i) tickers.push_back(synthetic_ticker(i));
  return MarketFrame(std::move(tickers), std::move(stamps), Granularity::daily, std::move(open), std::move(high),
                     std::move(low), std::move(close), std::move(volume));
}

}  // namespace marketgym::market_data
