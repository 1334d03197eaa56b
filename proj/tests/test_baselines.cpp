#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "marketgym/baselines/strategies.hpp"
#include "marketgym/market_data/synthetic.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace marketgym;
using namespace marketgym::baselines;
using testing_support::frame_from_closes;
using testing_support::random_closes;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Io;
}

oracle::Table to_table(const Matrix& m) {
  oracle::Table t(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t[static_cast<std::size_t>(r)].push_back(m(r, c));
  return t;
}

// Covariance with the same diagonal loading the optimizers apply.
oracle::Table loaded_covariance(const Matrix& returns) {
  auto cov = oracle::covariance(to_table(returns));
  double trace = 0.0;
  for (std::size_t i = 0; i < cov.size(); ++i) trace += cov[i][i];
  for (std::size_t i = 0; i < cov.size(); ++i) cov[i][i] += 1e-8 * trace / double(cov.size());
  return cov;
}

double quad(const oracle::Table& S, const std::vector<double>& w) {
  double q = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j) q += w[i] * S[i][j] * w[j];
  return q;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Correlated returns from a one-factor model.
Matrix factor_returns(std::mt19937_64& rng, Eigen::Index T, Eigen::Index n) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector beta(n), vol(n), drift(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    beta[i] = 0.5 + u(rng);
    vol[i] = 0.005 + 0.015 * u(rng);
    drift[i] = 0.002 * (u(rng) - 0.3);
  }
  Matrix r(T, n);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double f = 0.01 * z(rng);
    for (Eigen::Index i = 0; i < n; ++i) r(t, i) = drift[i] + beta[i] * f + vol[i] * z(rng);
  }
  return r;
}

// Columns are centred and mutually orthogonal: +-1 Walsh patterns scaled per asset.
Matrix orthogonal_returns(const std::vector<double>& scales) {
  const Eigen::Index T = 16;
  Matrix r(T, static_cast<Eigen::Index>(scales.size()));
  for (Eigen::Index c = 0; c < r.cols(); ++c)
    for (Eigen::Index t = 0; t < T; ++t) r(t, c) = scales[std::size_t(c)] * (((t >> c) & 1) ? -1.0 : 1.0);
  return r;
}

void expect_simplex(const WeightVector& w) {
  EXPECT_GE(w.values().minCoeff(), 0.0);
  EXPECT_NEAR(w.values().sum(), 1.0, 1e-9);
}

}  // namespace

// ---- simplex projection

TEST(Simplex, ProjectionOfFeasiblePointIsIdentity) {
  Vector w(3);
  w << 0.2, 0.5, 0.3;
  EXPECT_LT((project_to_simplex(w) - w).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Simplex, ProjectionHandCases) {
  Vector v(3);
  v << 2.0, 0.0, 0.0;
  EXPECT_TRUE(project_to_simplex(v).isApprox(Vector::Unit(3, 0)));
  v << 0.5, 0.5, -3.0;
  Vector expect(3);
  expect << 0.5, 0.5, 0.0;
  EXPECT_LT((project_to_simplex(v) - expect).cwiseAbs().maxCoeff(), 1e-15);
  v << 1.0, 1.0, 1.0;
  EXPECT_LT((project_to_simplex(v) - Vector::Constant(3, 1.0 / 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Simplex, ProjectionIsClosestFeasiblePointOnGrid) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector v(3);
    v << z(rng), z(rng), z(rng);
    const Vector p = project_to_simplex(v);
    const double best = -oracle::simplex_grid_max(
        [&](double a, double b, double c) {
          return -((a - v[0]) * (a - v[0]) + (b - v[1]) * (b - v[1]) + (c - v[2]) * (c - v[2]));
        },
        0.005);
    EXPECT_LE((p - v).squaredNorm(), best + 1e-12);
  }
}

// ---- min-variance

TEST(MinVariance, EqualUncorrelatedAssetsGetEqualWeights) {
  for (std::size_t n : {2u, 3u, 4u}) {
    const auto w = min_variance_weights(orthogonal_returns(std::vector<double>(n, 0.01)));
    EXPECT_LT((w.values() - Vector::Constant(Eigen::Index(n), 1.0 / double(n))).cwiseAbs().maxCoeff(), 1e-6) << n;
  }
}

TEST(MinVariance, TwoUncorrelatedAssetsMatchClosedForm) {
  for (auto [s1, s2] : std::vector<std::pair<double, double>>{{0.01, 0.02}, {0.03, 0.01}, {0.015, 0.016}}) {
    const Matrix r = orthogonal_returns({s1, s2});
    const auto S = loaded_covariance(r);
    ASSERT_NEAR(S[0][1], 0.0, 1e-18);
    const double w1 = S[1][1] / (S[0][0] + S[1][1]);
    EXPECT_NEAR(min_variance_weights(r)[0], w1, 1e-6) << s1 << " " << s2;
  }
}

TEST(MinVariance, TwoCorrelatedAssetsMatchClippedClosedForm) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix r = factor_returns(rng, 120, 2);
    const auto S = loaded_covariance(r);
    const double raw = (S[1][1] - S[0][1]) / (S[0][0] + S[1][1] - 2 * S[0][1]);
    EXPECT_NEAR(min_variance_weights(r)[0], std::clamp(raw, 0.0, 1.0), 1e-6) << trial;
  }
}

TEST(MinVariance, NeverWorseThanEqualWeight) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial % 6;
    const Matrix r = factor_returns(rng, 60, n);
    const auto S = loaded_covariance(r);
    const auto w = min_variance_weights(r);
    expect_simplex(w);
    EXPECT_LE(quad(S, testing_support::to_std(w.values())),
              quad(S, std::vector<double>(std::size_t(n), 1.0 / double(n))) + 1e-9);
  }
}

TEST(MinVariance, ThreeAssetsMatchGridSearch) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix r = factor_returns(rng, 80, 3);
    const auto S = loaded_covariance(r);
    const double grid = -oracle::simplex_grid_max([&](double a, double b, double c) { return -quad(S, {a, b, c}); });
    const double got = quad(S, testing_support::to_std(min_variance_weights(r).values()));
    EXPECT_LE(got, grid + 1e-12);
    EXPECT_GE(got, grid - 1e-6);
  }
}

TEST(MinVariance, Errors) {
  std::mt19937_64 rng(31);
  EXPECT_EQ(code_of([&] { min_variance_weights(factor_returns(rng, 4, 3)); }), ErrorCode::InsufficientHistory);
  EXPECT_EQ(code_of([&] { min_variance_weights(Matrix::Zero(10, 3)); }), ErrorCode::SingularCovariance);
}

// ---- mean-variance

TEST(MeanVariance, ThreeAssetsMatchGridSearch) {
  std::mt19937_64 rng(37);
  for (double lambda : {0.5, 1.0, 5.0, 50.0}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix r = factor_returns(rng, 80, 3);
      const auto S = loaded_covariance(r);
      const auto mu = oracle::column_means(to_table(r));
      auto f = [&](const std::vector<double>& w) { return dot(w, mu) - lambda * quad(S, w); };
      const double grid = oracle::simplex_grid_max([&](double a, double b, double c) { return f({a, b, c}); });
      const auto w = mean_variance_weights(r, lambda);
      expect_simplex(w);
      const double got = f(testing_support::to_std(w.values()));
      EXPECT_NEAR(got, grid, 1e-6) << "lambda " << lambda << " trial " << trial;
      EXPECT_GE(got, grid - 1e-12);
    }
  }
}

TEST(MeanVariance, ZeroRiskAversionPicksBestMean) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix r = factor_returns(rng, 40, 4);
    const auto mu = oracle::column_means(to_table(r));
    const auto best = std::max_element(mu.begin(), mu.end()) - mu.begin();
    EXPECT_TRUE(mean_variance_weights(r, 0.0).values().isApprox(Vector::Unit(4, best)));
  }
}

TEST(MeanVariance, HugeRiskAversionApproachesMinVariance) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix r = factor_returns(rng, 100, 2 + trial % 4);
    const Vector a = mean_variance_weights(r, 1e6).values();
    const Vector b = min_variance_weights(r).values();
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-3) << trial;
  }
}

TEST(MeanVariance, RejectsNegativeRiskAversion) {
  std::mt19937_64 rng(47);
  EXPECT_EQ(code_of([&] { mean_variance_weights(factor_returns(rng, 20, 2), -1.0); }), ErrorCode::InvalidConfig);
}

TEST(SolverProperties, ObjectiveNeverWorsens) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix r = factor_returns(rng, 60, 2 + trial % 7);
    for (const auto& result : {min_variance_solve(r), mean_variance_solve(r, 0.1 * (trial + 1))}) {
      ASSERT_GE(result.objective_trace.size(), 2u);
      for (std::size_t k = 1; k < result.objective_trace.size(); ++k)
        ASSERT_LE(result.objective_trace[k], result.objective_trace[k - 1]) << "iteration " << k;
    }
  }
}

// ---- momentum

TEST(Momentum, DoubledAssetRanksFirst) {
  Matrix close = Matrix::Constant(11, 4, 50.0);
  for (Eigen::Index t = 0; t < 11; ++t) close(t, 2) = 50.0 * (1.0 + t / 10.0);
  const auto order = momentum_ranking(frame_from_closes(close), 10, 10);
  EXPECT_EQ(order.front(), 2u);
}

TEST(Momentum, TiesGoToEarlierTicker) {
  const Matrix close = Matrix::Constant(6, 3, 10.0);
  const auto frame = frame_from_closes(close, {"ZED", "ALPHA", "MID"});
  EXPECT_EQ(momentum_ranking(frame, 5, 3), (std::vector<std::size_t>{1, 2, 0}));
}

TEST(Momentum, MatchesBruteForceSort) {
  std::mt19937_64 rng(59);
  const Matrix close = random_closes(rng, 60, 5);
  const auto frame = frame_from_closes(close, {"E", "C", "A", "D", "B"});
  for (std::size_t t = 10; t < 60; t += 7) {
    std::vector<std::pair<double, std::string>> key;
    for (Eigen::Index i = 0; i < 5; ++i)
      key.emplace_back(-(close(Eigen::Index(t), i) / close(Eigen::Index(t - 10), i) - 1.0),
                       frame.tickers()[std::size_t(i)]);
    auto sorted = key;
    std::sort(sorted.begin(), sorted.end());
    const auto order = momentum_ranking(frame, t, 10);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(frame.tickers()[order[j]], sorted[j].second) << t;
  }
}

TEST(Momentum, NeedsLookbackHistory) {
  const auto frame = frame_from_closes(Matrix::Constant(10, 2, 1.0));
  EXPECT_EQ(code_of([&] { momentum_ranking(frame, 4, 5); }), ErrorCode::InsufficientHistory);
}

TEST(Momentum, DefaultTopKIsOneThirdRoundedUp) {
  const auto c = StrategyConfig::momentum();
  EXPECT_EQ(c.selected(3), 1u);
  EXPECT_EQ(c.selected(7), 3u);
  EXPECT_EQ(c.selected(30), 10u);
}

// ---- strategies

TEST(Strategies, BuyAndHoldTracksPrice) {
  std::mt19937_64 rng(61);
  const Matrix close = random_closes(rng, 50, 1);
  const auto curve = run_strategy(frame_from_closes(close), StrategyConfig::buy_and_hold(), 1e6, {});
  ASSERT_EQ(curve.values.size(), 50u);
  const double shares = std::floor(1e6 / close(0, 0));
  const double cash = 1e6 - shares * close(0, 0);
  for (Eigen::Index t = 0; t < 50; ++t) EXPECT_NEAR(curve.values[std::size_t(t)], cash + shares * close(t, 0), 1e-6);
}

TEST(Strategies, BuyAndHoldPaysEnvironmentFrictions) {
  Matrix close(3, 1);
  close << 100.0, 110.0, 90.0;
  env::CostModel costs{.flat_fee = 5.0, .per_share_rate = 1e-3, .half_spread = 0.05};
  const auto run = run_strategy_traced(frame_from_closes(close), StrategyConfig::buy_and_hold(), {1e4, costs});
  // Largest q with q * 100.05 * 1.001 + 5 <= 10000.
  const double unit = 100.05 * 1.001;
  const auto q = static_cast<std::int64_t>(std::floor((1e4 - 5.0) / unit));
  ASSERT_EQ(run.trace.size(), 3u);  // reset row, then one row per step
  ASSERT_EQ(run.trace[1].holdings.front(), q);
  const double cash = 1e4 - double(q) * unit - 5.0;
  EXPECT_NEAR(run.curve.values[1], cash + double(q) * 110.0, 1e-9);
  EXPECT_NEAR(run.curve.values[2], cash + double(q) * 90.0, 1e-9);
}

TEST(Strategies, EqualWeightedOnIdenticalSeriesMatchesBuyAndHold) {
  std::mt19937_64 rng(67);
  const Matrix one = random_closes(rng, 80, 1);
  for (Eigen::Index n : {2, 3, 5}) {
    const Matrix copies = one.replicate(1, n);
    const auto ew = run_strategy(frame_from_closes(copies), StrategyConfig::equal_weighted(1), 1e6, {});
    const auto bh = run_strategy(frame_from_closes(one), StrategyConfig::buy_and_hold(), 1e6, {});
    ASSERT_EQ(ew.values.size(), bh.values.size());
    const double bound = double(n) * one.maxCoeff();
    for (std::size_t t = 0; t < ew.values.size(); ++t) EXPECT_LE(std::abs(ew.values[t] - bh.values[t]), bound) << t;
  }
}

TEST(Strategies, MomentumHoldsOnlyTheLeader) {
  Matrix close(40, 3);
  for (Eigen::Index t = 0; t < 40; ++t) {
    close(t, 0) = 100.0 * std::pow(1.002, double(t));
    close(t, 1) = 100.0 * std::pow(1.004, double(t));
    close(t, 2) = 100.0 * std::pow(1.010, double(t));
  }
  auto cfg = StrategyConfig::momentum(5, 1);
  cfg.rebalance_every = 3;
  const auto run = run_strategy_traced(frame_from_closes(close), cfg, {});
  ASSERT_GT(run.trace.size(), 1u);
  for (const auto& row : std::vector(run.trace.begin() + 1, run.trace.end())) {
    EXPECT_EQ(row.holdings[0], 0);
    EXPECT_EQ(row.holdings[1], 0);
    EXPECT_GT(row.holdings[2], 0);
  }
}

TEST(Strategies, Deterministic) {
  const auto frame = market_data::synthetic_frame({.tickers = 6, .days = 120});
  for (auto cfg : {StrategyConfig::equal_weighted(), StrategyConfig::momentum(20), StrategyConfig::min_variance(30),
                   StrategyConfig::mean_variance(2.0, 30)}) {
    const auto a = run_strategy(frame, cfg, 1e6, {.per_share_rate = 1e-3});
    const auto b = run_strategy(frame, cfg, 1e6, {.per_share_rate = 1e-3});
    EXPECT_EQ(a.values, b.values) << display_name(cfg);
    EXPECT_EQ(a.values.size(), 120u - cfg.history());
  }
}

TEST(Strategies, WeightsStayOnSimplex) {
  const auto frame = market_data::synthetic_frame({.tickers = 5, .days = 100});
  for (auto cfg : {StrategyConfig::momentum(10), StrategyConfig::min_variance(30),
                   StrategyConfig::mean_variance(0.5, 30)})
    for (std::size_t t = 40; t < 100; t += 13) expect_simplex(strategy_weights(frame, cfg, t));
}

TEST(Strategies, ShortFrameIsInsufficientHistory) {
  const auto frame = market_data::synthetic_frame({.tickers = 3, .days = 100});
  EXPECT_EQ(code_of([&] { run_strategy(frame, StrategyConfig::min_variance(), 1e6, {}); }),
            ErrorCode::InsufficientHistory);
  EXPECT_EQ(code_of([&] { run_strategy(frame, StrategyConfig::momentum(99), 1e6, {}); }),
            ErrorCode::InsufficientHistory);
}

TEST(Strategies, InvalidConfigs) {
  const auto frame = market_data::synthetic_frame({.tickers = 3, .days = 100});
  EXPECT_EQ(code_of([&] { run_strategy(frame, StrategyConfig::momentum(5, 4), 1e6, {}); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { run_strategy(frame, StrategyConfig::min_variance(4), 1e6, {}); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { run_strategy(frame, StrategyConfig::equal_weighted(0), 1e6, {}); }),
            ErrorCode::InvalidConfig);
}
