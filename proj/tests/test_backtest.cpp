#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "test_support.hpp"
#include "wkelly/backtest.hpp"
#include "wkelly/rng.hpp"

using namespace wkelly;

namespace {

ReturnsMatrix simple(const Eigen::MatrixXd& r) { return ReturnsMatrix(r, ReturnKind::Simple); }

Trajectory path_from_values(std::vector<double> values) {
  Trajectory tr;
  tr.values = std::move(values);
  for (size_t t = 1; t < tr.values.size(); ++t) {
    tr.period_returns.push_back(tr.values[t] / tr.values[t - 1] - 1.0);
  }
  return tr;
}

// Brute-force drawdown oracle: scan all (peak, trough) pairs.
double drawdown_oracle(const std::vector<double>& v) {
  double worst = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    for (size_t j = i; j < v.size(); ++j) {
      worst = std::max(worst, (v[i] - v[j]) / v[i]);
    }
  }
  return worst;
}

}  // namespace

TEST(RunConstantMix, ZeroReturnsStayAtOne) {
  const Trajectory tr = run_constant_mix(SimplexWeights::uniform(2), simple(Eigen::MatrixXd::Zero(5, 2)));
  for (double v : tr.values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(RunConstantMix, SingleAssetProduct) {
  Eigen::MatrixXd r(2, 1);
  r << 0.1, -0.1;
  const Trajectory tr = run_constant_mix(SimplexWeights::uniform(1), simple(r));
  EXPECT_NEAR(tr.values.back(), 0.99, 1e-15);
}

TEST(RunConstantMix, WeightedSingleStep) {
  Eigen::MatrixXd r(1, 2);
  r << 0.2, -0.1;
  const Trajectory tr = run_constant_mix(make_weights(Eigen::Vector2d(0.5, 0.5)), simple(r));
  EXPECT_NEAR(tr.values.back(), 1.05, 1e-15);
}

TEST(RunConstantMix, RecurrenceInvariant) {
  const ReturnsMatrix m = convert_returns(fixtures::random_log_returns(3, 60, 3, 0.03), ReturnKind::Simple);
  Rng rng(4);
  const Trajectory tr = run_constant_mix(fixtures::random_weights(rng, 3), m);
  for (size_t t = 1; t < tr.values.size(); ++t) {
    EXPECT_NEAR(tr.values[t], tr.values[t - 1] * (1.0 + tr.period_returns[t - 1]), 1e-12);
  }
}

TEST(RunConstantMix, SingleAssetReproducesCumulativeValue) {
  const ReturnsMatrix m = convert_returns(fixtures::random_log_returns(5, 40, 1, 0.05), ReturnKind::Simple);
  const Trajectory tr = run_constant_mix(SimplexWeights::uniform(1), m);
  double v = 1.0;
  for (Eigen::Index t = 0; t < m.n_samples(); ++t) {
    v *= 1.0 + m.values()(t, 0);
    EXPECT_DOUBLE_EQ(tr.values[static_cast<size_t>(t) + 1], v);
  }
}

TEST(RunConstantMix, RuinOnVanishingValue) {
  // Repeated near-total losses underflow the value path to zero; the
  // simulation aborts and reports the first ruin period.
  const double near_total_loss = std::nextafter(-1.0, 0.0);
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(30, 1, near_total_loss);
  try {
    run_constant_mix(SimplexWeights::uniform(1), simple(r));
    FAIL() << "expected Ruin";
  } catch (const Ruin& e) {
    EXPECT_GE(e.period, 2);
    EXPECT_LE(e.period, 30);
  }
}

TEST(RunConstantMix, KindAndDimsValidated) {
  const ReturnsMatrix log_kind(Eigen::MatrixXd::Zero(2, 2), ReturnKind::Log);
  EXPECT_THROW(run_constant_mix(SimplexWeights::uniform(2), log_kind), ValidationError);
  const ReturnsMatrix ok(Eigen::MatrixXd::Zero(2, 2), ReturnKind::Simple);
  EXPECT_THROW(run_constant_mix(SimplexWeights::uniform(3), ok), DimensionMismatch);
}

TEST(PerformanceMetrics, FlatPath) {
  const Trajectory tr = path_from_values({1.0, 1.0, 1.0, 1.0});
  const MetricsReport m = performance_metrics(tr);
  EXPECT_DOUBLE_EQ(m.annualized_volatility, 0.0);
  EXPECT_DOUBLE_EQ(m.max_drawdown, 0.0);
  EXPECT_DOUBLE_EQ(m.growth_rate, 0.0);
  EXPECT_TRUE(m.zero_volatility);
  EXPECT_DOUBLE_EQ(m.sharpe_ratio, 0.0);
}

TEST(PerformanceMetrics, OneYearHorizonAnnualizedReturn) {
  std::vector<double> v(253);
  const double g = std::pow(1.1, 1.0 / 252.0);
  v[0] = 1.0;
  for (size_t t = 1; t < v.size(); ++t) v[t] = v[t - 1] * g;
  const MetricsReport m = performance_metrics(path_from_values(v), 252);
  EXPECT_NEAR(m.annualized_return, 0.1, 1e-10);
  EXPECT_NEAR(m.log_final_value, std::log(1.1), 1e-12);
}

TEST(PerformanceMetrics, DrawdownFromRunningPeaks) {
  const MetricsReport m = performance_metrics(path_from_values({1.0, 1.2, 0.9, 1.05}));
  EXPECT_NEAR(m.max_drawdown, 0.25, 1e-15);  // (1.2 - 0.9) / 1.2
}

TEST(PerformanceMetrics, PositiveDriftZeroVolSharpeSentinel) {
  std::vector<double> v{1.0, 1.01, 1.0201};
  const MetricsReport m = performance_metrics(path_from_values(v));
  EXPECT_TRUE(m.zero_volatility);
  EXPECT_TRUE(std::isinf(m.sharpe_ratio));
  EXPECT_GT(m.sharpe_ratio, 0.0);
}

TEST(PerformanceMetrics, GrowthRateIdentity) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = 1 + static_cast<int>(rng.below(200));
    Eigen::MatrixXd r(T, 2);
    for (int t = 0; t < T; ++t) {
      r(t, 0) = rng.uniform(-0.05, 0.06);
      r(t, 1) = rng.uniform(-0.05, 0.06);
    }
    const Trajectory tr = run_constant_mix(make_weights(Eigen::Vector2d(0.3, 0.7)), simple(r));
    const MetricsReport m = performance_metrics(tr);
    double gamma = 0.0;
    for (double pr : tr.period_returns) gamma += std::log1p(pr);
    gamma /= static_cast<double>(T);
    EXPECT_NEAR(m.growth_rate, gamma, 1e-12);
    EXPECT_NEAR(m.log_final_value, std::log(tr.values.back()), 1e-12);
    // drawdown bounds and oracle
    EXPECT_GE(m.max_drawdown, 0.0);
    EXPECT_LT(m.max_drawdown, 1.0);
    EXPECT_NEAR(m.max_drawdown, drawdown_oracle(tr.values), 1e-15);
  }
}

TEST(AggregateTrajectories, SingleTrajectoryHasZeroSpread) {
  const Trajectory tr = path_from_values({1.0, 1.1, 1.05});
  const BandSummary band = aggregate_trajectories({tr});
  for (size_t t = 0; t < tr.values.size(); ++t) {
    EXPECT_DOUBLE_EQ(band.mean[t], tr.values[t]);
    EXPECT_DOUBLE_EQ(band.stdev[t], 0.0);
  }
}

TEST(AggregateTrajectories, MirroredPathsAverageOut) {
  const BandSummary band = aggregate_trajectories(
      {path_from_values({1.0, 1.1, 1.21}), path_from_values({1.0, 0.9, 0.81})});
  EXPECT_DOUBLE_EQ(band.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(band.mean[1], 1.0);
  EXPECT_NEAR(band.mean[2], 1.01, 1e-15);
  EXPECT_NEAR(band.stdev[1], 0.1, 1e-15);
}

TEST(AggregateTrajectories, MatchesTwoPassStatistics) {
  Rng rng(12);
  std::vector<Trajectory> trs;
  for (int k = 0; k < 3; ++k) {
    Eigen::MatrixXd r(30, 1);
    for (int t = 0; t < 30; ++t) r(t, 0) = rng.uniform(-0.03, 0.04);
    trs.push_back(run_constant_mix(SimplexWeights::uniform(1), simple(r)));
  }
  const BandSummary band = aggregate_trajectories(trs);
  for (size_t t = 0; t < trs[0].values.size(); ++t) {
    double mean = 0.0;
    for (const auto& tr : trs) mean += tr.values[t];
    mean /= 3.0;
    double ss = 0.0;
    for (const auto& tr : trs) ss += (tr.values[t] - mean) * (tr.values[t] - mean);
    EXPECT_NEAR(band.mean[t], mean, 1e-14);
    EXPECT_NEAR(band.stdev[t], std::sqrt(ss / 3.0), 1e-14);
  }
}

TEST(AggregateTrajectories, LengthMismatchRejected) {
  EXPECT_THROW(aggregate_trajectories(
                   {path_from_values({1.0, 1.1}), path_from_values({1.0, 1.1, 1.2})}),
               LengthMismatch);
  EXPECT_THROW(aggregate_trajectories({}), LengthMismatch);
}
