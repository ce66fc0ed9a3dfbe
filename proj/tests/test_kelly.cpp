#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "test_support.hpp"
#include "wkelly/kelly.hpp"
#include "wkelly/rng.hpp"

using namespace wkelly;

namespace {

SimplexWeights weights2(double w1) {
  Eigen::VectorXd v(2);
  v << w1, 1.0 - w1;
  return make_weights(v);
}

// Independent brute-force oracle: 1-D grid over w1 at step 1e-5.
std::pair<double, double> grid_kelly_2asset(const Eigen::MatrixXd& r) {
  double best_w = 0.0, best_f = -1e300;
  for (long k = 0; k <= 100000; ++k) {
    const double w = static_cast<double>(k) * 1e-5;
    double f = 0.0;
    for (Eigen::Index j = 0; j < r.rows(); ++j) {
      f += std::log(w * std::exp(r(j, 0)) + (1.0 - w) * std::exp(r(j, 1)));
    }
    f /= static_cast<double>(r.rows());
    if (f > best_f) {
      best_f = f;
      best_w = w;
    }
  }
  return {best_w, best_f};
}

}  // namespace

TEST(KellyObjective, SingleAssetIsMeanLogReturn) {
  Eigen::MatrixXd r(3, 1);
  r << 0.01, -0.02, 0.03;
  const ReturnsMatrix m(r, ReturnKind::Log);
  EXPECT_NEAR(kelly_objective(SimplexWeights::uniform(1), m), 0.0066667, 1e-6);
}

TEST(KellyObjective, AllZeroSamplesGiveZero) {
  const ReturnsMatrix m(Eigen::MatrixXd::Zero(4, 3), ReturnKind::Log);
  Rng rng(3);
  const SimplexWeights w = fixtures::random_weights(rng, 3);
  EXPECT_DOUBLE_EQ(kelly_objective(w, m), 0.0);
}

TEST(KellyObjective, TwoAssetScalarEvaluation) {
  Eigen::MatrixXd r(1, 2);
  r << 0.05, -0.03;
  const ReturnsMatrix m(r, ReturnKind::Log);
  const double expected = std::log(0.5 * std::exp(0.05) + 0.5 * std::exp(-0.03));
  EXPECT_NEAR(expected, 0.010799786757644673, 1e-15);  // frozen direct evaluation
  EXPECT_NEAR(kelly_objective(weights2(0.5), m), expected, 1e-14);
}

TEST(KellyObjective, RejectsDimensionMismatch) {
  Eigen::MatrixXd r(2, 3);
  r.setZero();
  const ReturnsMatrix m(r, ReturnKind::Log);
  EXPECT_THROW(kelly_objective(SimplexWeights::uniform(2), m), DimensionMismatch);
}

TEST(KellyObjective, RejectsSimpleKind) {
  const ReturnsMatrix m(Eigen::MatrixXd::Zero(2, 2), ReturnKind::Simple);
  EXPECT_THROW(kelly_objective(SimplexWeights::uniform(2), m), ValidationError);
}

TEST(SolveKelly, SingleAssetIsTrivial) {
  Eigen::MatrixXd r(5, 1);
  r << 0.1, -0.2, 0.05, 0.0, 0.01;
  const KellySolution sol = solve_kelly(ReturnsMatrix(r, ReturnKind::Log));
  EXPECT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_DOUBLE_EQ(sol.weights[0], 1.0);
  EXPECT_NEAR(sol.objective, r.mean(), 1e-15);
}

TEST(SolveKelly, DominantAssetTakesAllMass) {
  const KellySolution sol = solve_kelly(fixtures::dominance_fixture());
  EXPECT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_NEAR(sol.weights[0], 1.0, 1e-6);
  EXPECT_NEAR(sol.weights[1], 0.0, 1e-6);
  EXPECT_NEAR(sol.objective, 0.01, 1e-8);
}

TEST(SolveKelly, MatchesGridOracleOnInteriorFixture) {
  const ReturnsMatrix m = fixtures::interior_fixture();
  const auto [grid_w, grid_f] = grid_kelly_2asset(m.values());
  EXPECT_NEAR(grid_w, 0.5, 2e-5);                     // frozen oracle output
  EXPECT_NEAR(grid_f, 0.0057997867576447025, 1e-12);  // frozen oracle output
  const KellySolution sol = solve_kelly(m);
  EXPECT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_NEAR(sol.weights[0], grid_w, 2e-5);
  EXPECT_NEAR(sol.objective, grid_f, 1e-9);
  EXPECT_GE(sol.objective, grid_f - 1e-10);  // the best grid point is feasible
}

TEST(SolveKelly, ReportedObjectiveMatchesEvaluator) {
  const ReturnsMatrix m = fixtures::random_log_returns(17, 30, 5);
  const KellySolution sol = solve_kelly(m);
  EXPECT_NEAR(sol.objective, kelly_objective(sol.weights, m), 1e-10);
}

TEST(SolveKelly, ScaleShiftMovesObjectiveExactly) {
  const ReturnsMatrix m = fixtures::random_log_returns(23, 20, 4);
  const double c = 0.37;
  const ReturnsMatrix shifted(Eigen::MatrixXd(m.values().array() + c), ReturnKind::Log);
  const KellySolution a = solve_kelly(m);
  const KellySolution b = solve_kelly(shifted);
  EXPECT_NEAR(b.objective, a.objective + c, 1e-8);
  // An optimum of one problem is optimal for the other at the shifted value.
  EXPECT_NEAR(kelly_objective(a.weights, shifted), b.objective, 1e-8);
}

TEST(KellyObjective, ConcavityOnRandomSegments) {
  const ReturnsMatrix m = fixtures::random_log_returns(31, 12, 4);
  Rng rng(77);
  for (int it = 0; it < 50; ++it) {
    const SimplexWeights w1 = fixtures::random_weights(rng, 4);
    const SimplexWeights w2 = fixtures::random_weights(rng, 4);
    const double t = rng.uniform01();
    const SimplexWeights mid = make_weights(t * w1.vec() + (1.0 - t) * w2.vec());
    EXPECT_GE(kelly_objective(mid, m),
              t * kelly_objective(w1, m) + (1.0 - t) * kelly_objective(w2, m) - 1e-10);
  }
}

TEST(KellyGradient, MatchesCentralDifferences) {
  const ReturnsMatrix m = fixtures::random_log_returns(41, 15, 3);
  // Off-simplex evaluation of the raw objective for the difference quotient.
  auto raw = [&](const Eigen::VectorXd& x) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m.n_samples(); ++j) {
      acc += std::log(m.values().row(j).array().exp().matrix().dot(x));
    }
    return acc / static_cast<double>(m.n_samples());
  };
  Rng rng(5);
  int tested = 0;
  for (int it = 0; it < 40 && tested < 15; ++it) {
    const SimplexWeights w = fixtures::random_weights(rng, 3);
    if (w.vec().minCoeff() < 0.05) continue;  // interior points only
    ++tested;
    const Eigen::VectorXd g = kelly_gradient(w, m);
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd up = w.vec(), dn = w.vec();
      up[i] += h;
      dn[i] -= h;
      const double fd = (raw(up) - raw(dn)) / (2.0 * h);
      EXPECT_NEAR(g[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
  EXPECT_GE(tested, 10);
}

TEST(SolveKelly, SingleSampleDegenerateCase) {
  Eigen::MatrixXd r(1, 2);
  r << 0.03, 0.01;
  const KellySolution sol = solve_kelly(ReturnsMatrix(r, ReturnKind::Log));
  EXPECT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_NEAR(sol.objective, 0.03, 1e-7);  // all mass on the better asset
}

TEST(SolveKelly, DuplicateAssetsAgreeOnObjective) {
  Eigen::MatrixXd r(4, 1);
  r << 0.02, -0.01, 0.03, 0.0;
  Eigen::MatrixXd rr(4, 2);
  rr << r, r;
  const KellySolution one = solve_kelly(ReturnsMatrix(r, ReturnKind::Log));
  const KellySolution two = solve_kelly(ReturnsMatrix(rr, ReturnKind::Log));
  EXPECT_EQ(two.status, SolveStatus::Optimal);
  EXPECT_NEAR(one.objective, two.objective, 1e-9);
}
