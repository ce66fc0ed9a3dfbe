#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "wkelly/rng.hpp"
#include "wkelly/types.hpp"

using namespace wkelly;

TEST(MakeWeights, AcceptsSingleAsset) {
  Eigen::VectorXd v(1);
  v << 1.0;
  const SimplexWeights w = make_weights(v);
  EXPECT_EQ(w.size(), 1);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
}

TEST(MakeWeights, AcceptsSymmetricPoint) {
  Eigen::VectorXd v(2);
  v << 0.5, 0.5;
  EXPECT_NO_THROW(make_weights(v));
}

TEST(MakeWeights, RejectsSumMismatch) {
  Eigen::VectorXd v(2);
  v << 0.6, 0.6;
  EXPECT_THROW(make_weights(v), SumMismatch);
}

TEST(MakeWeights, RejectsNegativeEntry) {
  Eigen::VectorXd v(2);
  v << 1.1, -0.1;
  EXPECT_THROW(make_weights(v), NegativeWeight);
}

TEST(MakeWeights, ToleratesTinyNoise) {
  Eigen::VectorXd v(3);
  v << 0.3, 0.7 + 4e-9, -4e-13;
  EXPECT_NO_THROW(make_weights(v));
}

TEST(MakeWeights, AcceptsExactlyTheSimplex) {
  Rng rng(123);
  for (int it = 0; it < 200; ++it) {
    const int n = 1 + static_cast<int>(rng.below(6));
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = rng.exponential();
    g /= g.sum();
    EXPECT_NO_THROW(make_weights(g));
    Eigen::VectorXd bad = g;
    bad[static_cast<int>(rng.below(static_cast<std::uint64_t>(n)))] += 1e-6;
    EXPECT_THROW(make_weights(bad), SumMismatch);
  }
}

TEST(ConvertReturns, SimpleToLogDefinition) {
  Eigen::MatrixXd r(1, 1);
  r << 0.1;
  const ReturnsMatrix m(r, ReturnKind::Simple);
  const ReturnsMatrix out = convert_returns(m, ReturnKind::Log);
  EXPECT_NEAR(out.values()(0, 0), 0.0953102, 1e-7);
}

TEST(ConvertReturns, ZeroIsFixedPoint) {
  Eigen::MatrixXd r(1, 1);
  r << 0.0;
  const ReturnsMatrix m(r, ReturnKind::Log);
  EXPECT_DOUBLE_EQ(convert_returns(m, ReturnKind::Simple).values()(0, 0), 0.0);
}

TEST(ConvertReturns, TotalLossRejected) {
  Eigen::MatrixXd r(1, 1);
  r << -1.0;
  EXPECT_THROW(ReturnsMatrix(r, ReturnKind::Simple), DomainError);
}

TEST(ConvertReturns, RoundTripWithin1e12) {
  Rng rng(99);
  for (int it = 0; it < 100; ++it) {
    const int N = 1 + static_cast<int>(rng.below(8));
    const int n = 1 + static_cast<int>(rng.below(5));
    Eigen::MatrixXd r(N, n);
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < n; ++i) r(j, i) = rng.uniform(-0.5, 0.5);
    }
    const ReturnsMatrix m(r, ReturnKind::Simple);
    const ReturnsMatrix back =
        convert_returns(convert_returns(m, ReturnKind::Log), ReturnKind::Simple);
    EXPECT_LT((back.values() - m.values()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(back.asset_labels(), m.asset_labels());
  }
}

TEST(ConvertReturns, ExtremeLogLossRejectedOnConversion) {
  // exp(-800) - 1 rounds to -1, outside the simple-return domain.
  Eigen::MatrixXd r(1, 1);
  r << -800.0;
  const ReturnsMatrix m(r, ReturnKind::Log);
  EXPECT_THROW(convert_returns(m, ReturnKind::Simple), DomainError);
}

TEST(ReturnsMatrix, RejectsNonFinite) {
  Eigen::MatrixXd r(1, 2);
  r << 0.1, std::nan("");
  EXPECT_THROW(ReturnsMatrix(r, ReturnKind::Log), DomainError);
}

TEST(ReturnsMatrix, DefaultLabels) {
  Eigen::MatrixXd r(1, 2);
  r << 0.1, 0.2;
  const ReturnsMatrix m(r, ReturnKind::Log);
  ASSERT_EQ(m.asset_labels().size(), 2u);
  EXPECT_EQ(m.asset_labels()[0], "a1");
}

TEST(BallSpec, DualPairing) {
  EXPECT_EQ(dual_norm(Norm::L2), Norm::L2);
  EXPECT_EQ(dual_norm(Norm::L1), Norm::Linf);
  EXPECT_EQ(dual_norm(Norm::Linf), Norm::L1);
}

TEST(BallSpec, ConjugateExponent) {
  EXPECT_DOUBLE_EQ(BallSpec::make(2.0, 0.1).conjugate_exponent(), 2.0);
  EXPECT_NEAR(BallSpec::make(1.5, 0.1).conjugate_exponent(), 3.0, 1e-15);
  EXPECT_THROW(BallSpec::make(1.0, 0.1).conjugate_exponent(), UnsupportedOrder);
}

TEST(BallSpec, RejectsBadOrderAndRadius) {
  EXPECT_THROW(BallSpec::make(0.5, 0.1), UnsupportedOrder);
  EXPECT_THROW(BallSpec::make(2.0, -0.1), ValidationError);
}

TEST(SolverSettings, Validation) {
  SolverSettings s;
  EXPECT_NO_THROW(s.validate());
  s.tol_rel = 1.5;
  EXPECT_THROW(s.validate(), ValidationError);
}
