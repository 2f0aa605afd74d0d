#include "uvesc/polytope.hpp"

#include <gtest/gtest.h>

namespace uvesc {
namespace {

MatrixXd H0() {
  MatrixXd h(2, 2);
  h << 100, 30, 30, 20;
  return h;
}

TEST(ScaledPolytope, VerticesAreScaledCopies) {
  const auto poly = build_scaled_polytope(H0(), 0.1);
  ASSERT_EQ(poly.size(), 2u);
  MatrixXd lo(2, 2), hi(2, 2);
  lo << 90, 27, 27, 18;
  hi << 110, 33, 33, 22;
  EXPECT_TRUE(poly.vertex(0).isApprox(lo, 1e-14));
  EXPECT_TRUE(poly.vertex(1).isApprox(hi, 1e-14));
}

TEST(ScaledPolytope, IdentityScaling) {
  const auto poly = build_scaled_polytope(MatrixXd::Identity(2, 2), 0.5);
  EXPECT_TRUE(poly.vertex(0).isApprox(0.5 * MatrixXd::Identity(2, 2)));
  EXPECT_TRUE(poly.vertex(1).isApprox(1.5 * MatrixXd::Identity(2, 2)));
}

TEST(ScaledPolytope, RejectsBadInput) {
  MatrixXd indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  EXPECT_THROW(build_scaled_polytope(indefinite, 0.1), DomainError);
  EXPECT_THROW(build_scaled_polytope(H0(), 1.0), DomainError);
  EXPECT_THROW(build_scaled_polytope(H0(), 0.0), DomainError);
  MatrixXd skew = H0();
  skew(0, 1) += 1e-3;
  EXPECT_THROW(build_scaled_polytope(skew, 0.1), DomainError);
}

TEST(HessianPolytope, SymmetrizesRoundingNoise) {
  MatrixXd h = H0();
  h(0, 1) += 1e-13;
  const HessianPolytope<double> poly({h});
  EXPECT_EQ(poly.vertex(0)(0, 1), poly.vertex(0)(1, 0));
}

TEST(HessianPolytope, RejectsMixedDimensions) {
  EXPECT_THROW(HessianPolytope<double>({MatrixXd::Identity(2, 2), MatrixXd::Identity(3, 3)}), DomainError);
  EXPECT_THROW(HessianPolytope<double>(std::vector<MatrixXd>{}), DomainError);
}

TEST(Evaluate, VertexMidpointAndMixture) {
  const auto poly = build_scaled_polytope(H0(), 0.1);
  EXPECT_EQ(evaluate(poly, SimplexPoint<double>(Eigen::Vector2d(1, 0))), poly.vertex(0));
  EXPECT_LE((evaluate(poly, SimplexPoint<double>(Eigen::Vector2d(0.5, 0.5))) - H0()).cwiseAbs().maxCoeff(), 1e-12);

  const HessianPolytope<double> scalar({MatrixXd::Identity(2, 2), 2.0 * MatrixXd::Identity(2, 2)});
  EXPECT_TRUE(evaluate(scalar, SimplexPoint<double>(Eigen::Vector2d(0.3, 0.7))).isApprox(1.7 * MatrixXd::Identity(2, 2)));
  EXPECT_THROW(evaluate(poly, SimplexPoint<double>(Eigen::Vector3d(0.2, 0.3, 0.5))), DomainError);
}

TEST(SimplexPoint, RejectsPointsOffTheSimplex) {
  EXPECT_THROW(SimplexPoint<double>(Eigen::Vector2d(0.5, 0.6)), DomainError);
  EXPECT_THROW(SimplexPoint<double>(Eigen::Vector2d(1.5, -0.5)), DomainError);
}

TEST(Evaluate, IsAffineInTheWeights) {
  const HessianPolytope<double> poly({H0(), MatrixXd::Identity(2, 2), 3.0 * MatrixXd::Identity(2, 2)});
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = sample_simplex<double>(3, rng);
    const auto b = sample_simplex<double>(3, rng);
    const double c = 0.05 * trial;
    const VectorXd mixed = c * a.weights() + (1 - c) * b.weights();
    const MatrixXd lhs = evaluate(poly, SimplexPoint<double>(mixed));
    const MatrixXd rhs = c * evaluate(poly, a) + (1 - c) * evaluate(poly, b);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(is_positive_definite(lhs));
  }
}

TEST(SampleUniform, DeterministicAndOnTheSimplex) {
  const auto poly = build_scaled_polytope(H0(), 0.1);
  const auto [a1, h1] = sample_uniform(poly, 42);
  const auto [a2, h2] = sample_uniform(poly, 42);
  EXPECT_EQ(a1.weights(), a2.weights());
  EXPECT_EQ(h1, h2);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto [a, h] = sample_uniform(poly, seed);
    EXPECT_GE(a.weights().minCoeff(), 0.0);
    EXPECT_NEAR(a.weights().sum(), 1.0, 1e-12);
    EXPECT_LE((h - evaluate(poly, a)).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(SampleUniform, SingleVertex) {
  const HessianPolytope<double> poly({H0()});
  const auto [a, h] = sample_uniform(poly, 9);
  EXPECT_EQ(a.size(), 1);
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(h, H0());
}

TEST(SampleSimplex, MeanWeightIsUniform) {
  std::mt19937_64 rng(11);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  constexpr int kDraws = 20000;
  for (int i = 0; i < kDraws; ++i) mean += sample_simplex<double>(3, rng).weights();
  mean /= kDraws;
  EXPECT_LE((mean.array() - 1.0 / 3.0).abs().maxCoeff(), 0.01);
}

TEST(ScaledPolytope, FloatInstantiation) {
  Eigen::MatrixXf h(2, 2);
  h << 4, 1, 1, 3;
  const auto poly = build_scaled_polytope(h, 0.25f);
  const Eigen::MatrixXf mid = evaluate(poly, SimplexPoint<float>(Eigen::Vector2f(0.5f, 0.5f)));
  EXPECT_TRUE(mid.isApprox(h, 1e-6f));
}

}  // namespace
}  // namespace uvesc
