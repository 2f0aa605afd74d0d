#include "uvesc/sdp.hpp"

#include <gtest/gtest.h>

#include "uvesc/errors.hpp"

namespace uvesc {
namespace {

MatrixXd M2(double a, double b, double c, double d) {
  MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

TEST(LmiBlock, EvaluateAndStandardForm) {
  LmiBlock block("b", M2(1, 2, 2, 3), Sense::kNegativeDefinite, 0.5);
  block.add_term(0, M2(1, 0, 0, 1));
  block.add_term(1, M2(0, 1, 1, 0));
  block.add_term(0, M2(1, 0, 0, 0));  // merged with the first term of variable 0
  const VectorXd x = Eigen::Vector2d(2, -1);
  EXPECT_EQ(block.evaluate(x), M2(5, 1, 1, 5));
  EXPECT_EQ(block.standard_form(x), M2(-5.5, -1, -1, -5.5));
  EXPECT_EQ(block.terms().size(), 2u);
}

TEST(LmiBlock, RejectsMalformedTerms) {
  LmiBlock block("b", MatrixXd::Zero(2, 2), Sense::kPositiveSemidefinite);
  EXPECT_THROW(block.add_term(0, M2(0, 1, 0, 0)), DomainError);
  EXPECT_THROW(block.add_term(0, MatrixXd::Identity(3, 3)), DomainError);
  EXPECT_THROW(block.add_term(-1, MatrixXd::Identity(2, 2)), DomainError);
  EXPECT_THROW(LmiBlock("c", M2(0, 1, 0, 0), Sense::kPositiveSemidefinite), DomainError);
}

TEST(BarrierSdpSolver, SchurComplementMinimum) {
  // min x subject to [[x, 1], [1, 1]] ≽ 0, whose optimum is x = 1.
  SdpProblem p;
  p.num_variables = 1;
  LmiBlock block("schur", M2(0, 1, 1, 1), Sense::kPositiveSemidefinite);
  block.add_term(0, M2(1, 0, 0, 0));
  p.blocks.push_back(block);
  p.objective = VectorXd::Ones(1);
  BarrierSdpSolver solver;
  const SdpSolution sol = solver.solve(p);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal) << sol.message;
  EXPECT_NEAR(sol.x[0], 1.0, 1e-7);
  EXPECT_LE(sol.gap_bound, 1e-8);
}

TEST(BarrierSdpSolver, MaxEigenvalueMinimization) {
  // min t subject to tI − A ≽ 0 gives λmax(A).
  MatrixXd a(3, 3);
  a << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  SdpProblem p;
  p.num_variables = 1;
  LmiBlock block("t I - A", -a, Sense::kPositiveSemidefinite);
  block.add_term(0, MatrixXd::Identity(3, 3));
  p.blocks.push_back(block);
  p.objective = VectorXd::Ones(1);
  const SdpSolution sol = BarrierSdpSolver().solve(p);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  EXPECT_NEAR(sol.x[0], 2 + std::sqrt(2.0), 1e-7);
}

TEST(BarrierSdpSolver, FeasibilityReturnsInteriorPoint) {
  SdpProblem p;
  p.num_variables = 1;
  LmiBlock lower("x > 1", -MatrixXd::Identity(1, 1), Sense::kPositiveDefinite, 1e-6);
  lower.add_term(0, MatrixXd::Identity(1, 1));
  LmiBlock upper("x < 2", -2 * MatrixXd::Identity(1, 1), Sense::kNegativeDefinite, 1e-6);
  upper.add_term(0, MatrixXd::Identity(1, 1));
  p.blocks = {lower, upper};
  const SdpSolution sol = BarrierSdpSolver().solve(p);
  ASSERT_EQ(sol.status, SdpStatus::kFeasible);
  EXPECT_GT(sol.x[0], 1.0);
  EXPECT_LT(sol.x[0], 2.0);
  EXPECT_GT(sol.feasibility_margin, 0.0);
}

TEST(BarrierSdpSolver, DetectsInfeasibility) {
  SdpProblem p;
  p.num_variables = 1;
  LmiBlock lower("x >= 1", -MatrixXd::Identity(1, 1), Sense::kPositiveSemidefinite);
  lower.add_term(0, MatrixXd::Identity(1, 1));
  LmiBlock upper("x <= 0", MatrixXd::Zero(1, 1), Sense::kPositiveSemidefinite);
  upper.add_term(0, -MatrixXd::Identity(1, 1));
  p.blocks = {lower, upper};
  EXPECT_EQ(BarrierSdpSolver().solve(p).status, SdpStatus::kInfeasible);
  p.objective = VectorXd::Ones(1);
  EXPECT_EQ(BarrierSdpSolver().solve(p).status, SdpStatus::kInfeasible);
}

TEST(BarrierSdpSolver, Capabilities) {
  const BackendCapabilities caps = BarrierSdpSolver().capabilities();
  EXPECT_FALSE(caps.name.empty());
  EXPECT_TRUE(caps.linear_objective);
  EXPECT_TRUE(caps.strict_inequalities);
}

}  // namespace
}  // namespace uvesc
