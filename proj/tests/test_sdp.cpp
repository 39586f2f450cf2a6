#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "invsdp/sdp.hpp"

using namespace invsdp;

namespace {

// min X11 + X22  s.t.  X12 = 1, X psd (2x2).
SdpProblem two_by_two() {
  SdpProblem p;
  p.blocks = {{2, BlockKind::Psd}};
  p.C.add(0, 0, 0, 1.0);
  p.C.add(0, 1, 1, 1.0);
  BlockSparse a;
  a.add(0, 0, 1, 0.5);  // <A,X> = 2 * 0.5 * X12
  p.A.push_back(a);
  p.b.push_back(1.0);
  return p;
}

SdpProblem trace_problem(std::vector<double> rhs) {
  SdpProblem p;
  p.blocks = {{3, BlockKind::Psd}};
  for (double r : rhs) {
    BlockSparse a;
    for (int i = 0; i < 3; ++i) a.add(0, i, i, 1.0);
    p.A.push_back(a);
    p.b.push_back(r);
  }
  return p;
}

double weak_duality_slack(const SdpSolution& s) { return s.objective - s.dual_objective; }

}  // namespace

TEST(Sdp, TwoByTwoMatchesGridSearchOracle) {
  auto sol = solve_sdp(two_by_two());
  ASSERT_EQ(sol.status, SdpStatus::Optimal) << sol.message;
  // Brute force over the diagonal with X12 fixed at 1; PSD iff X11*X22 >= 1.
  double best = 1e9;
  for (int i = 0; i <= 4000; ++i)
    for (int j = 0; j <= 4000; j += 1) {
      double a = i * 1e-3, b = j * 1e-3;
      if (a * b >= 1.0) {
        best = std::min(best, a + b);
        break;
      }
    }
  EXPECT_NEAR(best, 2.0, 2e-3);
  EXPECT_NEAR(sol.objective, 2.0, 1e-7);
  EXPECT_NEAR(sol.X[0](0, 0), 1.0, 1e-4);
  EXPECT_NEAR(sol.X[0](1, 1), 1.0, 1e-4);
  EXPECT_NEAR(sol.X[0](0, 1), 1.0, 1e-7);
  EXPECT_LE(sol.residuals.primal, 1e-8);
  EXPECT_LE(sol.residuals.dual, 1e-8);
  EXPECT_LE(sol.residuals.gap, 1e-8);
  EXPECT_GE(weak_duality_slack(sol), -1e-6);
}

TEST(Sdp, ResidualsOfAnalyticOptimumVanish) {
  auto p = two_by_two();
  SdpSolution s;
  s.X = {Eigen::MatrixXd::Ones(2, 2)};
  s.y = Eigen::VectorXd::Constant(1, 2.0);
  // S = C - y A = [[1,-1],[-1,1]]
  Eigen::MatrixXd S(2, 2);
  S << 1, -1, -1, 1;
  s.S = {S};
  auto r = residuals(p, s);
  EXPECT_LT(r.primal, 1e-10);
  EXPECT_LT(r.dual, 1e-10);
  EXPECT_LT(r.gap, 1e-10);
}

TEST(Sdp, ZeroMatrixOnTraceProblemHasHalfPrimalResidual) {
  auto p = trace_problem({1.0});
  SdpSolution s;
  s.X = {Eigen::MatrixXd::Zero(3, 3)};
  s.S = {Eigen::MatrixXd::Zero(3, 3)};
  s.y = Eigen::VectorXd::Zero(1);
  EXPECT_DOUBLE_EQ(residuals(p, s).primal, 0.5);
}

TEST(Sdp, TraceOneWithZeroCostIsOptimal) {
  auto sol = solve_sdp(trace_problem({1.0}));
  ASSERT_EQ(sol.status, SdpStatus::Optimal);
  EXPECT_NEAR(sol.objective, 0.0, 1e-9);
  EXPECT_NEAR(sol.X[0].trace(), 1.0, 1e-8);
}

TEST(Sdp, ContradictoryEqualitiesArePrimalInfeasible) {
  auto sol = solve_sdp(trace_problem({1.0, 2.0}));
  EXPECT_EQ(sol.status, SdpStatus::PrimalInfeasible);
  // Farkas ray: b'y = 1 and A*y is negative semidefinite.
  EXPECT_NEAR(sol.dual_objective, 1.0, 1e-9);
  EXPECT_LE(sol.y[0] + sol.y[1], 1e-6);
}

TEST(Sdp, ZeroRowWithNonzeroRhsIsInfeasible) {
  SdpProblem p = trace_problem({1.0});
  p.A.push_back({});
  p.b.push_back(3.0);
  EXPECT_EQ(solve_sdp(p).status, SdpStatus::PrimalInfeasible);
}

TEST(Sdp, UnboundedObjectiveIsDualInfeasible) {
  // min -X11 s.t. X22 = 1
  SdpProblem p;
  p.blocks = {{2, BlockKind::Psd}};
  p.C.add(0, 0, 0, -1.0);
  BlockSparse a;
  a.add(0, 1, 1, 1.0);
  p.A.push_back(a);
  p.b.push_back(1.0);
  EXPECT_EQ(solve_sdp(p).status, SdpStatus::DualInfeasible);
}

TEST(Sdp, FreeVariablesStayOutsideTheCone) {
  // min t - u  s.t.  t - X11 = 1, X12 = 1, X22 = 1, u = -3  -> t = 2, u = -3, obj 5
  SdpProblem p;
  p.blocks = {{2, BlockKind::Psd}, {2, BlockKind::Free}};
  p.C.add(1, 0, 0, 1.0);
  p.C.add(1, 1, 1, -1.0);
  BlockSparse a1, a2, a3, a4;
  a1.add(1, 0, 0, 1.0);
  a1.add(0, 0, 0, -1.0);
  a2.add(0, 0, 1, 0.5);
  a3.add(0, 1, 1, 1.0);
  a4.add(1, 1, 1, 1.0);
  p.A = {a1, a2, a3, a4};
  p.b = {1.0, 1.0, 1.0, -3.0};
  auto sol = solve_sdp(p);
  ASSERT_EQ(sol.status, SdpStatus::Optimal) << sol.message;
  EXPECT_NEAR(sol.objective, 5.0, 1e-7);
  EXPECT_NEAR(sol.free_value(1, 0), 2.0, 1e-6);
  EXPECT_NEAR(sol.free_value(1, 1), -3.0, 1e-7);
}

TEST(Sdp, BlockOrderDoesNotChangeObjective) {
  // Two independent 2x2 problems with different costs.
  auto build = [](bool swapped) {
    SdpProblem p;
    p.blocks = {{2, BlockKind::Psd}, {3, BlockKind::Psd}};
    int b0 = swapped ? 1 : 0, b1 = swapped ? 0 : 1;
    if (swapped) std::swap(p.blocks[0], p.blocks[1]);
    p.C.add(b0, 0, 0, 1.0);
    p.C.add(b0, 1, 1, 2.0);
    p.C.add(b1, 0, 0, 1.0);
    p.C.add(b1, 2, 2, 3.0);
    p.C.add(b1, 0, 2, 0.5);
    BlockSparse a, c;
    a.add(b0, 0, 1, 0.5);
    c.add(b1, 0, 0, 1.0);
    c.add(b1, 1, 1, 1.0);
    c.add(b1, 2, 2, 1.0);
    p.A = {a, c};
    p.b = {1.0, 2.0};
    return p;
  };
  auto s1 = solve_sdp(build(false)), s2 = solve_sdp(build(true));
  ASSERT_EQ(s1.status, SdpStatus::Optimal);
  ASSERT_EQ(s2.status, SdpStatus::Optimal);
  EXPECT_NEAR(s1.objective, s2.objective, 1e-9);
}

TEST(Sdp, DeterministicAcrossRuns) {
  auto p = two_by_two();
  auto a = solve_sdp(p), b = solve_sdp(p);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.objective, b.objective);
}

TEST(Sdp, RandomFeasibleProblemsRespectWeakDuality) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4, m = 5;
    // Feasible by construction: b = A(X0) with X0 = I; bounded since C is PD.
    SdpProblem p;
    p.blocks = {{n, BlockKind::Psd}};
    Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return g(rng); });
    Eigen::MatrixXd Cm = R * R.transpose() + Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) p.C.add(0, i, j, Cm(i, j));
    for (int k = 0; k < m; ++k) {
      BlockSparse a;
      double tr = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          double v = g(rng);
          a.add(0, i, j, v);
          if (i == j) tr += v;
        }
      p.A.push_back(a);
      p.b.push_back(tr);
    }
    auto sol = solve_sdp(p);
    ASSERT_EQ(sol.status, SdpStatus::Optimal) << "trial " << trial << ": " << sol.message;
    EXPECT_GE(weak_duality_slack(sol), -1e-6);
    EXPECT_LE(sol.residuals.primal, 1e-8);
    EXPECT_LE(sol.residuals.dual, 1e-8);
  }
}

TEST(Sdp, TextFormatRoundTrip) {
  auto p = two_by_two();
  std::stringstream ss;
  write_sdp(ss, p);
  auto q = read_sdp(ss);
  auto a = solve_sdp(p), b = solve_sdp(q);
  EXPECT_EQ(a.objective, b.objective);
  std::stringstream so;
  write_solution(so, a);
  auto r = read_solution(so, p);
  EXPECT_EQ(r.status, a.status);
  EXPECT_NEAR(r.objective, a.objective, 1e-15);
  EXPECT_LE(r.residuals.primal, 1e-8);
}

TEST(Sdp, RejectsInvalidSettings) {
  SolverSettings s;
  s.step_fraction = 1.0;
  EXPECT_THROW(solve_sdp(two_by_two(), s), std::invalid_argument);
}
