/*
 Copyright 2026 The ecodrive Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ecodrive/oracle/dense_qp.hpp"
#include "ecodrive/qp.hpp"
#include "random_qp.hpp"

using namespace ecodrive;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

QpProblem scalar_qp(double lo, double hi) {
  QpProblem qp;
  qp.H = SparseMatrix(1, 1);
  qp.H.insert(0, 0) = 1.0;
  qp.g = VectorXd::Constant(1, -1.0);
  qp.A = SparseMatrix(0, 1);
  qp.b = VectorXd(0);
  qp.G = SparseMatrix(2, 1);
  qp.G.insert(0, 0) = -1.0;
  qp.G.insert(1, 0) = 1.0;
  qp.h = VectorXd(2);
  qp.h << -lo, hi;
  return qp;
}

}  // namespace

TEST(QpSolver, ScalarInteriorMinimum) {
  const auto sol = solve_qp(scalar_qp(0.0, 10.0));
  ASSERT_TRUE(sol.optimal());
  EXPECT_NEAR(sol.x(0), 1.0, 1e-8);
  EXPECT_NEAR(sol.objective, -0.5, 1e-10);
  EXPECT_LE(sol.residuals.max(), 1e-8);
}

TEST(QpSolver, ScalarBoxClipped) {
  const auto sol = solve_qp(scalar_qp(2.0, 3.0));
  ASSERT_TRUE(sol.optimal());
  EXPECT_NEAR(sol.x(0), 2.0, 1e-8);
  EXPECT_NEAR(sol.z(0), 1.0, 1e-7);
  EXPECT_NEAR(sol.z(1), 0.0, 1e-7);
}

TEST(QpSolver, DetectsInfeasibility) {
  const auto sol = solve_qp(scalar_qp(1.0, 0.0));
  EXPECT_EQ(sol.status, QpStatus::Infeasible);
}

TEST(QpSolver, EqualityConstrained) {
  // min x1^2 + x2^2 s.t. x1 + x2 = 2.
  QpProblem qp;
  qp.H = SparseMatrix(2, 2);
  qp.H.insert(0, 0) = 2.0;
  qp.H.insert(1, 1) = 2.0;
  qp.g = VectorXd::Zero(2);
  qp.A = SparseMatrix(1, 2);
  qp.A.insert(0, 0) = 1.0;
  qp.A.insert(0, 1) = 1.0;
  qp.b = VectorXd::Constant(1, 2.0);
  qp.G = SparseMatrix(0, 2);
  qp.h = VectorXd(0);
  const auto sol = solve_qp(qp);
  ASSERT_TRUE(sol.optimal());
  EXPECT_NEAR(sol.x(0), 1.0, 1e-9);
  EXPECT_NEAR(sol.x(1), 1.0, 1e-9);
  EXPECT_NEAR(sol.y(0), -2.0, 1e-8);
}

TEST(KktResiduals, ZeroDualsReduceToGradient) {
  const auto qp = scalar_qp(0.0, 10.0);
  VectorXd x = VectorXd::Constant(1, 4.0);
  const auto r = kkt_residuals(qp, x, VectorXd(0), VectorXd::Zero(2));
  EXPECT_DOUBLE_EQ(r.stationarity, 3.0);
  EXPECT_DOUBLE_EQ(r.dual, 0.0);
  EXPECT_DOUBLE_EQ(r.complementarity, 0.0);
}

TEST(KktResiduals, GrowLinearlyUnderPerturbation) {
  const auto qp = testing_support::random_banded_qp(20, 7);
  const auto sol = solve_qp(qp);
  ASSERT_TRUE(sol.optimal());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  VectorXd dir(sol.x.size());
  for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = nd(rng);
  dir /= dir.lpNorm<Eigen::Infinity>();
  const double base = kkt_residuals(qp, sol.x, sol.y, sol.z).stationarity;
  const double r1 = kkt_residuals(qp, sol.x + 1e-4 * dir, sol.y, sol.z).stationarity - base;
  const double r2 = kkt_residuals(qp, sol.x + 2e-4 * dir, sol.y, sol.z).stationarity - base;
  EXPECT_NEAR(r2 / r1, 2.0, 0.05);
  EXPECT_NEAR(r1, 1e-4 * MatrixXd(qp.H) .operator*(dir).lpNorm<Eigen::Infinity>(), 1e-4 * 1e-3 + 1e-9);
}

TEST(QpSolver, MatchesDenseReferenceOnRandomBandedInstances) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const auto qp = testing_support::random_banded_qp(50, seed);
    const auto sol = solve_qp(qp);
    ASSERT_TRUE(sol.optimal()) << seed;
    const auto ref = oracle::dense_qp_solve(MatrixXd(qp.H), qp.g, MatrixXd(qp.A), qp.b, MatrixXd(qp.G), qp.h);
    ASSERT_TRUE(ref.feasible) << seed;
    EXPECT_NEAR(sol.objective / ref.objective, 1.0, 1e-7) << seed;
  }
}

TEST(QpSolver, ObjectiveScalingScalesDuals) {
  const auto qp = testing_support::random_banded_qp(30, 5);
  auto qp2 = qp;
  qp2.H *= 1e3;
  qp2.g *= 1e3;
  const auto a = solve_qp(qp);
  const auto b = solve_qp(qp2);
  ASSERT_TRUE(a.optimal());
  ASSERT_TRUE(b.optimal());
  EXPECT_LE((a.x - b.x).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_LE((1e3 * a.z - b.z).lpNorm<Eigen::Infinity>(), 1e-5 * (1.0 + b.z.lpNorm<Eigen::Infinity>()));
}

TEST(QpSolver, DeterministicWithWarmStart) {
  const auto qp = testing_support::random_banded_qp(40, 9);
  const auto first = solve_qp(qp);
  const auto ws = first.warm_start();
  const auto a = solve_qp(qp, {}, &ws);
  const auto b = solve_qp(qp, {}, &ws);
  ASSERT_TRUE(a.optimal());
  EXPECT_EQ(a.iterations, b.iterations);
  for (Eigen::Index i = 0; i < a.x.size(); ++i) EXPECT_EQ(a.x(i), b.x(i));
  EXPECT_NEAR(a.objective, first.objective, 1e-7 * std::abs(first.objective));
}

TEST(QpSolver, WarmStartHelpsNearbyProblem) {
  auto qp = testing_support::random_banded_qp(60, 4);
  const auto cold = solve_qp(qp);
  qp.g *= 1.01;
  const auto ws = cold.warm_start();
  const auto warm = solve_qp(qp, {}, &ws);
  ASSERT_TRUE(warm.optimal());
  EXPECT_LE(warm.iterations, cold.iterations);
}

TEST(QpProblem, DumpIsDeterministicAndValidated) {
  const auto qp = scalar_qp(0.0, 1.0);
  std::ostringstream a, b;
  qp.dump(a);
  qp.dump(b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str().find("H 0 0 1"), std::string::npos);
  auto bad = qp;
  bad.h = VectorXd::Zero(3);
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(DenseQp, AnalyticCases) {
  MatrixXd H = MatrixXd::Identity(1, 1);
  VectorXd g = VectorXd::Constant(1, -1.0);
  MatrixXd G(2, 1);
  G << -1.0, 1.0;
  VectorXd h(2);
  h << -2.0, 3.0;
  const auto r = oracle::dense_qp_solve(H, g, MatrixXd(0, 1), VectorXd(0), G, h);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.x(0), 2.0, 1e-12);
  EXPECT_NEAR(r.z(0), 1.0, 1e-12);
  h << -2.0, 1.0;
  EXPECT_FALSE(oracle::dense_qp_solve(H, g, MatrixXd(0, 1), VectorXd(0), G, h).feasible);
}

TEST(FiniteDiff, QuadraticIsExact) {
  auto f = [](const VectorXd& x) { return 3.0 * x(0) * x(0) + x(0) * x(1) - 2.0 * x(1); };
  VectorXd x(2);
  x << 1.5, -0.5;
  const auto grad = oracle::finite_diff_grad(f, x);
  EXPECT_NEAR(grad(0), 6.0 * 1.5 - 0.5, 1e-8);
  EXPECT_NEAR(grad(1), 1.5 - 2.0, 1e-8);
}

TEST(FiniteDiff, ErrorCurveHasInteriorMinimum) {
  auto f = [](const VectorXd& x) { return std::exp(std::sin(x(0))); };
  VectorXd x = VectorXd::Constant(1, 0.7);
  const double exact = std::cos(0.7) * std::exp(std::sin(0.7));
  std::vector<double> err;
  for (double h : {1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12}) {
    err.push_back(std::abs(oracle::finite_diff_grad(f, x, h)(0) - exact));
  }
  const auto best = std::min_element(err.begin(), err.end()) - err.begin();
  EXPECT_GT(best, 0);
  EXPECT_LT(best, static_cast<long>(err.size()) - 1);
  EXPECT_LT(err[2], 1e-9);
}
