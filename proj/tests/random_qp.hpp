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
#pragma once

#include <random>
#include <vector>

#include "ecodrive/qp.hpp"

namespace testing_support {

/// Random linear-quadratic control problem with two states and one input per
/// stage, box limits on everything: a banded, strictly convex QP.
inline ecodrive::QpProblem random_banded_qp(int N, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int nx = 2, nu = 1, nz = nx + nu;
  const int n = N * nz + nx;
  auto xi = [&](int k, int i) { return k * nz + i; };
  auto ui = [&](int k) { return k * nz + nx; };

  std::vector<Eigen::Triplet<double>> H, A, G;
  Eigen::VectorXd g(n), b((N + 1) * nx);
  std::vector<double> h;
  for (int k = 0; k <= N; ++k) {
    const int m = k < N ? nz : nx;
    Eigen::MatrixXd L(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) L(i, j) = U(rng);
    Eigen::MatrixXd Q = L * L.transpose() + 0.1 * Eigen::MatrixXd::Identity(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) H.emplace_back(k * nz + i, k * nz + j, Q(i, j));
      g(k * nz + i) = 2.0 * U(rng);
    }
  }
  // x_0 fixed, x_{k+1} = A_k x_k + B_k u_k.
  for (int i = 0; i < nx; ++i) {
    A.emplace_back(i, xi(0, i), 1.0);
    b(i) = 0.5 * U(rng);
  }
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < nx; ++i) {
      const int row = (k + 1) * nx + i;
      A.emplace_back(row, xi(k + 1, i), -1.0);
      for (int j = 0; j < nx; ++j) A.emplace_back(row, xi(k, j), (i == j ? 0.9 : 0.0) + 0.1 * U(rng));
      A.emplace_back(row, ui(k), 0.5 + 0.2 * U(rng));
      b(row) = 0.0;
    }
  }
  int rows = 0;
  auto bound = [&](int col, double lo, double hi) {
    G.emplace_back(rows++, col, 1.0);
    h.push_back(hi);
    G.emplace_back(rows++, col, -1.0);
    h.push_back(-lo);
  };
  for (int k = 0; k < N; ++k) bound(ui(k), -0.3, 0.3);
  for (int k = 1; k <= N; ++k)
    for (int i = 0; i < nx; ++i) bound(xi(k, i), -1.0, 0.4 + 0.3 * std::abs(U(rng)));

  ecodrive::QpProblem qp;
  qp.H = ecodrive::SparseMatrix(n, n);
  qp.H.setFromTriplets(H.begin(), H.end());
  qp.g = g;
  qp.A = ecodrive::SparseMatrix((N + 1) * nx, n);
  qp.A.setFromTriplets(A.begin(), A.end());
  qp.b = b;
  qp.G = ecodrive::SparseMatrix(rows, n);
  qp.G.setFromTriplets(G.begin(), G.end());
  qp.h = Eigen::Map<Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
  return qp;
}

}  // namespace testing_support
