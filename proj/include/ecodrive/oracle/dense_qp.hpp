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

#include <functional>

#include <Eigen/Dense>

namespace ecodrive::oracle {

struct DenseQpResult {
  bool feasible = false;
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // equality multipliers
  Eigen::VectorXd z;  // inequality multipliers
  double objective = 0.0;
  int iterations = 0;
};

/// Dual active-set method (Goldfarb-Idnani) for
/// min 1/2 x'Hx + g'x s.t. A x = b, G x <= h, with H positive definite.
/// Dense and cubic per step; meant for small reference instances only.
/// Throws std::invalid_argument if H is not positive definite.
DenseQpResult dense_qp_solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                             const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                             const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                             double tol = 1e-11, int max_iter = 10000);

/// Central differences with per-component step h_rel * max(1, |x_i|).
Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double h_rel = 1e-6);

}  // namespace ecodrive::oracle
