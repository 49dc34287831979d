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

#include <iosfwd>
#include <optional>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ecodrive {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// min 1/2 x'Hx + g'x  s.t.  A x = b,  G x <= h.
///
/// H is stored in full (both triangles). `scale` is an optional vector of
/// typical variable magnitudes; the solver works in x / scale internally.
struct QpProblem {
  SparseMatrix H;
  Eigen::VectorXd g;
  SparseMatrix A;
  Eigen::VectorXd b;
  SparseMatrix G;
  Eigen::VectorXd h;
  Eigen::VectorXd scale;

  Eigen::Index num_vars() const { return g.size(); }
  Eigen::Index num_eq() const { return b.size(); }
  Eigen::Index num_ineq() const { return h.size(); }

  double objective(const Eigen::VectorXd& x) const;
  /// Throws std::invalid_argument on inconsistent dimensions or non-finite data.
  void validate() const;
  /// Plain-text triplet listing ("H i j v", "g i v", ...), sorted and stable.
  void dump(std::ostream& os) const;
};

enum class QpStatus { Optimal, MaxIter, Infeasible };

std::string_view to_string(QpStatus status);

struct KktResiduals {
  double stationarity = 0.0;     // |Hx + g + A'y + G'z|_inf
  double primal = 0.0;           // |Ax - b|_inf
  double dual = 0.0;             // |(Gx - h)_+|_inf
  double complementarity = 0.0;  // |z o (Gx - h)|_inf

  double max() const;
};

KktResiduals kkt_residuals(const QpProblem& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& z);

struct QpSettings {
  double tol = 1e-8;
  int max_iter = 100;
  double regularization = 1e-10;
  bool log_iterations = false;
};

struct QpWarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd z;
};

struct QpSolution {
  QpStatus status = QpStatus::MaxIter;
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // equality multipliers
  Eigen::VectorXd z;  // inequality multipliers, >= 0
  double objective = 0.0;
  int iterations = 0;
  /// Residuals of the original (unscaled) problem at the returned point.
  KktResiduals residuals;
  /// Residuals in the solver's internal scaling; these are what `tol` bounds.
  KktResiduals scaled_residuals;

  bool optimal() const { return status == QpStatus::Optimal; }
  QpWarmStart warm_start() const { return {x, y, z}; }
};

/// Primal-dual interior point method with Mehrotra predictor-corrector.
/// The reduced KKT system is quasi-definite and factored with a sparse LDL'
/// under a fill-reducing ordering, so banded problems cost O(n) per iteration.
QpSolution solve_qp(const QpProblem& qp, const QpSettings& settings = {},
                    const QpWarmStart* warm = nullptr);

}  // namespace ecodrive
