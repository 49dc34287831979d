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
#include "ecodrive/oracle/dense_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ecodrive::oracle {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Constraint written as n'x >= c. Equalities carry the orientation chosen
// when they entered the active set and are never dropped.
struct Row {
  VectorXd n;
  double c = 0.0;
  bool equality = false;
  int source = 0;  // index into A or G
  double sign = 1.0;
};

class ActiveSetSolver {
public:
  ActiveSetSolver(const MatrixXd& H, const VectorXd& g, double tol) : tol_(tol) {
    Eigen::LLT<MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("dense_qp_solve: H must be positive definite");
    Hinv_ = llt.solve(MatrixXd::Identity(H.rows(), H.cols()));
    x_ = -Hinv_ * g;
  }

  // Makes `p` active. Returns false if the problem is infeasible.
  bool add(Row p, int& iterations, int max_iter) {
    double up = 0.0;
    while (iterations++ < max_iter) {
      const auto k = static_cast<Eigen::Index>(active_.size());
      VectorXd r = VectorXd::Zero(k);
      VectorXd z;
      if (k == 0) {
        z = Hinv_ * p.n;
      } else {
        MatrixXd N(x_.size(), k);
        for (Eigen::Index i = 0; i < k; ++i) N.col(i) = active_[static_cast<std::size_t>(i)].n;
        const MatrixXd HN = Hinv_ * N;
        r = (N.transpose() * HN).ldlt().solve(HN.transpose() * p.n);
        z = Hinv_ * (p.n - N * r);
      }
      const double sp = p.n.dot(x_) - p.c;
      double t1 = kInf;
      std::size_t drop = 0;
      for (std::size_t i = 0; i < active_.size(); ++i) {
        if (active_[i].equality || r(static_cast<Eigen::Index>(i)) <= tol_) continue;
        const double ti = u_[i] / r(static_cast<Eigen::Index>(i));
        if (ti < t1) {
          t1 = ti;
          drop = i;
        }
      }
      const double zn = z.dot(p.n);
      const bool z_zero = z.lpNorm<Eigen::Infinity>() <= tol_ * (1.0 + p.n.lpNorm<Eigen::Infinity>());
      const double t2 = z_zero ? kInf : -sp / zn;
      if (z_zero && p.equality && std::abs(sp) <= 1e3 * tol_ * (1.0 + std::abs(p.c))) return true;
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) return false;
      if (!z_zero) x_ += t * z;
      for (std::size_t i = 0; i < active_.size(); ++i) u_[i] -= t * r(static_cast<Eigen::Index>(i));
      up += t;
      if (!z_zero && t2 <= t1) {
        active_.push_back(std::move(p));
        u_.push_back(up);
        return true;
      }
      active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(drop));
      u_.erase(u_.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    return false;
  }

  const VectorXd& x() const { return x_; }
  const std::vector<Row>& active() const { return active_; }
  const std::vector<double>& u() const { return u_; }

private:
  double tol_;
  MatrixXd Hinv_;
  VectorXd x_;
  std::vector<Row> active_;
  std::vector<double> u_;
};

}  // namespace

DenseQpResult dense_qp_solve(const MatrixXd& H, const VectorXd& g, const MatrixXd& A,
                             const VectorXd& b, const MatrixXd& G, const VectorXd& h, double tol,
                             int max_iter) {
  ActiveSetSolver solver(H, g, tol);
  DenseQpResult out;
  const auto me = b.size();
  const auto mi = h.size();

  for (Eigen::Index i = 0; i < me; ++i) {
    Row row;
    row.equality = true;
    row.source = static_cast<int>(i);
    const double s = A.row(i).dot(solver.x()) - b(i);
    row.sign = s > 0.0 ? -1.0 : 1.0;
    row.n = row.sign * A.row(i).transpose();
    row.c = row.sign * b(i);
    if (!solver.add(std::move(row), out.iterations, max_iter)) return out;
  }

  std::vector<bool> in_set(static_cast<std::size_t>(mi), false);
  while (out.iterations < max_iter) {
    std::fill(in_set.begin(), in_set.end(), false);
    for (const auto& r : solver.active()) {
      if (!r.equality) in_set[static_cast<std::size_t>(r.source)] = true;
    }
    Eigen::Index worst = -1;
    double worst_v = 0.0;
    for (Eigen::Index j = 0; j < mi; ++j) {
      if (in_set[static_cast<std::size_t>(j)]) continue;
      const double v = (G.row(j).dot(solver.x()) - h(j)) / (1.0 + std::abs(h(j)));
      if (v > tol && v > worst_v) {
        worst_v = v;
        worst = j;
      }
    }
    if (worst < 0) break;
    Row row;
    row.source = static_cast<int>(worst);
    row.n = -G.row(worst).transpose();
    row.c = -h(worst);
    if (!solver.add(std::move(row), out.iterations, max_iter)) return out;
  }
  if (out.iterations >= max_iter) return out;

  out.feasible = true;
  out.x = solver.x();
  out.y = VectorXd::Zero(me);
  out.z = VectorXd::Zero(mi);
  for (std::size_t i = 0; i < solver.active().size(); ++i) {
    const auto& r = solver.active()[i];
    if (r.equality) out.y(r.source) = -r.sign * solver.u()[i];
    else out.z(r.source) = solver.u()[i];
  }
  out.objective = 0.5 * out.x.dot(H * out.x) + g.dot(out.x);
  return out;
}

VectorXd finite_diff_grad(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                          double h_rel) {
  VectorXd grad(x.size());
  VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h_rel * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + step;
    const double fp = f(xp);
    xp(i) = x(i) - step;
    const double fm = f(xp);
    xp(i) = x(i);
    grad(i) = (fp - fm) / (2.0 * step);
  }
  return grad;
}

}  // namespace ecodrive::oracle
