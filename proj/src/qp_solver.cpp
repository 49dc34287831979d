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
#include "ecodrive/qp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace ecodrive {

namespace {

using Eigen::VectorXd;

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double sparse_max_abs(const SparseMatrix& M) {
  double out = 0.0;
  for (int k = 0; k < M.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(M, k); it; ++it) out = std::max(out, std::abs(it.value()));
  }
  return out;
}

VectorXd row_inf_norms(const SparseMatrix& M) {
  VectorXd r = VectorXd::Zero(M.rows());
  for (int k = 0; k < M.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(M, k); it; ++it) {
      r(it.row()) = std::max(r(it.row()), std::abs(it.value()));
    }
  }
  return r;
}

bool all_finite(const VectorXd& v) { return v.allFinite(); }

bool all_finite(const SparseMatrix& M) {
  for (int k = 0; k < M.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(M, k); it; ++it) {
      if (!std::isfinite(it.value())) return false;
    }
  }
  return true;
}

// Internally scaled copy of a problem: x = D xs, rows equilibrated, cost
// multiplied by `cost`.
struct Scaled {
  VectorXd D, ra, rg;
  double cost = 1.0;
  SparseMatrix H, A, At, G, Gt;
  VectorXd g, b, h;
};

Scaled make_scaled(const QpProblem& qp) {
  Scaled s;
  const auto n = qp.num_vars();
  s.D = qp.scale.size() == n ? qp.scale : VectorXd::Ones(n);
  const auto Dm = s.D.asDiagonal();
  SparseMatrix H = qp.H.size() == 0 ? SparseMatrix(n, n) : qp.H;
  SparseMatrix A = qp.A.size() == 0 ? SparseMatrix(qp.num_eq(), n) : qp.A;
  SparseMatrix G = qp.G.size() == 0 ? SparseMatrix(qp.num_ineq(), n) : qp.G;
  SparseMatrix HD = (Dm * H * Dm);
  SparseMatrix AD = A * Dm;
  SparseMatrix GD = G * Dm;
  s.ra = row_inf_norms(AD);
  s.rg = row_inf_norms(GD);
  for (Eigen::Index i = 0; i < s.ra.size(); ++i) s.ra(i) = s.ra(i) > 0.0 ? 1.0 / s.ra(i) : 1.0;
  for (Eigen::Index i = 0; i < s.rg.size(); ++i) s.rg(i) = s.rg(i) > 0.0 ? 1.0 / s.rg(i) : 1.0;
  const VectorXd gD = s.D.cwiseProduct(qp.g);
  const double cmax = std::max(sparse_max_abs(HD), inf_norm(gD));
  s.cost = cmax > 0.0 ? 1.0 / cmax : 1.0;
  s.H = s.cost * HD;
  s.g = s.cost * gD;
  s.A = s.ra.asDiagonal() * AD;
  s.b = s.ra.cwiseProduct(qp.b);
  s.G = s.rg.asDiagonal() * GD;
  s.h = s.rg.cwiseProduct(qp.h);
  s.At = s.A.transpose();
  s.Gt = s.G.transpose();
  s.H.makeCompressed();
  s.A.makeCompressed();
  s.G.makeCompressed();
  return s;
}

KktResiduals residuals_of(const SparseMatrix& H, const VectorXd& g, const SparseMatrix& A,
                          const VectorXd& b, const SparseMatrix& G, const VectorXd& h,
                          const VectorXd& x, const VectorXd& y, const VectorXd& z) {
  KktResiduals r;
  VectorXd stat = g;
  if (H.size() > 0) stat += H * x;
  if (b.size() > 0) {
    stat += A.transpose() * y;
    r.primal = inf_norm(A * x - b);
  }
  if (h.size() > 0) {
    stat += G.transpose() * z;
    const VectorXd slack = G * x - h;
    r.dual = std::max(0.0, slack.maxCoeff());
    r.complementarity = inf_norm(z.cwiseProduct(slack));
  }
  r.stationarity = inf_norm(stat);
  return r;
}

// Reduced quasi-definite KKT system [[M + rho I, A'], [A, -delta I]] with
// M = H + G' W G.
class KktSystem {
public:
  KktSystem(const Scaled& s, double reg) : s_(s), reg_(reg), n_(s.g.size()), me_(s.b.size()) {}

  bool factor(const VectorXd& w) {
    M_ = s_.H + SparseMatrix(s_.Gt * w.asDiagonal() * s_.G);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(M_.nonZeros() + s_.A.nonZeros() + n_ + me_));
    for (int k = 0; k < M_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(M_, k); it; ++it) {
        if (it.row() >= it.col()) trip.emplace_back(it.row(), it.col(), it.value());
      }
    }
    for (Eigen::Index i = 0; i < n_; ++i) trip.emplace_back(i, i, reg_);
    for (int k = 0; k < s_.A.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(s_.A, k); it; ++it) {
        trip.emplace_back(n_ + it.row(), it.col(), it.value());
      }
    }
    for (Eigen::Index i = 0; i < me_; ++i) trip.emplace_back(n_ + i, n_ + i, -reg_);
    SparseMatrix K(n_ + me_, n_ + me_);
    K.setFromTriplets(trip.begin(), trip.end());
    if (!analysed_) {
      ldl_.analyzePattern(K);
      analysed_ = true;
    }
    ldl_.factorize(K);
    return ldl_.info() == Eigen::Success;
  }

  // Solves the unregularised system with iterative refinement.
  std::pair<VectorXd, VectorXd> solve(const VectorXd& r1, const VectorXd& r2) const {
    VectorXd rhs(n_ + me_);
    rhs << r1, r2;
    VectorXd sol = ldl_.solve(rhs);
    for (int it = 0; it < 3; ++it) {
      const VectorXd dx = sol.head(n_);
      const VectorXd dy = sol.tail(me_);
      VectorXd res(n_ + me_);
      res.head(n_) = r1 - M_ * dx;
      if (me_ > 0) {
        res.head(n_) -= s_.At * dy;
        res.tail(me_) = r2 - s_.A * dx;
      }
      if (inf_norm(res) <= 1e-14 * (1.0 + inf_norm(rhs))) break;
      sol += ldl_.solve(res);
    }
    return {sol.head(n_), sol.tail(me_)};
  }

private:
  const Scaled& s_;
  double reg_;
  Eigen::Index n_, me_;
  SparseMatrix M_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldl_;
  bool analysed_ = false;
};

double max_step(const VectorXd& v, const VectorXd& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  }
  return a;
}

}  // namespace

double QpProblem::objective(const Eigen::VectorXd& x) const {
  double f = g.dot(x);
  if (H.size() > 0) f += 0.5 * x.dot(H * x);
  return f;
}

void QpProblem::validate() const {
  const auto n = num_vars();
  auto fail = [](const std::string& what) { throw std::invalid_argument("QpProblem: " + what); };
  if (H.size() > 0 && (H.rows() != n || H.cols() != n)) fail("H must be n x n");
  if (A.size() > 0 && (A.rows() != num_eq() || A.cols() != n)) fail("A must be m_eq x n");
  if (A.size() == 0 && num_eq() > 0 && A.rows() != num_eq()) fail("A missing");
  if (G.size() > 0 && (G.rows() != num_ineq() || G.cols() != n)) fail("G must be m_in x n");
  if (G.size() == 0 && num_ineq() > 0 && G.rows() != num_ineq()) fail("G missing");
  if (scale.size() != 0 && scale.size() != n) fail("scale must be empty or length n");
  if (scale.size() == n && (scale.array() <= 0.0).any()) fail("scale entries must be positive");
  if (!all_finite(g) || !all_finite(b) || !all_finite(h) || !all_finite(H) || !all_finite(A) ||
      !all_finite(G)) {
    fail("non-finite data");
  }
}

void QpProblem::dump(std::ostream& os) const {
  os << "# qp n=" << num_vars() << " m_eq=" << num_eq() << " m_in=" << num_ineq() << "\n";
  auto emit = [&os](const char* tag, const SparseMatrix& M) {
    std::vector<std::tuple<int, int, double>> t;
    for (int k = 0; k < M.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(M, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    }
    std::sort(t.begin(), t.end());
    for (const auto& [i, j, v] : t) os << fmt::format("{} {} {} {:.17g}\n", tag, i, j, v);
  };
  auto emitv = [&os](const char* tag, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) os << fmt::format("{} {} {:.17g}\n", tag, i, v(i));
  };
  emit("H", H);
  emitv("g", g);
  emit("A", A);
  emitv("b", b);
  emit("G", G);
  emitv("h", h);
}

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::MaxIter: return "max_iter";
    case QpStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, primal, dual, complementarity});
}

KktResiduals kkt_residuals(const QpProblem& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& z) {
  if (x.size() != qp.num_vars() || y.size() != qp.num_eq() || z.size() != qp.num_ineq()) {
    throw std::invalid_argument("kkt_residuals: dimension mismatch");
  }
  return residuals_of(qp.H, qp.g, qp.A, qp.b, qp.G, qp.h, x, y, z);
}

QpSolution solve_qp(const QpProblem& qp, const QpSettings& settings, const QpWarmStart* warm) {
  qp.validate();
  const Scaled s = make_scaled(qp);
  const auto n = s.g.size();
  const auto me = s.b.size();
  const auto mi = s.h.size();
  const double tol = settings.tol;

  KktSystem kkt(s, settings.regularization);
  VectorXd x(n), y(me), z(mi), sl(mi);

  const bool have_warm = warm != nullptr && warm->x.size() == n;
  if (have_warm) {
    x = warm->x.cwiseQuotient(s.D);
    y = warm->y.size() == me ? VectorXd(s.cost * warm->y.cwiseQuotient(s.ra)) : VectorXd::Zero(me);
    VectorXd zw = warm->z.size() == mi ? VectorXd(s.cost * warm->z.cwiseQuotient(s.rg)) : VectorXd::Zero(mi);
    const double floor = 1e-2;
    sl = (s.h - s.G * x).cwiseMax(floor);
    z = zw.cwiseMax(floor);
  } else {
    if (!kkt.factor(VectorXd::Ones(mi))) {
      QpSolution bad;
      bad.status = QpStatus::MaxIter;
      return bad;
    }
    auto [x0, y0] = kkt.solve(-s.g + s.Gt * s.h, s.b);
    x = x0;
    y = y0;
    const VectorXd r = s.h - s.G * x;
    sl = r;
    z = -r;
    if (mi > 0) {
      const double ap = -sl.minCoeff();
      if (ap >= 0.0) sl.array() += 1.0 + ap;
      const double ad = -z.minCoeff();
      if (ad >= 0.0) z.array() += 1.0 + ad;
    }
  }

  QpSolution sol;
  sol.status = QpStatus::MaxIter;
  int iter = 0;
  for (; iter <= settings.max_iter; ++iter) {
    const VectorXd Hx = s.H * x;
    const VectorXd Aty = me > 0 ? VectorXd(s.At * y) : VectorXd::Zero(n);
    const VectorXd Gtz = mi > 0 ? VectorXd(s.Gt * z) : VectorXd::Zero(n);
    const VectorXd Gx = mi > 0 ? VectorXd(s.G * x) : VectorXd::Zero(0);
    const VectorXd Ax = me > 0 ? VectorXd(s.A * x) : VectorXd::Zero(0);
    const VectorXd rd = Hx + s.g + Aty + Gtz;
    const VectorXd rp = Ax - s.b;
    const VectorXd ri = Gx + sl - s.h;
    const double mu = mi > 0 ? sl.dot(z) / static_cast<double>(mi) : 0.0;

    const KktResiduals res = residuals_of(s.H, s.g, s.A, s.b, s.G, s.h, x, y, z);
    const double obj = 0.5 * x.dot(Hx) + s.g.dot(x);
    const double scale_d = 1.0 + std::max({inf_norm(Hx), inf_norm(s.g), inf_norm(Aty), inf_norm(Gtz)});
    const double scale_p = 1.0 + std::max(inf_norm(Ax), inf_norm(s.b));
    const double scale_i = 1.0 + std::max(inf_norm(Gx), inf_norm(s.h));
    const bool converged = res.stationarity <= tol * scale_d && res.primal <= tol * scale_p &&
                           res.dual <= tol * scale_i && res.complementarity <= tol * (1.0 + std::abs(obj)) &&
                           inf_norm(ri) <= tol * scale_i;
    if (settings.log_iterations) {
      spdlog::debug("qp iter={} mu={:.3e} stat={:.3e} prim={:.3e} ineq={:.3e} comp={:.3e}", iter, mu,
                    res.stationarity, res.primal, res.dual, res.complementarity);
    }
    if (converged) {
      sol.status = QpStatus::Optimal;
      sol.scaled_residuals = res;
      break;
    }

    // Infeasibility certificate: A'y + G'z ~ 0 with b'y + h'z < 0.
    if (mi + me > 0) {
      const double dn = std::max(inf_norm(y), inf_norm(z));
      if (dn > 1e6) {
        const double ray = (me > 0 ? s.b.dot(y) : 0.0) + (mi > 0 ? s.h.dot(z) : 0.0);
        if (inf_norm(Aty + Gtz) <= 1e-7 * dn && ray < -1e-7 * dn) {
          sol.status = QpStatus::Infeasible;
          sol.scaled_residuals = res;
          break;
        }
      }
    }
    if (iter == settings.max_iter) {
      sol.scaled_residuals = res;
      break;
    }

    const VectorXd w = z.cwiseQuotient(sl);
    if (!kkt.factor(w)) break;

    // Predictor.
    auto direction = [&](const VectorXd& rc) {
      const VectorXd t = (rc - z.cwiseProduct(ri)).cwiseQuotient(sl);
      auto [dx, dy] = kkt.solve(-rd + (mi > 0 ? VectorXd(s.Gt * t) : VectorXd::Zero(n)), -rp);
      VectorXd ds = mi > 0 ? VectorXd(-ri - s.G * dx) : VectorXd::Zero(0);
      VectorXd dz = (-rc - z.cwiseProduct(ds)).cwiseQuotient(sl);
      return std::make_tuple(dx, dy, ds, dz);
    };
    const VectorXd rc_aff = sl.cwiseProduct(z);
    auto [dxa, dya, dsa, dza] = direction(rc_aff);
    double sigma = 0.0;
    VectorXd rc = rc_aff;
    if (mi > 0) {
      const double a_aff = std::min(max_step(sl, dsa), max_step(z, dza));
      const double mu_aff = (sl + a_aff * dsa).dot(z + a_aff * dza) / static_cast<double>(mi);
      sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
      rc = rc_aff + dsa.cwiseProduct(dza) - VectorXd::Constant(mi, sigma * mu);
    }
    auto [dx, dy, ds, dz] = direction(rc);
    double alpha = 1.0;
    if (mi > 0) alpha = std::min(1.0, 0.99 * std::min(max_step(sl, ds), max_step(z, dz)));
    x += alpha * dx;
    y += alpha * dy;
    if (mi > 0) {
      sl += alpha * ds;
      z += alpha * dz;
    }
  }

  sol.iterations = std::min(iter, settings.max_iter);
  sol.x = s.D.cwiseProduct(x);
  sol.y = s.ra.cwiseProduct(y) / s.cost;
  sol.z = s.rg.cwiseProduct(z) / s.cost;
  sol.objective = qp.objective(sol.x);
  sol.residuals = kkt_residuals(qp, sol.x, sol.y, sol.z);
  return sol;
}

}  // namespace ecodrive
