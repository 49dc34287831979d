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
#include "ecodrive/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ecodrive {

namespace {

// Typical magnitudes used to precondition the QP.
constexpr double kForceScale = 1e4;
constexpr double kAccelScale = 0.1;

}  // namespace

HorizonGrid make_horizon(const RoadProfile& road, const VehicleParams& params, double zeta,
                         double s_H_max, double ds_nominal) {
  if (!(ds_nominal > 0.0)) throw std::invalid_argument("sample interval must be positive");
  if (!(s_H_max > 0.0)) throw std::invalid_argument("maximum horizon length must be positive");
  const double s_f = road.length();
  if (zeta < 0.0 || zeta > s_f + 1e-9) throw std::out_of_range("horizon start outside the route");

  HorizonGrid grid;
  grid.start = std::min(zeta, s_f);
  grid.length = std::min(s_H_max, s_f - grid.start);
  grid.N = static_cast<int>(std::lround(grid.length / ds_nominal));
  if (grid.length < 1e-6 || grid.N == 0) {
    grid.N = 0;
    grid.length = 0.0;
    return grid;
  }
  grid.ds = grid.length / grid.N;
  for (int k = 0; k < grid.N; ++k) {
    const double s0 = grid.position(k);
    const double s1 = std::min(s_f, grid.position(k + 1));
    grid.grade_force.push_back(
        road.mean_grade_force(s0, s1, params.mass, params.gravity, params.rolling_coeff));
  }
  for (int k = 0; k <= grid.N; ++k) {
    const double s = std::min(s_f, grid.position(k));
    grid.E_min.push_back(energy_floor(road.v_min_at(s), params));
    const double vmax = road.v_max_at(s);
    grid.E_max.push_back(0.5 * params.mass * vmax * vmax);
  }
  return grid;
}

void StageCostCoeffs::validate() const {
  if (!(c_eg > 0.0)) throw std::invalid_argument("energy price must be positive");
  if (w1 < 0.0 || w2 < 0.0) throw std::invalid_argument("comfort weights must be non-negative");
  if (lambda < 0.0) throw std::invalid_argument("time costate must be non-negative");
  for (double pi : p) {
    if (pi < 0.0) throw std::invalid_argument("power fit coefficients must be non-negative");
  }
}

StageCostCoeffs make_stage_coeffs(const PowerFit& fit, double c_eg, double w1, double w2, double lambda) {
  StageCostCoeffs c;
  c.kind = fit.kind;
  c.c_eg = c_eg;
  c.p = fit.p;
  c.w1 = w1;
  c.w2 = w2;
  c.lambda = lambda;
  return c;
}

double energy_stage_cost(double E, double F, const StageCostCoeffs& c, const VehicleParams& params) {
  if (!(E >= 0.5 * params.mass)) throw std::domain_error("kinetic energy below the 1 m/s floor");
  return c.c_eg * (c.p[0] * std::sqrt(params.mass / (2.0 * E)) + c.p[1] * 2.0 * E / params.mass +
                   c.p[2] * F + c.p[3] * F * F);
}

double stage_cost(double E, double a, double j, double F, const StageCostCoeffs& c,
                  const VehicleParams& params) {
  return energy_stage_cost(E, F, c, params) + c.lambda * std::sqrt(params.mass / (2.0 * E)) +
         c.w1 * a * a + c.w2 * j * j;
}

Affine linearize_sqrt_term(double E_hat, double E_floor) {
  if (!(E_hat > 0.0) || E_hat < E_floor) {
    throw std::domain_error("linearisation point below the kinetic-energy floor");
  }
  const double r = 1.0 / std::sqrt(E_hat);
  return {1.5 * r, -0.5 * r / E_hat};
}

double IntervalLimits::max_force(double E) const { return std::min(F_cap_max, F_max(E)); }

double IntervalLimits::min_force(double E) const {
  return has_min ? std::max(F_cap_min, F_min(E)) : 0.0;
}

std::vector<IntervalLimits> linearized_limits(const std::vector<double>& E_hat, const ForceLimitFit& fit,
                                              const HorizonGrid& grid, const VehicleParams& params) {
  if (static_cast<int>(E_hat.size()) < grid.N) throw std::invalid_argument("E_hat shorter than the horizon");
  const double m = params.mass;
  const double root = std::sqrt(m / 2.0);
  const double air = 2.0 * params.drag_factor() / m;
  std::vector<IntervalLimits> out(static_cast<std::size_t>(grid.N));
  for (int k = 0; k < grid.N; ++k) {
    auto& L = out[static_cast<std::size_t>(k)];
    const Affine f = linearize_sqrt_term(E_hat[static_cast<std::size_t>(k)]);
    L.F_cap_max = fit.f_cap_max;
    L.F_max = {fit.y0 + fit.y1 * root * f.c0, fit.y1 * root * f.cE};
    L.has_min = fit.has_min;
    if (fit.has_min) {
      L.F_cap_min = fit.f_cap_min;
      L.F_min = {fit.x0 + fit.x1 * root * f.c0, fit.x1 * root * f.cE};
    }
    const double Fa = grid.grade_force[static_cast<std::size_t>(k)];
    L.a_max = {(L.F_max.c0 - Fa) / m, (L.F_max.cE - air) / m};
    const Affine lo = fit.has_min ? L.F_min : Affine{};
    L.a_min = {(lo.c0 + params.brake_floor - Fa) / m, (lo.cE - air) / m};
  }
  return out;
}

OcpQp assemble_qp(const HorizonGrid& grid, const StageCostCoeffs& coeffs, const ForceLimitFit& fit,
                  const std::vector<double>& E_hat, double E0, double a0, const VehicleParams& params,
                  const AssembleOptions& options) {
  const int N = grid.N;
  if (N <= 0) throw std::invalid_argument("cannot assemble an empty horizon");
  if (static_cast<int>(E_hat.size()) != N + 1) {
    throw std::invalid_argument("E_hat must have N+1 = " + std::to_string(N + 1) + " entries, got " +
                                std::to_string(E_hat.size()));
  }
  if (static_cast<int>(grid.grade_force.size()) != N || static_cast<int>(grid.E_min.size()) != N + 1) {
    throw std::invalid_argument("horizon grid data inconsistent with N");
  }
  coeffs.validate();
  for (double Eh : E_hat) {
    if (!(Eh > 0.0) || !std::isfinite(Eh)) throw std::domain_error("linearisation energy must be positive");
  }

  OcpQp out;
  out.layout.N = N;
  out.E_hat = E_hat;
  out.limits = linearized_limits(E_hat, fit, grid, params);
  const auto& L = out.layout;
  const int n = L.size();
  const double m = params.mass;
  const double ds = grid.ds;
  const double air = 2.0 * params.drag_factor() / m;

  // Cost.
  std::vector<Eigen::Triplet<double>> H;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  const double c_time = ds * (coeffs.c_eg * coeffs.p[0] + coeffs.lambda) * std::sqrt(m / 2.0);
  for (int k = 0; k < N; ++k) {
    const double Eh = E_hat[static_cast<std::size_t>(k)];
    if (!(Eh > 0.0)) throw std::domain_error("linearisation energy must be positive");
    const double r = 1.0 / std::sqrt(Eh);
    const double curv = 0.75 * c_time * r / (Eh * Eh);
    H.emplace_back(L.E(k), L.E(k), curv);
    g(L.E(k)) += -1.25 * c_time * r / Eh + ds * coeffs.c_eg * coeffs.p[1] * 2.0 / m;
    out.constant += 1.875 * c_time * r;
    g(L.F(k)) += ds * coeffs.c_eg * coeffs.p[2];
    if (coeffs.p[3] > 0.0) H.emplace_back(L.F(k), L.F(k), 2.0 * ds * coeffs.c_eg * coeffs.p[3]);
    if (coeffs.w1 > 0.0) H.emplace_back(L.a(k), L.a(k), 2.0 * ds * coeffs.w1);
    if (coeffs.w2 > 0.0) H.emplace_back(L.j(k), L.j(k), 2.0 * ds * coeffs.w2);
  }

  // Equalities: initial state, forward-Euler dynamics, force definition.
  std::vector<Eigen::Triplet<double>> A;
  std::vector<double> b;
  int row = 0;
  A.emplace_back(row, L.E(0), 1.0);
  b.push_back(E0);
  ++row;
  A.emplace_back(row, L.a(0), 1.0);
  b.push_back(a0);
  ++row;
  for (int k = 0; k < N; ++k) {
    A.emplace_back(row, L.E(k + 1), 1.0);
    A.emplace_back(row, L.E(k), -1.0);
    A.emplace_back(row, L.a(k), -ds * m);
    b.push_back(0.0);
    ++row;
    A.emplace_back(row, L.a(k + 1), 1.0);
    A.emplace_back(row, L.a(k), -1.0);
    A.emplace_back(row, L.j(k), -ds);
    b.push_back(0.0);
    ++row;
    A.emplace_back(row, L.F(k), 1.0);
    A.emplace_back(row, L.a(k), -m);
    A.emplace_back(row, L.E(k), -air);
    A.emplace_back(row, L.Fb(k), 1.0);
    b.push_back(grid.grade_force[static_cast<std::size_t>(k)]);
    ++row;
  }
  const int m_eq = row;

  // Inequalities G x <= h.
  std::vector<Eigen::Triplet<double>> G;
  std::vector<double> h;
  row = 0;
  auto upper = [&](int col, double coef, double rhs) {
    G.emplace_back(row++, col, coef);
    h.push_back(rhs);
  };
  for (int k = 1; k <= N; ++k) {
    upper(L.E(k), 1.0, grid.E_max[static_cast<std::size_t>(k)]);
    upper(L.E(k), -1.0, -grid.E_min[static_cast<std::size_t>(k)]);
    if (!options.relax_comfort) {
      upper(L.a(k), 1.0, params.accel_hi);
      upper(L.a(k), -1.0, -params.accel_lo);
    }
  }
  for (int k = 0; k < N; ++k) {
    const auto& lim = out.limits[static_cast<std::size_t>(k)];
    if (!options.relax_comfort) {
      upper(L.j(k), 1.0, params.jerk_hi);
      upper(L.j(k), -1.0, -params.jerk_lo);
    }
    upper(L.Fb(k), 1.0, 0.0);
    upper(L.Fb(k), -1.0, -params.brake_floor);
    upper(L.F(k), 1.0, lim.F_cap_max);
    if (lim.F_max.cE != 0.0) {
      G.emplace_back(row, L.E(k), -lim.F_max.cE);
    }
    upper(L.F(k), 1.0, lim.F_max.c0);
    if (coeffs.kind == PowertrainKind::Conventional || !lim.has_min) {
      upper(L.F(k), -1.0, 0.0);
    } else {
      upper(L.F(k), -1.0, -lim.F_cap_min);
      if (lim.F_min.cE != 0.0) G.emplace_back(row, L.E(k), lim.F_min.cE);
      upper(L.F(k), -1.0, -lim.F_min.c0);
    }
  }
  const int m_in = row;

  auto& qp = out.qp;
  qp.H = SparseMatrix(n, n);
  qp.H.setFromTriplets(H.begin(), H.end());
  qp.g = g;
  qp.A = SparseMatrix(m_eq, n);
  qp.A.setFromTriplets(A.begin(), A.end());
  qp.b = Eigen::Map<Eigen::VectorXd>(b.data(), m_eq);
  qp.G = SparseMatrix(m_in, n);
  qp.G.setFromTriplets(G.begin(), G.end());
  qp.h = Eigen::Map<Eigen::VectorXd>(h.data(), m_in);
  qp.scale.resize(n);
  const double E_ref = 0.5 * m * 20.0 * 20.0;
  for (int k = 0; k <= N; ++k) {
    qp.scale(L.E(k)) = E_ref;
    qp.scale(L.a(k)) = kAccelScale;
  }
  for (int k = 0; k < N; ++k) {
    qp.scale(L.j(k)) = kAccelScale / ds;
    qp.scale(L.F(k)) = kForceScale;
    qp.scale(L.Fb(k)) = kForceScale;
  }
  return out;
}

HorizonPlan unpack(const OcpLayout& L, const Eigen::VectorXd& x) {
  if (x.size() != L.size()) throw std::invalid_argument("decision vector size mismatch");
  HorizonPlan p;
  for (int k = 0; k <= L.N; ++k) {
    p.E.push_back(x(L.E(k)));
    p.a.push_back(x(L.a(k)));
  }
  for (int k = 0; k < L.N; ++k) {
    p.j.push_back(x(L.j(k)));
    p.F.push_back(x(L.F(k)));
    p.Fb.push_back(x(L.Fb(k)));
  }
  return p;
}

Eigen::VectorXd pack(const HorizonPlan& plan) {
  OcpLayout L;
  L.N = plan.N();
  Eigen::VectorXd x(L.size());
  for (int k = 0; k <= L.N; ++k) {
    x(L.E(k)) = plan.E[static_cast<std::size_t>(k)];
    x(L.a(k)) = plan.a[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < L.N; ++k) {
    x(L.j(k)) = plan.j[static_cast<std::size_t>(k)];
    x(L.F(k)) = plan.F[static_cast<std::size_t>(k)];
    x(L.Fb(k)) = plan.Fb[static_cast<std::size_t>(k)];
  }
  return x;
}

double discretized_cost(const HorizonPlan& plan, const HorizonGrid& grid, const StageCostCoeffs& c,
                        const VehicleParams& params) {
  double total = 0.0;
  for (int k = 0; k < plan.N(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    total += grid.ds * stage_cost(plan.E[i], plan.a[i], plan.j[i], plan.F[i], c, params);
  }
  return total;
}

double plan_time(const std::vector<double>& E, double ds, const VehicleParams& params) {
  double t = 0.0;
  for (std::size_t k = 0; k + 1 < E.size(); ++k) t += ds * time_slope(E[k], params);
  return t;
}

}  // namespace ecodrive
