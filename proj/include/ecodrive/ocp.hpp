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

#include <vector>

#include <Eigen/Dense>

#include "ecodrive/powertrain.hpp"
#include "ecodrive/qp.hpp"
#include "ecodrive/vehicle.hpp"

namespace ecodrive {

/// Discretised look-ahead window [start, start + length] with N intervals.
struct HorizonGrid {
  double start = 0.0;
  double length = 0.0;
  int N = 0;
  double ds = 0.0;
  std::vector<double> grade_force;  // per interval, averaged over the interval
  std::vector<double> E_min;        // per node
  std::vector<double> E_max;        // per node

  bool empty() const { return N == 0; }
  double position(int k) const { return start + k * ds; }
};

/// Horizon of length min(s_H_max, s_f - zeta) split into round(length / ds)
/// intervals. A zero-length remainder yields an empty grid.
HorizonGrid make_horizon(const RoadProfile& road, const VehicleParams& params, double zeta,
                         double s_H_max, double ds_nominal);

struct StageCostCoeffs {
  PowertrainKind kind = PowertrainKind::Conventional;
  double c_eg = 0.0;                    // EUR/J
  std::array<double, 4> p{0, 0, 0, 0};  // power fit
  double w1 = 0.0;                      // EUR/m per (m/s^2)^2
  double w2 = 0.0;                      // EUR/m per ((m/s^2)/m)^2
  double lambda = 0.0;                  // EUR/s

  /// Throws std::invalid_argument on negative weights or prices.
  void validate() const;
};

StageCostCoeffs make_stage_coeffs(const PowerFit& fit, double c_eg, double w1, double w2,
                                  double lambda);

/// Exact stage cost in EUR/m:
/// (c_eg p0 + lambda) / v + c_eg (p1 2E/m + p2 F + p3 F^2) + w1 a^2 + w2 j^2.
/// Throws std::domain_error if E is below the 1 m/s floor.
double stage_cost(double E, double a, double j, double F, const StageCostCoeffs& c,
                  const VehicleParams& params);

/// Energy cost part only (no time price, no comfort terms), EUR/m.
double energy_stage_cost(double E, double F, const StageCostCoeffs& c, const VehicleParams& params);

/// Affine function value = c0 + cE * E.
struct Affine {
  double c0 = 0.0;
  double cE = 0.0;
  double operator()(double E) const { return c0 + cE * E; }
};

/// Tangent of 1/sqrt(E) at E_hat. Throws std::domain_error if E_hat is not
/// above both zero and `E_floor`.
Affine linearize_sqrt_term(double E_hat, double E_floor = 0.0);

struct IntervalLimits {
  double F_cap_max = 0.0;
  Affine F_max;  // F <= min(F_cap_max, F_max(E))
  bool has_min = false;
  double F_cap_min = 0.0;
  Affine F_min;  // F >= max(F_cap_min, F_min(E)) when has_min, else F >= 0
  Affine a_max;  // force-implied acceleration bound from F_max(E)
  Affine a_min;  // force-implied lower bound including the brake floor

  double max_force(double E) const;
  double min_force(double E) const;
};

std::vector<IntervalLimits> linearized_limits(const std::vector<double>& E_hat, const ForceLimitFit& fit,
                                              const HorizonGrid& grid, const VehicleParams& params);

struct AssembleOptions {
  bool relax_comfort = false;  // drop acceleration and jerk boxes
};

/// Index map of the decision vector
/// [E_0..E_N, a_0..a_N, j_0..j_{N-1}, F_0..F_{N-1}, Fb_0..Fb_{N-1}].
struct OcpLayout {
  int N = 0;
  int E(int k) const { return k; }
  int a(int k) const { return N + 1 + k; }
  int j(int k) const { return 2 * (N + 1) + k; }
  int F(int k) const { return 2 * (N + 1) + N + k; }
  int Fb(int k) const { return 2 * (N + 1) + 2 * N + k; }
  int size() const { return 2 * (N + 1) + 3 * N; }
};

struct OcpQp {
  QpProblem qp;
  OcpLayout layout;
  std::vector<double> E_hat;
  std::vector<IntervalLimits> limits;
  double constant = 0.0;  // model cost = qp.objective(x) + constant

  double model_cost(const Eigen::VectorXd& x) const { return qp.objective(x) + constant; }
};

/// Assembles the quadratic subproblem about E_hat. Throws std::invalid_argument
/// on size mismatch and std::domain_error if some E_hat is not positive.
OcpQp assemble_qp(const HorizonGrid& grid, const StageCostCoeffs& coeffs, const ForceLimitFit& fit,
                  const std::vector<double>& E_hat, double E0, double a0, const VehicleParams& params,
                  const AssembleOptions& options = {});

/// Horizon trajectory unpacked from a decision vector.
struct HorizonPlan {
  std::vector<double> E, a, j, F, Fb;  // E, a: N+1; j, F, Fb: N
  int N() const { return static_cast<int>(j.size()); }
};

HorizonPlan unpack(const OcpLayout& layout, const Eigen::VectorXd& x);
Eigen::VectorXd pack(const HorizonPlan& plan);

/// Sum over intervals of ds * stage_cost at the left node.
double discretized_cost(const HorizonPlan& plan, const HorizonGrid& grid, const StageCostCoeffs& c,
                        const VehicleParams& params);

/// Forward-Euler travel time over the plan, ds * sum sqrt(m / 2E_k).
double plan_time(const std::vector<double>& E, double ds, const VehicleParams& params);

}  // namespace ecodrive
