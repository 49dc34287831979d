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
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "ecodrive/ocp.hpp"
#include "ecodrive/powertrain.hpp"
#include "ecodrive/qp.hpp"
#include "ecodrive/vehicle.hpp"

namespace ecodrive {

/// Fixed data of a planning run: route, vehicle, fitted powertrain, prices.
struct Scenario {
  RoadProfile road;
  VehicleParams params;
  PowertrainArtifacts powertrain;
  double c_eg = 0.0;  // EUR/J
  double w1 = 0.0;
  double w2 = 0.0;

  StageCostCoeffs coeffs(double lambda) const;
};

/// Heuristic reference: hold v_cru unless the actuator limit forbids it.
struct HeuristicProfile {
  double ds = 0.0;
  std::vector<double> s;  // route nodes
  std::vector<double> E;
  std::vector<double> v;
  std::vector<double> t;  // trapezoid-integrated arrival time at each node
  double t_f = 0.0;

  /// Interpolated heuristic energy / arrival time at arbitrary s.
  double energy_at(double s) const;
  double time_at(double s) const;
};

/// Integrates E_{k+1} = min(E_cru, E_k + ds m a_max(E_k)) over the route and
/// clips into the speed band. Throws std::invalid_argument if v_cru <= 0.
HeuristicProfile heuristic_velocity(const RoadProfile& road, const VehicleParams& params,
                                    const ForceLimitFit& limits, double v_cru, double ds);

/// Trapezoid integral of ds / v over the samples up to s_end.
double max_travel_time(const std::vector<double>& s, const std::vector<double>& v, double s_end);

struct SqpOptions {
  int max_iter = 12;
  double beta = 1.0;
  double rel_tol = 1e-6;
  int max_halvings = 3;
  QpSettings qp;
};

struct SqpIterate {
  double cost = 0.0;        // exact discretised cost of the QP solution
  double model_cost = 0.0;  // quadratic model value
  double time = 0.0;        // planned horizon travel time
  int qp_iterations = 0;
  QpStatus status = QpStatus::MaxIter;
  bool relaxed = false;
  double beta = 1.0;
};

struct HorizonSolution {
  HorizonGrid grid;
  HorizonPlan plan;
  std::vector<double> E_hat_next;  // damped linearisation trajectory
  std::vector<SqpIterate> history;
  QpSolution qp;
  bool converged = false;
  bool feasible = false;
  double cost = 0.0;
  double time = 0.0;
};

/// One QP about E_hat, with a single comfort-relaxed retry on infeasibility.
HorizonSolution rti_step(const Scenario& sc, const HorizonGrid& grid, const State& state,
                         const std::vector<double>& E_hat, double lambda, double beta = 1.0,
                         const QpSettings& qp = {}, const QpWarmStart* warm = nullptr);

/// Sequential QP at frozen horizon start until the relative cost change drops
/// below rel_tol. Step size beta halves on cost increase.
HorizonSolution solve_horizon(const Scenario& sc, const HorizonGrid& grid, const State& state,
                              const std::vector<double>& E_hat, double lambda, const SqpOptions& opt = {});

/// Linearisation trajectory for a horizon from the heuristic profile.
std::vector<double> heuristic_guess(const HeuristicProfile& hg, const HorizonGrid& grid, double E0);

/// Chord-floored secant step lambda - f / min(f', f'_max), clamped.
double costate_newton_update(double lambda, double f, double slope, double slope_floor,
                             double lambda_min, double lambda_max);

class CostateEstimator {
public:
  /// f_at_min = f(lambda_min), f_at_max = f(lambda_max) seed the chord.
  CostateEstimator(double lambda_min, double lambda_max, double f_at_min, double f_at_max);

  double lambda() const { return lambda_; }
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }
  double slope_floor() const { return slope_floor_; }
  bool pinned() const { return pinned_; }

  /// Last usable secant slope (the chord slope until one is measured).
  double slope() const { return slope_; }

  /// One modified-Newton step given f at the current lambda.
  double update(double f);

  /// Continue from an externally refined point, keeping `slope` as the
  /// current slope estimate. Clears the pin.
  void restart(double lambda, double slope);

private:
  double lambda_min_, lambda_max_;
  double slope_floor_;
  double lambda_;
  double prev_lambda_, prev_f_;
  bool has_prev_ = true;
  double slope_;
  bool pinned_ = false;
  std::optional<std::pair<double, double>> first_low_;
};

enum class MpcMode { Shrinking, Moving };

std::string_view to_string(MpcMode mode);
MpcMode mpc_mode_from_string(std::string_view name);

struct MpcConfig {
  MpcMode mode = MpcMode::Shrinking;
  int route_samples = 400;      // N over the whole route; sets ds
  double s_H_max = 0.0;         // m, 0 = whole route
  int update_stride = 1;        // dzeta = stride * ds
  double beta = 1.0;
  double v_cru = 80.0 / 3.6;
  double budget_scale = 1.0;    // t_f = budget_scale * heuristic time
  double lambda_max = 0.0;      // EUR/s, 0 = find by bisection
  bool rti = true;
  int sqp_iter = 12;
  double freeze_factor = 10.0;  // freeze lambda when s_H < freeze_factor * ds
  bool freeze_lambda = false;   // keep the initial lambda for the whole run
  std::optional<double> fixed_lambda;
  double disturbance_at = -1.0;    // fraction of route, < 0 disables
  double disturbance_dt = 0.0;     // s added to t_f
  QpSettings qp;
};

struct UpdateRecord {
  int index = 0;
  double zeta = 0.0;
  double s_H = 0.0;
  double lambda = 0.0;
  double f = 0.0;
  double t_H = 0.0;
  double t_end = 0.0;  // predicted arrival time at the horizon end
  int qp_iterations = 0;
  double objective = 0.0;
  double solve_ms = 0.0;
  QpStatus status = QpStatus::MaxIter;
  bool relaxed = false;
};

struct RunMetrics {
  double energy_cost = 0.0;       // EUR
  double drivability_cost = 0.0;  // EUR, evaluated with the reference w1, w2
  double total_cost = 0.0;
  double j_rms = 0.0;             // m/s^3
  double brake_norm = 0.0;        // kN
  double arrival_time = 0.0;      // s
  double t_f = 0.0;               // s, final budget
};

struct MpcResult {
  Trajectory trajectory;
  std::vector<UpdateRecord> log;
  RunMetrics metrics;
  HeuristicProfile heuristic;
  double lambda_max = 0.0;
  bool aborted = false;
};

/// Called once per update with the solved horizon, before the plant moves.
using PlanObserver = std::function<void(const UpdateRecord&, const HorizonSolution&)>;

/// Closed-loop run. The plant is the forward-Euler model at the route grid.
MpcResult run_mpc(const MpcConfig& cfg, const Scenario& sc, const PlanObserver& observer = {});

/// Smallest lambda whose full-route plan is within 0.1% of the plan at a
/// very high time price (the vehicle then rides its upper speed limit).
double find_lambda_max(const Scenario& sc, const HorizonGrid& grid, const State& state,
                       const std::vector<double>& E_hat, int sqp_iter);

/// Repeats full horizon solves with modified-Newton costate updates until
/// the planned time meets t_budget within rel_tol.
struct CalibratedSolve {
  double lambda = 0.0;
  HorizonSolution solution;
  int evaluations = 0;
  double slope = 0.0;  // last secant slope of f, s per EUR/s (0 if none)
};
CalibratedSolve calibrate_costate(const Scenario& sc, const HorizonGrid& grid, const State& state,
                                  const std::vector<double>& E_hat, double t_budget, double lambda_max,
                                  const SqpOptions& opt, double rel_tol = 1e-4, int max_eval = 30);

/// Planned-vs-budget time mismatch f(lambda) for a set of lambdas at one
/// horizon start (full SQP per point).
std::vector<double> costate_curve(const Scenario& sc, const HorizonGrid& grid, const State& state,
                                  const std::vector<double>& E_hat, double t_budget,
                                  const std::vector<double>& lambdas, const SqpOptions& opt);

/// Builds the closed-loop style record of a horizon plan.
Trajectory plan_trajectory(const Scenario& sc, const HorizonGrid& grid, const HorizonPlan& plan, double t0);

/// Trajectory that tracks the heuristic profile exactly.
Trajectory heuristic_trajectory(const Scenario& sc, const HeuristicProfile& hg);

/// Space-domain RMS of jerk; `time_domain` converts j_space * v first.
double rms_jerk(const Trajectory& traj, bool time_domain = true);

/// Cost decomposition of a trajectory with the given comfort weights.
RunMetrics evaluate_metrics(const Scenario& sc, const Trajectory& traj, double w1, double w2);

}  // namespace ecodrive
