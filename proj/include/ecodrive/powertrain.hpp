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

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ecodrive/vehicle.hpp"

namespace ecodrive {

enum class PowertrainKind { Conventional, Electric };

std::string_view to_string(PowertrainKind kind);
PowertrainKind powertrain_kind_from_string(std::string_view name);

/// Generator settings for a synthetic actuator map.
struct ActuatorSpec {
  PowertrainKind kind = PowertrainKind::Conventional;
  double rated_power = 330e3;  // W
  double omega_idle = 63.0;    // rad/s
  double omega_max = 230.0;    // rad/s
  double peak_torque = 2500.0; // Nm
  double brake_torque = 3000.0;  // Nm, CV additional brake capacity at omega_max
  int omega_points = 120;
  int torque_points = 120;
};

/// Fuel-map coefficients of the Willans-line model
/// P = e0(w) + e1 M w with e0(w) = k0 + k1 w + k3 w^3 (CV), or the loss model
/// P = M w + k0 + k1 w^2 + k2 M^2 (EV).
struct ActuatorModelCoeffs {
  double k0 = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double e1 = 0.0;
};

/// Static actuator map on a rectangular (omega, torque) grid.
///
/// `power(i, j)` is the internal power drawn from the energy store at
/// (omega[i], torque[j]): fuel-chemical power for a CV, electric power for an
/// EV. Entries outside the torque envelope still hold the model value so that
/// bilinear interpolation near the envelope stays well defined.
struct ActuatorMap {
  PowertrainKind kind = PowertrainKind::Conventional;
  double omega_idle = 0.0;
  double omega_max = 0.0;
  double heating_value = 0.0;  // J/kg, CV only
  std::vector<double> omega;
  std::vector<double> torque;
  Eigen::MatrixXd power;
  std::vector<double> torque_max;    // per omega
  std::vector<double> torque_min;    // per omega, EV generating limit (<= 0)
  std::vector<double> torque_brake;  // per omega, CV additional brake (<= 0)
  ActuatorModelCoeffs coeffs;

  double internal_power(double w, double M) const;
  double max_torque(double w) const;
  double min_torque(double w) const;
  double additional_brake_torque(double w) const;
  /// Output over input power in motoring, input over output when generating.
  double efficiency(double w, double M) const;
};

/// Builds the synthetic map. Throws std::invalid_argument on bad ranges.
ActuatorMap synth_actuator_map(const ActuatorSpec& spec);

/// Wheel-side view of an actuator map through the gearbox.
class WheelModel {
public:
  WheelModel(ActuatorMap map, VehicleParams params);

  const ActuatorMap& map() const { return map_; }
  const VehicleParams& params() const { return params_; }
  int gear_count() const { return params_.gear_count(); }

  /// Kinetic-energy window in which the gear keeps omega within [idle, max].
  bool in_window(double E, int gear) const;
  double window_lo(int gear) const;
  double window_hi(int gear) const;

  double max_force(double E, int gear) const;
  double min_force(double E, int gear) const;
  /// CV additional-brake force (<= 0); zero for an EV.
  double brake_force(double E, int gear) const;
  double power(double E, double F, int gear) const;

private:
  ActuatorMap map_;
  VehicleParams params_;
};

struct GridSpec {
  int energy_points = 200;
  int force_points = 200;
  double v_lo = 1.0;   // m/s
  double v_hi = 0.0;   // m/s, 0 picks the top-gear maximum speed
};

/// Per-gear wheel-level tables on a common (E, F) grid. NaN marks entries
/// outside a gear's speed window or torque envelope.
struct WheelTables {
  PowertrainKind kind = PowertrainKind::Conventional;
  int gear_count = 0;
  std::vector<double> energy;
  std::vector<double> force;
  std::vector<Eigen::MatrixXd> power;       // [gear-1](iE, iF)
  std::vector<std::vector<double>> f_max;   // [gear-1][iE]
  std::vector<std::vector<double>> f_min;   // [gear-1][iE]
  std::vector<std::vector<double>> f_brake; // [gear-1][iE]
  double brake_floor = 0.0;
};

/// Throws std::invalid_argument if some gear has no grid point in its window.
WheelTables wheel_transform(const WheelModel& model, const GridSpec& grid = {});

/// Offline gear choice over the (E, total force) grid.
struct GearMap {
  PowertrainKind kind = PowertrainKind::Conventional;
  std::vector<double> energy;
  std::vector<double> force;
  /// Row-major [iE * force.size() + iF]; 0 marks an infeasible cell.
  std::vector<int> gear;
  std::vector<double> f_max;      // F_gamma_max(E)
  std::vector<double> f_min;      // F_gamma_min(E)
  std::vector<double> f_add_min;  // F_A_min(E)

  int gear_at(std::size_t iE, std::size_t iF) const { return gear[iE * force.size() + iF]; }
  bool feasible(std::size_t iE, std::size_t iF) const { return gear_at(iE, iF) != 0; }

  /// Nearest feasible corner of the enclosing cell; 0 if none or off-grid.
  int lookup(double E, double F_total) const;
  /// Linear interpolation of the tabulated traction limits.
  double max_force_at(double E) const;
  double min_force_at(double E) const;
};

GearMap optimise_gear_map(const WheelTables& tables);

/// Gear-optimal internal power at an arbitrary (E, F >= 0) point, by
/// enumeration over gears. Returns NaN where no gear can deliver F.
double optimal_power(const WheelModel& model, double E, double F);

/// Traction force envelope over all gears at E: {min, max}.
std::array<double, 2> force_envelope(const WheelModel& model, double E);

struct PowerSample {
  double v = 0.0;
  double F = 0.0;
  double P = 0.0;
};

/// P ~ p0 + p1 v^3 + p2 v F (+ p3 v F^2 for an EV), all p_i >= 0.
struct PowerFit {
  PowertrainKind kind = PowertrainKind::Conventional;
  std::array<double, 4> p{0.0, 0.0, 0.0, 0.0};
  double v_lo = 0.0;
  double v_hi = 0.0;
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  std::size_t sample_count = 0;

  double evaluate(double v, double F) const {
    return p[0] + p[1] * v * v * v + p[2] * v * F + p[3] * v * F * F;
  }
};

/// Non-negative least squares min |A x - b|, x >= 0 (Lawson-Hanson active set).
Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// Samples the gear-optimal power over a speed band. A CV uses only the
/// traction region F in (0, F_max]; an EV spans [F_min, F_max].
std::vector<PowerSample> sample_optimal_power(const WheelModel& model, double v_lo, double v_hi,
                                              int speed_points = 40, int force_points = 40);

/// Throws std::runtime_error when a basis column is unidentifiable.
PowerFit fit_power_poly(const std::vector<PowerSample>& samples, PowertrainKind kind);

/// Inner approximation min{F_cap_max, y0 + y1 / v} of the maximum traction
/// force and, for an EV, max{F_cap_min, x0 + x1 / v} of the minimum one.
struct ForceLimitFit {
  double y0 = 0.0;
  double y1 = 0.0;
  double x0 = 0.0;
  double x1 = 0.0;
  double f_cap_max = 0.0;
  double f_cap_min = 0.0;
  double v0 = 0.0;
  double v_max = 0.0;
  bool has_min = false;

  double max_force_at_speed(double v) const;
  double min_force_at_speed(double v) const;
  double max_force(double E, double mass) const;
  double min_force(double E, double mass) const;
};

struct LimitCurve {
  std::vector<double> speed;
  std::vector<double> force;
};

/// Maximises the integral of y0 + y1/v over [v0, v_max] subject to
/// y0 + y1/v_i <= bound_i and y1 >= 0. Vertices of the feasible set are
/// supporting lines of the lower convex hull of (1/v_i, bound_i), so only hull
/// edges and the horizontal line through min(bound) are candidates.
/// Returns {y0, y1}.
std::array<double, 2> solve_inner_lp(const std::vector<double>& speed,
                                     const std::vector<double>& bound, double v0, double v_max);

/// Throws std::runtime_error if the curves are empty on [v0, v_max].
ForceLimitFit fit_force_limits(const LimitCurve& max_curve, const LimitCurve* min_curve,
                               double v0, double v_max);

/// Samples the gear envelope on `points` speeds in [v_lo, v_hi].
LimitCurve max_force_curve(const WheelModel& model, double v_lo, double v_hi, int points);
LimitCurve min_force_curve(const WheelModel& model, double v_lo, double v_hi, int points);

/// Everything the online layer needs from the offline powertrain stage.
struct PowertrainArtifacts {
  PowertrainKind kind = PowertrainKind::Conventional;
  PowerFit power;
  ForceLimitFit limits;
  GearMap gears;
};

struct PowertrainSetup {
  ActuatorSpec actuator;
  GridSpec grid;
  double fit_v_lo = 12.5;  // m/s
  double fit_v_hi = 26.4;  // m/s
  double limit_v0 = 0.0;   // m/s, 0 picks 8 km/h (CV) or 55 km/h (EV)
  int limit_points = 400;
};

ActuatorSpec default_actuator(PowertrainKind kind);

/// Map synthesis, gear optimisation and both fits in one pass.
PowertrainArtifacts build_powertrain(const PowertrainSetup& setup, const VehicleParams& params);

}  // namespace ecodrive
