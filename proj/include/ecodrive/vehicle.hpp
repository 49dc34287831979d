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

#include <cstddef>
#include <vector>

namespace ecodrive {

/// Longitudinal vehicle parameters. All quantities are SI.
///
/// Jerk bounds are space-domain (d a / d s, in (m/s^2)/m); a time-domain
/// jerk bound J at speed v corresponds to J / v here.
struct VehicleParams {
  double mass = 40000.0;          // kg
  double frontal_area = 10.0;     // m^2
  double drag_coeff = 0.5;        // -
  double air_density = 1.29;      // kg/m^3
  double rolling_coeff = 0.006;   // -
  double gravity = 9.81;          // m/s^2
  double wheel_radius = 0.5;      // m
  double final_gear_ratio = 3.0;  // -
  /// Transmission ratio per gear, gear 1 first. Strictly decreasing.
  std::vector<double> transmission_ratios{1.0};
  double accel_lo = -1.5;  // m/s^2
  double accel_hi = 1.5;   // m/s^2
  double jerk_lo = -0.045;
  double jerk_hi = 0.045;
  double brake_floor = -200000.0;  // N, minimum total braking force

  /// Throws std::invalid_argument on the first violated invariant.
  void validate() const;

  /// Lumped drag factor rho * c_d * A_f / 2, so that F_air = c_a * v^2.
  double drag_factor() const { return 0.5 * air_density * drag_coeff * frontal_area; }

  int gear_count() const { return static_cast<int>(transmission_ratios.size()); }

  /// Speed-to-shaft ratio R(gear) = r_w / (r_tg(gear) * r_fg), gear is 1-based.
  double gear_radius(int gear) const;
};

/// Heavy truck from the reference scenario with a 12-speed gearbox.
VehicleParams truck_params();

/// Same chassis with a single-speed electric driveline.
VehicleParams electric_truck_params();

struct RoadSample {
  double position = 0.0;  // m
  double grade = 0.0;     // rad
  double v_min_road = 0.0;
  double v_max_road = 0.0;
  double v_min_traffic = 0.0;
  double v_max_traffic = 0.0;

  double v_min() const;
  double v_max() const;
};

/// Distance-gridded road description. Grade and speed limits are
/// piecewise constant: sample i governs [s_i, s_{i+1}).
class RoadProfile {
public:
  RoadProfile() = default;
  explicit RoadProfile(std::vector<RoadSample> samples);

  const std::vector<RoadSample>& samples() const { return samples_; }
  double length() const { return samples_.empty() ? 0.0 : samples_.back().position; }

  double grade_at(double s) const;
  double v_min_at(double s) const;
  double v_max_at(double s) const;

  /// Average of the grade force m g (sin a + c_r cos a) over [s0, s1].
  double mean_grade_force(double s0, double s1, double mass, double gravity,
                          double rolling_coeff) const;

  /// Sub-route [s0, s1] re-based to start at 0. Throws std::out_of_range.
  RoadProfile slice(double s0, double s1) const;

private:
  std::size_t interval_index(double s) const;

  std::vector<RoadSample> samples_;
};

struct State {
  double t = 0.0;  // s
  double E = 0.0;  // J
  double a = 0.0;  // m/s^2
};

struct Control {
  double j = 0.0;      // (m/s^2)/m
  double F_brk = 0.0;  // N
};

struct TrajectorySample {
  double s = 0.0;
  double t = 0.0;
  double E = 0.0;
  double v = 0.0;
  double a = 0.0;
  double j = 0.0;
  double F = 0.0;
  double F_brk = 0.0;
  int gear = 0;
};

struct Trajectory {
  double ds = 0.0;
  std::vector<TrajectorySample> samples;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
};

struct ResistiveForces {
  double air = 0.0;    // N
  double grade = 0.0;  // N, includes rolling resistance
};

struct AccelLimits {
  double a_min = 0.0;
  double a_max = 0.0;
  bool feasible() const { return a_min <= a_max; }
};

/// E = m v^2 / 2. Throws std::domain_error for v <= 0.
double kinetic_energy(double v, const VehicleParams& params);

/// Inverse of kinetic_energy. Throws std::domain_error for E <= 0.
double speed_of(double E, const VehicleParams& params);

/// dt/ds = sqrt(m / (2E)). Throws std::domain_error for E <= 0.
double time_slope(double E, const VehicleParams& params);

/// Grade force m g (sin a + c_r cos a) for a given road angle.
double grade_force(double grade, const VehicleParams& params);

/// Throws std::out_of_range if s is outside the route.
ResistiveForces resistive_forces(double E, double s, const RoadProfile& profile,
                                 const VehicleParams& params);

/// Traction force that realises acceleration a: F = m a + c_a E - F_brk + F_alpha.
double traction_force(double a, double E, double F_brk, double F_alpha,
                      const VehicleParams& params);

/// Acceleration produced by traction force F (inverse of traction_force).
double accel_of(double F, double E, double F_brk, double F_alpha,
                const VehicleParams& params);

/// Comfort- and force-limited acceleration band at kinetic energy E given the
/// traction force envelope [F_min, F_max] at that energy.
AccelLimits accel_limits(double E, double F_alpha, double F_min, double F_max,
                         const VehicleParams& params);

/// Kinetic energy floor m * max(v, 1 m/s)^2 / 2.
double energy_floor(double v_min, const VehicleParams& params);

}  // namespace ecodrive
