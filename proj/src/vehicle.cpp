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
#include "ecodrive/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ecodrive {

namespace {

void require(bool condition, const char* what) {
  if (!condition) throw std::invalid_argument(what);
}

}  // namespace

void VehicleParams::validate() const {
  require(mass > 0.0, "vehicle mass must be positive");
  require(frontal_area > 0.0, "frontal area must be positive");
  require(drag_coeff > 0.0, "drag coefficient must be positive");
  require(air_density > 0.0, "air density must be positive");
  require(rolling_coeff >= 0.0, "rolling coefficient must be non-negative");
  require(gravity > 0.0, "gravity must be positive");
  require(wheel_radius > 0.0, "wheel radius must be positive");
  require(final_gear_ratio > 0.0, "final gear ratio must be positive");
  require(!transmission_ratios.empty(), "at least one transmission ratio is required");
  for (std::size_t i = 0; i < transmission_ratios.size(); ++i) {
    require(transmission_ratios[i] > 0.0, "transmission ratios must be positive");
    if (i > 0) {
      require(transmission_ratios[i] < transmission_ratios[i - 1],
              "transmission ratios must be strictly decreasing with gear");
    }
  }
  require(accel_lo < 0.0 && 0.0 < accel_hi, "acceleration bounds must bracket zero");
  require(jerk_lo < 0.0 && 0.0 < jerk_hi, "jerk bounds must bracket zero");
  require(brake_floor <= 0.0, "brake floor must be non-positive");
}

double VehicleParams::gear_radius(int gear) const {
  if (gear < 1 || gear > gear_count()) {
    throw std::out_of_range("gear " + std::to_string(gear) + " outside 1.." +
                            std::to_string(gear_count()));
  }
  return wheel_radius / (transmission_ratios[gear - 1] * final_gear_ratio);
}

VehicleParams truck_params() {
  VehicleParams p;
  p.transmission_ratios = {11.32, 9.16, 7.19, 5.82, 4.58, 3.70,
                           3.06,  2.47, 1.94, 1.57, 1.23, 1.00};
  p.brake_floor = -200000.0;
  return p;
}

VehicleParams electric_truck_params() {
  VehicleParams p;
  p.transmission_ratios = {5.5};
  p.brake_floor = -150000.0;
  return p;
}

double RoadSample::v_min() const { return std::max(v_min_road, v_min_traffic); }
double RoadSample::v_max() const { return std::min(v_max_road, v_max_traffic); }

RoadProfile::RoadProfile(std::vector<RoadSample> samples) : samples_(std::move(samples)) {
  if (samples_.size() < 2) throw std::invalid_argument("road profile needs at least two samples");
  if (samples_.front().position != 0.0) {
    throw std::invalid_argument("road profile must start at position 0");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& r = samples_[i];
    if (!std::isfinite(r.position) || !std::isfinite(r.grade)) {
      throw std::invalid_argument("non-finite road sample " + std::to_string(i));
    }
    if (i > 0 && !(r.position > samples_[i - 1].position)) {
      throw std::invalid_argument("road positions must be strictly increasing at sample " +
                                  std::to_string(i));
    }
    if (!(r.v_min() > 0.0)) {
      throw std::invalid_argument("minimum speed must be positive at sample " + std::to_string(i));
    }
    if (!(r.v_min() < r.v_max())) {
      throw std::invalid_argument("empty speed band at sample " + std::to_string(i));
    }
  }
}

std::size_t RoadProfile::interval_index(double s) const {
  if (samples_.size() < 2 || !(s >= 0.0) || s > length()) {
    throw std::out_of_range("position " + std::to_string(s) + " m outside the route");
  }
  auto it = std::upper_bound(samples_.begin(), samples_.end(), s,
                             [](double x, const RoadSample& r) { return x < r.position; });
  auto idx = static_cast<std::size_t>(std::distance(samples_.begin(), it)) - 1;
  return std::min(idx, samples_.size() - 2);
}

double RoadProfile::grade_at(double s) const { return samples_[interval_index(s)].grade; }
double RoadProfile::v_min_at(double s) const { return samples_[interval_index(s)].v_min(); }
double RoadProfile::v_max_at(double s) const { return samples_[interval_index(s)].v_max(); }

RoadProfile RoadProfile::slice(double s0, double s1) const {
  if (!(s0 >= 0.0) || !(s1 > s0) || s1 > length()) throw std::out_of_range("slice outside the route");
  std::vector<RoadSample> out;
  RoadSample first = samples_[interval_index(s0)];
  first.position = 0.0;
  out.push_back(first);
  for (const auto& r : samples_) {
    if (r.position > s0 && r.position < s1) {
      out.push_back(r);
      out.back().position -= s0;
    }
  }
  RoadSample last = samples_[interval_index(s1)];
  last.position = s1 - s0;
  out.push_back(last);
  return RoadProfile(std::move(out));
}

double RoadProfile::mean_grade_force(double s0, double s1, double mass, double gravity,
                                     double rolling_coeff) const {
  auto force = [&](double grade) {
    return mass * gravity * (std::sin(grade) + rolling_coeff * std::cos(grade));
  };
  if (!(s1 > s0)) return force(grade_at(s0));
  std::size_t i = interval_index(s0);
  const std::size_t last = interval_index(s1);
  double integral = 0.0;
  double lo = s0;
  for (; i <= last; ++i) {
    const double hi = std::min(s1, samples_[i + 1].position);
    if (hi > lo) integral += force(samples_[i].grade) * (hi - lo);
    lo = hi;
  }
  return integral / (s1 - s0);
}

double kinetic_energy(double v, const VehicleParams& params) {
  if (!(v > 0.0)) throw std::domain_error("kinetic_energy requires positive speed");
  return 0.5 * params.mass * v * v;
}

double speed_of(double E, const VehicleParams& params) {
  if (!(E > 0.0)) throw std::domain_error("speed_of requires positive kinetic energy");
  return std::sqrt(2.0 * E / params.mass);
}

double time_slope(double E, const VehicleParams& params) {
  if (!(E > 0.0)) throw std::domain_error("time_slope requires positive kinetic energy");
  return std::sqrt(params.mass / (2.0 * E));
}

double grade_force(double grade, const VehicleParams& params) {
  return params.mass * params.gravity *
         (std::sin(grade) + params.rolling_coeff * std::cos(grade));
}

ResistiveForces resistive_forces(double E, double s, const RoadProfile& profile,
                                 const VehicleParams& params) {
  if (!(E > 0.0)) throw std::domain_error("resistive_forces requires positive kinetic energy");
  ResistiveForces out;
  out.air = params.drag_factor() * 2.0 * E / params.mass;
  out.grade = grade_force(profile.grade_at(s), params);
  return out;
}

double traction_force(double a, double E, double F_brk, double F_alpha,
                      const VehicleParams& params) {
  return params.mass * a + params.drag_factor() * 2.0 * E / params.mass - F_brk + F_alpha;
}

double accel_of(double F, double E, double F_brk, double F_alpha, const VehicleParams& params) {
  return (F + F_brk - params.drag_factor() * 2.0 * E / params.mass - F_alpha) / params.mass;
}

AccelLimits accel_limits(double E, double F_alpha, double F_min, double F_max,
                         const VehicleParams& params) {
  const double air = params.drag_factor() * 2.0 * E / params.mass;
  AccelLimits out;
  out.a_min = std::max(params.accel_lo, (F_min - air + params.brake_floor - F_alpha) / params.mass);
  out.a_max = std::min(params.accel_hi, (F_max - air - F_alpha) / params.mass);
  return out;
}

double energy_floor(double v_min, const VehicleParams& params) {
  const double v = std::max(v_min, 1.0);
  return 0.5 * params.mass * v * v;
}

}  // namespace ecodrive
