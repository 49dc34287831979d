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
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "ecodrive/powertrain.hpp"
#include "gear_enumerator.hpp"

using namespace ecodrive;

namespace {

// Flat-torque map on omega in [50, 200] with M_max = 2000 Nm.
ActuatorMap flat_map() {
  ActuatorMap m;
  m.kind = PowertrainKind::Conventional;
  m.omega_idle = 50.0;
  m.omega_max = 200.0;
  m.omega = {50.0, 100.0, 150.0, 200.0};
  m.torque = {-1000.0, 0.0, 1000.0, 2000.0};
  m.power = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 1; j < 4; ++j) m.power(i, j) = 5000.0 + 2.0 * m.omega[i] * m.torque[j];
  }
  m.torque_max.assign(4, 2000.0);
  m.torque_min.assign(4, 0.0);
  m.torque_brake.assign(4, -1000.0);
  return m;
}

VehicleParams three_gear_params() {
  auto p = truck_params();
  p.transmission_ratios = {9.0, 5.0, 3.0};
  return p;
}

}  // namespace

TEST(ActuatorMap, ConventionalEfficiencyShape) {
  const auto map = synth_actuator_map(default_actuator(PowertrainKind::Conventional));
  const double w_lo = map.omega_idle;
  const double w_mid = 0.5 * map.omega_max;
  const double eta_low = map.efficiency(w_lo, 0.05 * map.max_torque(w_lo));
  const double eta_high = map.efficiency(w_mid, 0.9 * map.max_torque(w_mid));
  EXPECT_LT(eta_low, eta_high);
  EXPECT_GT(eta_high, 0.35);
  EXPECT_LT(eta_high, 0.46);
}

TEST(ActuatorMap, WillansLineIsExact) {
  const auto map = synth_actuator_map(default_actuator(PowertrainKind::Conventional));
  const double e1 = map.coeffs.e1;
  for (std::size_t i = 0; i < map.omega.size(); i += 7) {
    const double w = map.omega[i];
    for (double M1 : {0.0, 300.0, 812.5}) {
      for (double M2 : {100.0, 1500.0, 2400.0}) {
        const double diff = map.internal_power(w, M2) - map.internal_power(w, M1);
        EXPECT_NEAR(diff, e1 * w * (M2 - M1), 1e-9 * std::abs(e1 * w * M2));
      }
    }
  }
}

TEST(ActuatorMap, ElectricRecuperates) {
  const auto map = synth_actuator_map(default_actuator(PowertrainKind::Electric));
  const double w = 0.5 * map.omega_max;
  EXPECT_LT(map.internal_power(w, 0.5 * map.min_torque(w)), 0.0);
  EXPECT_GT(map.internal_power(w, 0.5 * map.max_torque(w)), 0.0);
  for (std::size_t i = 1; i < map.omega.size(); ++i) {
    EXPECT_LE(map.torque_min[i], 0.0);
    EXPECT_GE(map.torque_max[i], 0.0);
  }
}

TEST(ActuatorMap, MotoringPowerIncreasesWithTorque) {
  for (auto kind : {PowertrainKind::Conventional, PowertrainKind::Electric}) {
    const auto map = synth_actuator_map(default_actuator(kind));
    for (std::size_t i = 0; i < map.omega.size(); i += 5) {
      const double w = std::max(map.omega[i], 1.0);
      double prev = map.internal_power(w, 0.0);
      for (double f = 0.1; f <= 1.0; f += 0.1) {
        const double cur = map.internal_power(w, f * map.max_torque(w));
        EXPECT_GT(cur, prev);
        prev = cur;
      }
    }
  }
}

TEST(ActuatorMap, RejectsBadRanges) {
  auto spec = default_actuator(PowertrainKind::Conventional);
  spec.omega_idle = 300.0;
  EXPECT_THROW(synth_actuator_map(spec), std::invalid_argument);
  spec = default_actuator(PowertrainKind::Conventional);
  spec.rated_power = -1.0;
  EXPECT_THROW(synth_actuator_map(spec), std::invalid_argument);
}

TEST(WheelTransform, SingleGearForceAndWindow) {
  auto p = truck_params();
  p.wheel_radius = 0.5;
  p.final_gear_ratio = 5.0;
  p.transmission_ratios = {1.0};
  WheelModel model(flat_map(), p);
  EXPECT_NEAR(p.gear_radius(1), 0.1, 1e-15);
  EXPECT_NEAR(model.window_lo(1), 500e3, 1e-6);
  for (double E : {0.6e6, 1.0e6, 3.0e6}) EXPECT_NEAR(model.max_force(E, 1), 20000.0, 1e-9);
  EXPECT_TRUE(std::isnan(model.max_force(0.4e6, 1)));
}

TEST(WheelTransform, HigherGearShiftsWindowUp) {
  const auto p = truck_params();
  WheelModel model(synth_actuator_map(default_actuator(PowertrainKind::Conventional)), p);
  for (int g = 2; g <= p.gear_count(); ++g) {
    EXPECT_GT(model.window_lo(g), model.window_lo(g - 1));
    EXPECT_GT(model.window_hi(g), model.window_hi(g - 1));
  }
}

TEST(WheelTransform, EmptyGearWindowIsAnError) {
  auto p = truck_params();
  p.transmission_ratios = {1.0};
  WheelModel model(flat_map(), p);
  GridSpec grid;
  grid.energy_points = 20;
  grid.force_points = 20;
  grid.v_lo = 40.0;
  grid.v_hi = 60.0;
  EXPECT_THROW(wheel_transform(model, grid), std::invalid_argument);
}

TEST(GearMap, SingleGearIsIdentity) {
  auto p = truck_params();
  p.transmission_ratios = {1.0};
  p.final_gear_ratio = 5.0;
  WheelModel model(flat_map(), p);
  GridSpec grid{20, 20, 4.0, 20.0};
  const auto gm = optimise_gear_map(wheel_transform(model, grid));
  for (std::size_t i = 0; i < gm.energy.size(); ++i) {
    for (std::size_t k = 0; k < gm.force.size(); ++k) {
      const int g = gm.gear_at(i, k);
      EXPECT_TRUE(g == 0 || g == 1);
    }
  }
}

TEST(GearMap, ElectricIsIdentity) {
  const auto p = electric_truck_params();
  WheelModel model(synth_actuator_map(default_actuator(PowertrainKind::Electric)), p);
  const auto gm = optimise_gear_map(wheel_transform(model, GridSpec{30, 30}));
  int ones = 0;
  for (int g : gm.gear) {
    EXPECT_TRUE(g == 0 || g == 1);
    ones += g;
  }
  EXPECT_GT(ones, 0);
}

TEST(GearMap, MatchesEnumeratorOnThreeGears) {
  const auto p = three_gear_params();
  WheelModel model(synth_actuator_map(default_actuator(PowertrainKind::Conventional)), p);
  const auto tables = wheel_transform(model, GridSpec{20, 20, 3.0, 0.0});
  const auto gm = optimise_gear_map(tables);
  int regimes[3] = {0, 0, 0};
  for (std::size_t i = 0; i < gm.energy.size(); ++i) {
    for (std::size_t k = 0; k < gm.force.size(); ++k) {
      ASSERT_EQ(gm.gear_at(i, k), testing_support::enumerate_gear(tables, i, k)) << i << "," << k;
      if (gm.gear_at(i, k) == 0) continue;
      const double F = gm.force[k];
      regimes[F >= 0.0 ? 0 : (F >= gm.f_add_min[i] ? 1 : 2)]++;
    }
  }
  EXPECT_GT(regimes[0], 0);
  EXPECT_GT(regimes[1], 0);
  EXPECT_GT(regimes[2], 0);
}

TEST(GearMap, OptimalPowerInPositiveRegion) {
  const auto p = three_gear_params();
  WheelModel model(synth_actuator_map(default_actuator(PowertrainKind::Conventional)), p);
  const auto tables = wheel_transform(model, GridSpec{25, 25, 3.0, 0.0});
  const auto gm = optimise_gear_map(tables);
  for (std::size_t i = 0; i < gm.energy.size(); ++i) {
    for (std::size_t k = 0; k < gm.force.size(); ++k) {
      const int g = gm.gear_at(i, k);
      if (g == 0 || gm.force[k] < 0.0) continue;
      const double best = tables.power[g - 1](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      for (int h = 0; h < 3; ++h) {
        const double ph = tables.power[h](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        if (!std::isnan(ph)) EXPECT_LE(best, ph);
      }
    }
  }
}

TEST(GearMap, TieGoesToLowerGear) {
  // Two identical gears: every tie must resolve to gear 1.
  auto p = truck_params();
  p.transmission_ratios = {2.0, 2.0 - 1e-15};
  WheelModel model(flat_map(), p);
  auto tables = wheel_transform(model, GridSpec{10, 10, 3.0, 10.0});
  tables.power[1] = tables.power[0];
  tables.f_max[1] = tables.f_max[0];
  tables.f_brake[1] = tables.f_brake[0];
  const auto gm = optimise_gear_map(tables);
  for (int g : gm.gear) EXPECT_TRUE(g == 0 || g == 1);
}

TEST(Nnls, MatchesUnconstrainedWhenInterior) {
  Eigen::MatrixXd A(4, 2);
  A << 1, 0, 0, 1, 1, 1, 2, 1;
  Eigen::VectorXd x_true(2);
  x_true << 1.5, 0.5;
  const Eigen::VectorXd x = nonnegative_least_squares(A, A * x_true);
  EXPECT_NEAR(x(0), 1.5, 1e-12);
  EXPECT_NEAR(x(1), 0.5, 1e-12);
}

TEST(Nnls, ClampsNegativeComponent) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd b(3);
  b << 1.0, -2.0, 3.0;
  const Eigen::VectorXd x = nonnegative_least_squares(A, b);
  EXPECT_DOUBLE_EQ(x(0), 1.0);
  EXPECT_DOUBLE_EQ(x(1), 0.0);
  EXPECT_DOUBLE_EQ(x(2), 3.0);
}

TEST(PowerFit, RecoversModelClassMember) {
  std::vector<PowerSample> samples;
  for (double v = 12.0; v <= 26.0; v += 1.0) {
    for (double F = 1000.0; F <= 30000.0; F += 2900.0) {
      samples.push_back({v, F, 2000.0 + 0.8e-3 * 1e3 * v * v * v + 2.1 * v * F});
    }
  }
  const auto fit = fit_power_poly(samples, PowertrainKind::Conventional);
  EXPECT_NEAR(fit.p[0] / 2000.0, 1.0, 1e-6);
  EXPECT_NEAR(fit.p[1] / 0.8, 1.0, 1e-6);
  EXPECT_NEAR(fit.p[2] / 2.1, 1.0, 1e-6);
  EXPECT_EQ(fit.p[3], 0.0);
  EXPECT_LT(fit.max_rel_error, 1e-9);
}

TEST(PowerFit, ZeroForceIsUnidentifiable) {
  std::vector<PowerSample> samples;
  for (double v = 12.0; v <= 26.0; v += 1.0) samples.push_back({v, 0.0, 1000.0 + v * v * v});
  EXPECT_THROW(fit_power_poly(samples, PowertrainKind::Conventional), std::runtime_error);
  EXPECT_THROW(fit_power_poly(samples, PowertrainKind::Electric), std::runtime_error);
}

TEST(PowerFit, SyntheticConventionalResidual) {
  const auto p = truck_params();
  WheelModel model(synth_actuator_map(default_actuator(PowertrainKind::Conventional)), p);
  const auto fit = fit_power_poly(sample_optimal_power(model, 12.5, 26.4), PowertrainKind::Conventional);
  for (double c : fit.p) EXPECT_GE(c, 0.0);
  EXPECT_LE(fit.max_rel_error, 0.05);
  EXPECT_GT(fit.p[2], 0.0);
}

TEST(PowerFit, SyntheticElectricRecuperates) {
  const auto p = electric_truck_params();
  WheelModel model(synth_actuator_map(default_actuator(PowertrainKind::Electric)), p);
  const auto fit = fit_power_poly(sample_optimal_power(model, 12.5, 26.4), PowertrainKind::Electric);
  for (double c : fit.p) EXPECT_GE(c, 0.0);
  EXPECT_GT(fit.p[3], 0.0);
  const double v = 20.0;
  const auto env = force_envelope(model, kinetic_energy(v, p));
  EXPECT_LT(optimal_power(model, kinetic_energy(v, p), 0.5 * env[0]), 0.0);
  EXPECT_LT(fit.evaluate(v, 0.5 * env[0]), 0.0);
}

TEST(ForceLimits, ModelClassMemberIsRecovered) {
  std::vector<double> v, b;
  for (double s = 3.0; s <= 30.0; s += 0.25) {
    v.push_back(s);
    b.push_back(4000.0 + 250000.0 / s);
  }
  const auto y = solve_inner_lp(v, b, 3.0, 30.0);
  EXPECT_NEAR(y[0], 4000.0, 1e-6);
  EXPECT_NEAR(y[1], 250000.0, 1e-5);
}

TEST(ForceLimits, ConstantLimit) {
  std::vector<double> v, b;
  for (double s = 3.0; s <= 30.0; s += 0.5) {
    v.push_back(s);
    b.push_back(12000.0);
  }
  const auto y = solve_inner_lp(v, b, 3.0, 30.0);
  EXPECT_DOUBLE_EQ(y[0], 12000.0);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
}

TEST(ForceLimits, AgreesWithPairScan) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> noise(0.0, 3000.0);
  std::vector<double> v, b;
  for (int i = 0; i < 120; ++i) {
    const double s = 2.0 + 0.2 * i;
    v.push_back(s);
    b.push_back(std::min(60000.0, 350000.0 / s) + noise(rng));
  }
  const double v0 = 2.0;
  const double vm = v.back();
  const auto y = solve_inner_lp(v, b, v0, vm);
  auto obj = [&](double y0, double y1) { return y0 * (vm - v0) + y1 * std::log(vm / v0); };
  double best = obj(*std::min_element(b.begin(), b.end()), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      const double y1 = (b[i] - b[j]) / (1.0 / v[i] - 1.0 / v[j]);
      if (y1 < 0.0) continue;
      const double y0 = b[i] - y1 / v[i];
      bool ok = true;
      for (std::size_t k = 0; k < v.size() && ok; ++k) ok = y0 + y1 / v[k] <= b[k] + 1e-6;
      if (ok) best = std::max(best, obj(y0, y1));
    }
  }
  EXPECT_NEAR(obj(y[0], y[1]) / best, 1.0, 1e-9);
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_LE(y[0] + y[1] / v[k], b[k] + 1e-9);
}

TEST(ForceLimits, InnerApproximationOfSyntheticEnvelopes) {
  for (auto kind : {PowertrainKind::Conventional, PowertrainKind::Electric}) {
    PowertrainSetup setup;
    setup.actuator = default_actuator(kind);
    const auto params = kind == PowertrainKind::Conventional ? truck_params() : electric_truck_params();
    const auto art = build_powertrain(setup, params);
    WheelModel model(synth_actuator_map(setup.actuator), params);
    const auto& lim = art.limits;
    EXPECT_GE(lim.y1, 0.0);
    EXPECT_LE(lim.x1, 0.0);
    const auto upper = max_force_curve(model, lim.v0, lim.v_max, 400);
    for (std::size_t i = 0; i < upper.speed.size(); ++i) {
      EXPECT_GE(upper.force[i] - lim.max_force_at_speed(upper.speed[i]), -1e-9) << upper.speed[i];
    }
    if (kind == PowertrainKind::Electric) {
      EXPECT_TRUE(lim.has_min);
      const auto lower = min_force_curve(model, lim.v0, lim.v_max, 400);
      for (std::size_t i = 0; i < lower.speed.size(); ++i) {
        EXPECT_LE(lower.force[i] - lim.min_force_at_speed(lower.speed[i]), 1e-9);
      }
    }
  }
}

TEST(ForceLimits, EmptyCurveIsAnError) {
  LimitCurve c{{1.0, 2.0}, {100.0, 50.0}};
  EXPECT_THROW(fit_force_limits(c, nullptr, 5.0, 10.0), std::runtime_error);
}
