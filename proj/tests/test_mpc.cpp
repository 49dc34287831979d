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
#include <stdexcept>

#include "ecodrive/config.hpp"
#include "ecodrive/mpc.hpp"
#include "ecodrive/oracle/dp.hpp"

using namespace ecodrive;

namespace {

RoadProfile road(std::vector<std::pair<double, double>> pieces, double vmin = 50 / 3.6, double vmax = 90 / 3.6) {
  std::vector<RoadSample> s;
  double x = 0.0;
  for (const auto& [len, grade] : pieces) {
    s.push_back({x, grade, vmin, vmax, 0.0, 1e9});
    x += len;
  }
  s.push_back({x, pieces.back().second, vmin, vmax, 0.0, 1e9});
  return RoadProfile(s);
}

const PowertrainArtifacts& cv_powertrain() {
  static const auto art = [] {
    PowertrainSetup setup;
    setup.actuator = default_actuator(PowertrainKind::Conventional);
    return build_powertrain(setup, truck_params());
  }();
  return art;
}

Scenario scenario_on(RoadProfile rd, double w2 = 0.0) {
  Scenario sc;
  sc.road = std::move(rd);
  sc.params = truck_params();
  sc.powertrain = cv_powertrain();
  sc.c_eg = fuel_price_per_joule(1.51);
  sc.w2 = w2;
  return sc;
}

// 30 km of synthetic rolling terrain.
Scenario short_route(double w2 = 0.0) {
  SyntheticRouteSpec spec;
  spec.length = 30e3;
  spec.hills = 4;
  return scenario_on(synthetic_route(spec), w2);
}

}  // namespace

TEST(MaxTravelTime, ConstantCruiseOverRoute) {
  const double v = 80.0 / 3.6;
  EXPECT_NEAR(max_travel_time({0.0, 118000.0}, {v, v}, 118000.0), 5310.0, 1e-9);
  EXPECT_NEAR(max_travel_time({0.0, 500.0, 1000.0}, {10.0, 10.0, 10.0}, 700.0), 70.0, 1e-12);
  EXPECT_THROW(max_travel_time({0.0, 1.0}, {0.0, 1.0}, 1.0), std::invalid_argument);
}

TEST(Heuristic, FlatRoadHoldsCruise) {
  const auto sc = scenario_on(road({{10000, 0.0}}));
  const auto hg = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, 80 / 3.6, 100);
  for (double v : hg.v) EXPECT_NEAR(v, 80 / 3.6, 1e-9);
  EXPECT_NEAR(hg.t_f, 10000 / (80 / 3.6), 1e-6);
}

TEST(Heuristic, SteepClimbDecaysThenRecovers) {
  const auto sc = scenario_on(road({{2000, 0.0}, {4000, 0.05}, {8000, 0.0}}));
  const auto hg = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, 80 / 3.6, 50);
  double v_end_climb = 0.0;
  for (std::size_t k = 1; k < hg.s.size(); ++k) {
    if (hg.s[k] > 2000 && hg.s[k] <= 6000) {
      EXPECT_LE(hg.v[k], hg.v[k - 1] + 1e-12);
      v_end_climb = hg.v[k];
    }
    if (hg.s[k] > 6050) EXPECT_GE(hg.v[k], hg.v[k - 1] - 1e-12);
  }
  EXPECT_LT(v_end_climb, 80 / 3.6 - 1.0);
  EXPECT_NEAR(hg.v.back(), 80 / 3.6, 1e-9);
}

TEST(Heuristic, ClipsIntoBand) {
  const auto sc = scenario_on(road({{5000, 0.0}}, 60 / 3.6, 70 / 3.6));
  const auto slow = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, 50 / 3.6, 100);
  for (double v : slow.v) EXPECT_NEAR(v, 60 / 3.6, 1e-9);
  const auto fast = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, 80 / 3.6, 100);
  for (double v : fast.v) EXPECT_NEAR(v, 70 / 3.6, 1e-9);
  EXPECT_THROW(heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, 0.0, 100), std::invalid_argument);
}

TEST(Heuristic, IsFeasibleInOriginalLimits) {
  const auto sc = short_route();
  const auto hg = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, 80 / 3.6, 100);
  const auto rep = oracle::nlp_feasibility_check(heuristic_trajectory(sc, hg), sc.road, sc.powertrain.limits,
                                                 PowertrainKind::Conventional, sc.params, 1e-6);
  EXPECT_LE(rep.force_max, 1e-6);
  EXPECT_LE(rep.speed_band, 1e-6);
  EXPECT_LE(rep.dynamics, 1e-6);
}

TEST(Heuristic, TravelTimeConvergesUnderRefinement) {
  const auto sc = scenario_on(synthetic_route({}));
  const auto coarse = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, 80 / 3.6, 295.0);
  const auto fine = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, 80 / 3.6, 147.5);
  EXPECT_NEAR(coarse.t_f, 5314.02, 0.05);
  EXPECT_LT(std::abs(coarse.t_f - fine.t_f) / fine.t_f, 5e-4);
}

TEST(CostateNewton, HandArithmetic) {
  EXPECT_NEAR(costate_newton_update(0.01, 10.0, -2000.0, -100.0, 0.0, 1.0), 0.015, 1e-15);
  // The floor caps the step when the measured slope is too flat.
  EXPECT_NEAR(costate_newton_update(0.01, 10.0, -50.0, -1000.0, 0.0, 1.0), 0.02, 1e-15);
  EXPECT_DOUBLE_EQ(costate_newton_update(0.01, 0.0, -2000.0, -100.0, 0.0, 1.0), 0.01);
  EXPECT_DOUBLE_EQ(costate_newton_update(0.01, -1e3, -10.0, -10.0, 0.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(costate_newton_update(0.01, 1e3, -10.0, -10.0, 0.0, 1.0), 1.0);
}

TEST(CostateEstimator, ChordWarmStart) {
  const double lmax = 0.12;
  CostateEstimator est(0.0, lmax, 120.0, -300.0);
  EXPECT_NEAR(est.lambda(), 120.0 * lmax / 420.0, 1e-15);
  EXPECT_NEAR(est.slope_floor(), -420.0 / lmax, 1e-9);
  EXPECT_FALSE(est.pinned());
}

TEST(CostateEstimator, PinnedWhenFreeDrivingMeetsBudget) {
  CostateEstimator est(0.0, 0.1, -5.0, -300.0);
  EXPECT_TRUE(est.pinned());
  EXPECT_DOUBLE_EQ(est.lambda(), 0.0);
  EXPECT_THROW(CostateEstimator(0.1, 0.1, 1.0, -1.0), std::invalid_argument);
}

TEST(CostateEstimator, ConvergesOnLinearMismatch) {
  // f(lambda) = 200 - 5000 lambda has its root at 0.04.
  auto f = [](double l) { return 200.0 - 5000.0 * l; };
  CostateEstimator est(0.0, 0.2, f(0.0), f(0.2) * 0.5);
  for (int i = 0; i < 20; ++i) est.update(f(est.lambda()));
  EXPECT_NEAR(est.lambda(), 0.04, 1e-9);
  EXPECT_NEAR(est.slope(), -5000.0, 1e-6);
}

TEST(CostateEstimator, RestartKeepsSlope) {
  CostateEstimator est(0.0, 0.2, 200.0, -800.0);
  // Chord slope -5000; a steeper remembered slope takes over.
  est.restart(0.05, -8000.0);
  EXPECT_DOUBLE_EQ(est.lambda(), 0.05);
  EXPECT_DOUBLE_EQ(est.slope(), -8000.0);
  EXPECT_NEAR(est.update(30.0), 0.05 + 30.0 / 8000.0, 1e-15);
  // A flatter one is floored at the chord.
  est.restart(0.05, -3000.0);
  EXPECT_NEAR(est.update(30.0), 0.05 + 30.0 / 5000.0, 1e-15);
}

TEST(RmsJerk, ConstantAndZeroSignals) {
  Trajectory t;
  for (int k = 0; k <= 10; ++k) t.samples.push_back({k * 100.0, 0.0, 1e6, 20.0, 0.0, 0.0, 0.0, 0.0, 1});
  EXPECT_DOUBLE_EQ(rms_jerk(t), 0.0);
  for (auto& s : t.samples) s.j = -0.003;
  EXPECT_NEAR(rms_jerk(t, false), 0.003, 1e-15);
  EXPECT_NEAR(rms_jerk(t, true), 0.06, 1e-14);
  EXPECT_DOUBLE_EQ(rms_jerk(Trajectory{}), 0.0);
}

TEST(RtiStep, EmptyHorizonIsNoOp) {
  const auto sc = short_route();
  const State st{100.0, 5e6, 0.1};
  const auto sol = rti_step(sc, HorizonGrid{}, st, {st.E}, 0.01);
  EXPECT_TRUE(sol.feasible);
  ASSERT_EQ(sol.plan.E.size(), 1u);
  EXPECT_DOUBLE_EQ(sol.plan.E[0], st.E);
  EXPECT_DOUBLE_EQ(sol.plan.a[0], st.a);
  EXPECT_DOUBLE_EQ(sol.time, 0.0);
}

TEST(Sqp, ConvergesAndFirstIterateIsClose) {
  const auto sc = short_route();
  const double ds = 300.0;
  const auto hg = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, 80 / 3.6, ds);
  const auto grid = make_horizon(sc.road, sc.params, 0.0, sc.road.length(), ds);
  const State st{0.0, hg.E.front(), 0.0};
  SqpOptions opt;
  opt.max_iter = 12;
  const auto sol = solve_horizon(sc, grid, st, heuristic_guess(hg, grid, st.E), 0.0065, opt);
  ASSERT_TRUE(sol.converged);
  ASSERT_GE(sol.history.size(), 1u);
  EXPECT_LE(sol.history.size(), 10u);
  for (std::size_t i = 2; i < sol.history.size(); ++i) {
    EXPECT_LE(sol.history[i].cost, sol.history[i - 1].cost * (1 + 1e-9));
  }
  EXPECT_LT(std::abs(sol.history.front().cost - sol.cost) / sol.cost, 5e-3);
  // CV traction and braking are not used at once.
  for (int k = 0; k < grid.N; ++k) EXPECT_LE(std::min(sol.plan.F[k], -sol.plan.Fb[k]), 10.0);
}

TEST(Costate, MismatchIsMonotoneInPrice) {
  const auto sc = short_route();
  const double ds = 300.0;
  const auto hg = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, 80 / 3.6, ds);
  const auto grid = make_horizon(sc.road, sc.params, 0.0, sc.road.length(), ds);
  const State st{0.0, hg.E.front(), 0.0};
  const std::vector<double> lambdas{0.002, 0.004, 0.008, 0.016, 0.032};
  const auto f = costate_curve(sc, grid, st, heuristic_guess(hg, grid, st.E), hg.t_f, lambdas, SqpOptions{});
  ASSERT_EQ(f.size(), lambdas.size());
  for (std::size_t i = 1; i < f.size(); ++i) EXPECT_LE(f[i], f[i - 1] + 1e-3);
  EXPECT_GT(f.front(), 0.0);
  EXPECT_LT(f.back(), 0.0);
}

TEST(Costate, CalibrationMeetsBudget) {
  const auto sc = short_route();
  const double ds = 300.0;
  const auto hg = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, 80 / 3.6, ds);
  const auto grid = make_horizon(sc.road, sc.params, 0.0, sc.road.length(), ds);
  const State st{0.0, hg.E.front(), 0.0};
  const auto Eh = heuristic_guess(hg, grid, st.E);
  const double lmax = find_lambda_max(sc, grid, st, Eh, 2);
  EXPECT_GT(lmax, 0.0);
  const auto cal = calibrate_costate(sc, grid, st, Eh, hg.t_f, lmax, SqpOptions{});
  EXPECT_LT(std::abs(cal.solution.time - hg.t_f), 1e-4 * hg.t_f);
  EXPECT_GT(cal.lambda, 0.0);
  EXPECT_LT(cal.lambda, lmax);
}

TEST(RunMpc, ShrinkingHorizonMeetsBudgetAndIsFeasible) {
  const auto sc = short_route();
  MpcConfig cfg;
  cfg.route_samples = 100;
  const auto res = run_mpc(cfg, sc);
  ASSERT_FALSE(res.aborted);
  EXPECT_EQ(res.log.size(), 100u);
  EXPECT_LE(res.metrics.arrival_time, 1.001 * res.metrics.t_f);
  EXPECT_NEAR(res.trajectory.samples.back().s, sc.road.length(), 1e-6);
  const auto rep = oracle::nlp_feasibility_check(res.trajectory, sc.road, sc.powertrain.limits,
                                                 PowertrainKind::Conventional, sc.params, 1e-6);
  EXPECT_TRUE(rep.feasible()) << rep.max();
  for (std::size_t i = 11; i < res.log.size() && res.log[i].s_H >= cfg.freeze_factor * res.trajectory.ds; ++i) {
    EXPECT_LT(std::abs(res.log[i].lambda - res.log[10].lambda), 0.01 * res.log[10].lambda);
  }
}

TEST(RunMpc, MovingHorizonSpansWholeRouteSteps) {
  const auto sc = short_route();
  MpcConfig cfg;
  cfg.route_samples = 100;
  cfg.mode = MpcMode::Moving;
  cfg.s_H_max = 5000.0;  // not a multiple of the 300 m step
  std::vector<double> lengths;
  const auto res = run_mpc(cfg, sc, [&](const UpdateRecord& rec, const HorizonSolution&) { lengths.push_back(rec.s_H); });
  ASSERT_FALSE(res.aborted);
  for (const auto& r : res.log) EXPECT_TRUE(r.status == QpStatus::Optimal) << r.index;
  EXPECT_NEAR(lengths.front(), 17 * 300.0, 1e-9);
  EXPECT_LE(res.metrics.arrival_time, 1.001 * res.metrics.t_f);
}

TEST(RunMpc, JerkWeightTradesEnergyForComfort) {
  MpcConfig cfg;
  cfg.route_samples = 100;
  const auto free = run_mpc(cfg, short_route(0.0));
  const auto smooth = run_mpc(cfg, short_route(1000.0));
  EXPECT_LT(smooth.metrics.j_rms, free.metrics.j_rms);
  EXPECT_GE(smooth.metrics.energy_cost, free.metrics.energy_cost * (1 - 1e-3));
}

TEST(RunMpc, RejectsBadConfig) {
  const auto sc = short_route();
  MpcConfig cfg;
  cfg.route_samples = 0;
  EXPECT_THROW(run_mpc(cfg, sc), std::invalid_argument);
  cfg.route_samples = 10;
  cfg.beta = 1.5;
  EXPECT_THROW(run_mpc(cfg, sc), std::invalid_argument);
}
