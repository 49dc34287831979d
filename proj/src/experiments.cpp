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
#include "ecodrive/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <stdexcept>

#include "ecodrive/io.hpp"
#include "ecodrive/oracle/dp.hpp"

namespace ecodrive {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

CaseOutcome run_case(const RunConfig& cfg, const Scenario& base, CaseLabel label) {
  CaseOutcome out;
  out.label = label;
  Scenario sc = base;
  const auto w = cfg.weights(label);
  sc.w1 = w[0];
  sc.w2 = w[1];
  if (label == CaseLabel::Heuristic) {
    const double ds = sc.road.length() / cfg.mpc.route_samples;
    const auto hg = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, cfg.mpc.v_cru, ds);
    out.trajectory = heuristic_trajectory(sc, hg);
    out.metrics = evaluate_metrics(sc, out.trajectory, cfg.w1, cfg.w2);
    out.metrics.t_f = cfg.mpc.budget_scale * hg.t_f;
    return out;
  }
  auto res = run_mpc(cfg.mpc, sc);
  out.metrics = evaluate_metrics(sc, res.trajectory, cfg.w1, cfg.w2);
  out.metrics.t_f = res.metrics.t_f;
  out.lambda_final = res.log.empty() ? 0.0 : res.log.back().lambda;
  out.trajectory = std::move(res.trajectory);
  out.log = std::move(res.log);
  out.aborted = res.aborted;
  return out;
}

}  // namespace

std::vector<CaseOutcome> compare_cases(const RunConfig& cfg, const Scenario& base) {
  const CaseLabel labels[] = {CaseLabel::Heuristic, CaseLabel::Case1, CaseLabel::Case2};
  std::vector<std::future<CaseOutcome>> legs;
  for (auto label : labels) legs.push_back(std::async(std::launch::async, run_case, std::cref(cfg), std::cref(base), label));
  std::vector<CaseOutcome> out;
  for (auto& f : legs) out.push_back(f.get());
  const double ref = out.front().metrics.total_cost;
  for (auto& c : out) c.improvement_pct = ref > 0.0 ? 100.0 * (ref - c.metrics.total_cost) / ref : 0.0;
  return out;
}

nlohmann::json to_json(const CaseOutcome& c) {
  auto j = to_json(c.metrics);
  j["case"] = std::string(to_string(c.label));
  j["improvement_pct"] = c.improvement_pct;
  j["lambda_final_eur_per_s"] = c.lambda_final;
  j["aborted"] = c.aborted;
  return j;
}

std::vector<SweepPoint> sweep_w2(const RunConfig& cfg, const Scenario& base, const std::vector<double>& w2_values) {
  auto leg = [&cfg, &base](double w2) {
    Scenario sc = base;
    sc.w1 = cfg.w1;
    sc.w2 = w2;
    auto res = run_mpc(cfg.mpc, sc);
    SweepPoint p;
    p.w2 = w2;
    p.metrics = res.metrics;
    p.aborted = res.aborted;
    return p;
  };
  std::vector<std::future<SweepPoint>> legs;
  for (double w2 : w2_values) legs.push_back(std::async(std::launch::async, leg, w2));
  std::vector<SweepPoint> out;
  for (auto& f : legs) out.push_back(f.get());
  return out;
}

double hilliest_window(const RoadProfile& road, double length, double step) {
  if (!(length > 0.0) || length > road.length()) throw std::invalid_argument("hilliest_window: bad window length");
  double best = -1.0, best_start = 0.0;
  for (double s0 = 0.0; s0 + length <= road.length() + 1e-9; s0 += step) {
    double sum = 0.0;
    int n = 0;
    for (double s = s0; s < s0 + length; s += step, ++n) sum += std::abs(road.grade_at(s));
    if (sum / n > best + 1e-15) {
      best = sum / n;
      best_start = s0;
    }
  }
  return best_start;
}

bool OracleReport::monotone() const {
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (std::abs(levels[i].gap_pct) > std::abs(levels[i - 1].gap_pct) + 1e-12) return false;
  }
  return true;
}

OracleReport oracle_compare(const Scenario& sc, const OracleSetup& setup) {
  OracleReport rep;
  rep.start = setup.start >= 0.0 ? setup.start : hilliest_window(sc.road, setup.length);
  rep.length = setup.length;
  rep.N = setup.N;
  rep.lambda = setup.lambda;
  Scenario seg = sc;
  seg.road = sc.road.slice(rep.start, rep.start + setup.length);
  const auto grid = make_horizon(seg.road, seg.params, 0.0, setup.length, setup.length / setup.N);
  rep.v0 = std::clamp(setup.v0, seg.road.v_min_at(0.0), seg.road.v_max_at(0.0));
  const double E0 = kinetic_energy(rep.v0, seg.params);
  const State state{0.0, E0, 0.0};
  std::vector<double> E_hat(static_cast<std::size_t>(grid.N + 1));
  for (std::size_t k = 0; k < E_hat.size(); ++k) E_hat[k] = std::clamp(E0, grid.E_min[k], grid.E_max[k]);
  E_hat[0] = E0;

  SqpOptions opt;
  opt.max_iter = 30;
  const auto sol = solve_horizon(seg, grid, state, E_hat, setup.lambda, opt);
  if (!sol.feasible) throw std::runtime_error("oracle_compare: SQP infeasible on the segment");
  rep.sqp_cost = sol.cost;
  rep.sqp_converged = sol.converged;
  rep.sqp_iterations = static_cast<int>(sol.history.size());

  const auto coeffs = seg.coeffs(setup.lambda);
  for (int P : setup.energy_points) {
    oracle::DpGrid lattice;
    lattice.energy_points = P;
    lattice.a_lo = -setup.a_abs;
    lattice.a_hi = setup.a_abs;
    const auto t0 = std::chrono::steady_clock::now();
    const auto dp = oracle::dp_solve(grid, coeffs, seg.powertrain.limits, seg.params, E0, lattice);
    OracleLevel lvl;
    lvl.ms = elapsed_ms(t0);
    lvl.energy_points = P;
    lvl.feasible = dp.feasible;
    lvl.dp_cost = dp.cost;
    lvl.gap_pct = dp.feasible ? 100.0 * (dp.cost - sol.cost) / sol.cost : INFINITY;
    lvl.states = dp.states;
    rep.levels.push_back(lvl);
  }
  return rep;
}

nlohmann::json to_json(const OracleReport& r) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : r.levels) {
    levels.push_back({{"energy_points", l.energy_points},
                      {"feasible", l.feasible},
                      {"dp_cost_eur", l.dp_cost},
                      {"gap_pct", l.feasible ? nlohmann::json(l.gap_pct) : nlohmann::json()},
                      {"states_per_stage", l.states}});
  }
  return {{"segment_start_m", r.start}, {"segment_length_m", r.length}, {"N", r.N},
          {"lambda_eur_per_s", r.lambda}, {"v0_kmh", r.v0 * 3.6},   {"sqp_cost_eur", r.sqp_cost},
          {"sqp_converged", r.sqp_converged}, {"sqp_iterations", r.sqp_iterations},
          {"levels", levels}, {"monotone", r.monotone()}};
}

std::vector<BenchPoint> bench_qp(const Scenario& sc, double v_cru, double lambda, const std::vector<int>& Ns,
                                 int repeats) {
  if (repeats < 1) throw std::invalid_argument("bench_qp: repeats must be positive");
  std::vector<BenchPoint> out;
  const double L = sc.road.length();
  for (int N : Ns) {
    if (N < 1) throw std::invalid_argument("bench_qp: N must be positive");
    const double ds = L / N;
    const auto hg = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, v_cru, ds);
    const auto grid = make_horizon(sc.road, sc.params, 0.0, L, ds);
    const State state{0.0, hg.E.front(), 0.0};
    const auto E_hat = heuristic_guess(hg, grid, state.E);
    std::vector<double> times;
    BenchPoint p;
    p.N = N;
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto sol = rti_step(sc, grid, state, E_hat, lambda);
      times.push_back(elapsed_ms(t0));
      p.qp_iterations = sol.history.empty() ? 0 : sol.history.back().qp_iterations;
    }
    std::nth_element(times.begin(), times.begin() + repeats / 2, times.end());
    p.solve_ms = times[static_cast<std::size_t>(repeats / 2)];
    out.push_back(p);
  }
  return out;
}

double linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("linear_r2: need two or more paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (syy == 0.0) return 1.0;
  return sxy * sxy / (sxx * syy);
}

double route_costate(const Scenario& sc, const MpcConfig& cfg) {
  const double L = sc.road.length();
  const double ds = L / cfg.route_samples;
  const auto hg = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, cfg.v_cru, ds);
  const auto grid = make_horizon(sc.road, sc.params, 0.0, L, ds);
  const State state{0.0, hg.E.front(), 0.0};
  const auto E_hat = heuristic_guess(hg, grid, state.E);
  SqpOptions opt;
  opt.max_iter = cfg.sqp_iter;
  opt.qp = cfg.qp;
  const double lmax = cfg.lambda_max > 0.0 ? cfg.lambda_max : find_lambda_max(sc, grid, state, E_hat, 2);
  return calibrate_costate(sc, grid, state, E_hat, cfg.budget_scale * hg.t_f, lmax, opt).lambda;
}

}  // namespace ecodrive
