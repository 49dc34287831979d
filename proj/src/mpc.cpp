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
#include "ecodrive/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

namespace ecodrive {

namespace {

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto i = static_cast<std::size_t>(std::distance(xs.begin(), it)) - 1;
  const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] + t * (ys[i + 1] - ys[i]);
}

constexpr double kHugeTimePrice = 10.0;  // EUR/s, far above any fuel price per second

int gear_for(const Scenario& sc, double E, double F, double Fb) {
  if (sc.powertrain.kind == PowertrainKind::Electric) return 1;
  return sc.powertrain.gears.lookup(E, F + Fb);
}

}  // namespace

StageCostCoeffs Scenario::coeffs(double lambda) const {
  return make_stage_coeffs(powertrain.power, c_eg, w1, w2, lambda);
}

double HeuristicProfile::energy_at(double pos) const { return interp(s, E, pos); }
double HeuristicProfile::time_at(double pos) const { return interp(s, t, pos); }

double max_travel_time(const std::vector<double>& s, const std::vector<double>& v, double s_end) {
  if (s.size() != v.size() || s.size() < 2) throw std::invalid_argument("max_travel_time: bad samples");
  double t = 0.0;
  for (std::size_t k = 0; k + 1 < s.size() && s[k] < s_end; ++k) {
    if (!(v[k] > 0.0) || !(v[k + 1] > 0.0)) throw std::invalid_argument("max_travel_time: speed must be positive");
    const double hi = std::min(s[k + 1], s_end);
    const double frac = (hi - s[k]) / (s[k + 1] - s[k]);
    const double v_hi = v[k] + frac * (v[k + 1] - v[k]);
    t += 0.5 * (hi - s[k]) * (1.0 / v[k] + 1.0 / v_hi);
  }
  return t;
}

HeuristicProfile heuristic_velocity(const RoadProfile& road, const VehicleParams& params,
                                    const ForceLimitFit& limits, double v_cru, double ds) {
  if (!(v_cru > 0.0)) throw std::invalid_argument("cruise speed must be positive");
  if (!(ds > 0.0)) throw std::invalid_argument("sample interval must be positive");
  const double s_f = road.length();
  const int K = std::max(1, static_cast<int>(std::lround(s_f / ds)));
  HeuristicProfile hg;
  hg.ds = s_f / K;
  const double m = params.mass;
  const double E_cru = 0.5 * m * v_cru * v_cru;
  auto band = [&](double s, double E) {
    const double lo = energy_floor(road.v_min_at(s), params);
    const double vmax = road.v_max_at(s);
    return std::clamp(E, lo, 0.5 * m * vmax * vmax);
  };
  double E = band(0.0, E_cru);
  for (int k = 0; k <= K; ++k) {
    const double s = std::min(s_f, k * hg.ds);
    hg.s.push_back(s);
    hg.E.push_back(E);
    hg.v.push_back(std::sqrt(2.0 * E / m));
    if (k == K) break;
    const double Fa = road.mean_grade_force(s, std::min(s_f, (k + 1) * hg.ds), m, params.gravity,
                                            params.rolling_coeff);
    const double air = params.drag_factor() * 2.0 * E / m;
    const double a_max = std::min(params.accel_hi, (limits.max_force(E, m) - air - Fa) / m);
    const double next = std::min(E_cru, E + hg.ds * m * a_max);
    E = band(std::min(s_f, (k + 1) * hg.ds), next);
  }
  hg.t.assign(hg.s.size(), 0.0);
  for (std::size_t k = 1; k < hg.s.size(); ++k) {
    hg.t[k] = hg.t[k - 1] + 0.5 * (hg.s[k] - hg.s[k - 1]) * (1.0 / hg.v[k - 1] + 1.0 / hg.v[k]);
  }
  hg.t_f = hg.t.back();
  return hg;
}

std::vector<double> heuristic_guess(const HeuristicProfile& hg, const HorizonGrid& grid, double E0) {
  std::vector<double> out(static_cast<std::size_t>(grid.N + 1));
  for (int k = 0; k <= grid.N; ++k) {
    const auto i = static_cast<std::size_t>(k);
    out[i] = std::clamp(hg.energy_at(grid.position(k)), grid.E_min[i], grid.E_max[i]);
  }
  out[0] = E0;
  return out;
}

HorizonSolution rti_step(const Scenario& sc, const HorizonGrid& grid, const State& state,
                         const std::vector<double>& E_hat, double lambda, double beta,
                         const QpSettings& qp, const QpWarmStart* warm) {
  HorizonSolution out;
  out.grid = grid;
  if (grid.empty()) {
    out.plan.E = {state.E};
    out.plan.a = {state.a};
    out.E_hat_next = {state.E};
    out.feasible = true;
    out.converged = true;
    return out;
  }
  const auto coeffs = sc.coeffs(lambda);
  SqpIterate it;
  it.beta = beta;
  auto problem = assemble_qp(grid, coeffs, sc.powertrain.limits, E_hat, state.E, state.a, sc.params);
  out.qp = solve_qp(problem.qp, qp, warm);
  if (!out.qp.optimal()) {
    AssembleOptions relaxed;
    relaxed.relax_comfort = true;
    auto retry = assemble_qp(grid, coeffs, sc.powertrain.limits, E_hat, state.E, state.a, sc.params, relaxed);
    auto sol = solve_qp(retry.qp, qp);
    it.relaxed = true;
    if (sol.optimal() || sol.residuals.max() < out.qp.residuals.max()) {
      out.qp = std::move(sol);
      problem = std::move(retry);
    }
  }
  out.feasible = out.qp.optimal();
  it.status = out.qp.status;
  it.qp_iterations = out.qp.iterations;
  out.plan = unpack(problem.layout, out.qp.x);
  it.model_cost = problem.model_cost(out.qp.x);
  it.cost = discretized_cost(out.plan, grid, coeffs, sc.params);
  it.time = plan_time(out.plan.E, grid.ds, sc.params);
  out.cost = it.cost;
  out.time = it.time;
  out.E_hat_next.resize(E_hat.size());
  for (std::size_t k = 0; k < E_hat.size(); ++k) {
    const double blended = E_hat[k] + beta * (out.plan.E[k] - E_hat[k]);
    out.E_hat_next[k] = std::clamp(blended, grid.E_min[k], grid.E_max[k]);
  }
  out.E_hat_next[0] = out.plan.E[0];
  out.history.push_back(it);
  return out;
}

HorizonSolution solve_horizon(const Scenario& sc, const HorizonGrid& grid, const State& state,
                              const std::vector<double>& E_hat, double lambda, const SqpOptions& opt) {
  std::vector<double> lin = E_hat;
  double beta = opt.beta;
  int halvings = 0;
  HorizonSolution best;
  std::vector<SqpIterate> history;
  for (int i = 0; i < opt.max_iter; ++i) {
    const QpWarmStart ws = best.qp.x.size() > 0 ? best.qp.warm_start() : QpWarmStart{};
    HorizonSolution cur = rti_step(sc, grid, state, lin, lambda, beta, opt.qp, i > 0 ? &ws : nullptr);
    if (grid.empty()) return cur;
    history.push_back(cur.history.front());
    bool converged = false;
    if (i > 0) {
      const double prev = history[history.size() - 2].cost;
      converged = std::abs(cur.cost - prev) <= opt.rel_tol * std::abs(cur.cost);
      if (cur.cost > prev && halvings < opt.max_halvings) {
        beta *= 0.5;
        ++halvings;
        for (std::size_t k = 0; k < lin.size(); ++k) {
          cur.E_hat_next[k] = std::clamp(lin[k] + beta * (cur.plan.E[k] - lin[k]), grid.E_min[k], grid.E_max[k]);
        }
        cur.E_hat_next[0] = cur.plan.E[0];
      }
    }
    lin = cur.E_hat_next;
    best = std::move(cur);
    best.converged = converged;
    if (converged) break;
  }
  best.history = std::move(history);
  return best;
}

double costate_newton_update(double lambda, double f, double slope, double slope_floor,
                             double lambda_min, double lambda_max) {
  const double s = std::min(slope, slope_floor);
  if (!(s < 0.0)) return std::clamp(lambda, lambda_min, lambda_max);
  return std::clamp(lambda - f / s, lambda_min, lambda_max);
}

CostateEstimator::CostateEstimator(double lambda_min, double lambda_max, double f_at_min, double f_at_max)
    : lambda_min_(lambda_min), lambda_max_(lambda_max) {
  if (!(lambda_max > lambda_min)) throw std::invalid_argument("lambda_max must exceed lambda_min");
  slope_floor_ = (f_at_max - f_at_min) / (lambda_max - lambda_min);
  if (!(slope_floor_ < 0.0)) {
    slope_floor_ = -std::max(1.0, std::abs(f_at_min)) / (lambda_max - lambda_min);
  }
  slope_ = slope_floor_;
  if (f_at_min <= 0.0) {
    pinned_ = true;
    lambda_ = lambda_min;
    prev_lambda_ = lambda_min;
    prev_f_ = f_at_min;
  } else if (f_at_max >= 0.0) {
    lambda_ = lambda_max;
    prev_lambda_ = lambda_min;
    prev_f_ = f_at_min;
  } else {
    // Chord through (lambda_min, f_max) and (lambda_max, f_min).
    lambda_ = lambda_min - f_at_min / slope_floor_;
    prev_lambda_ = lambda_max;
    prev_f_ = f_at_max;
    first_low_ = {lambda_min, f_at_min};
  }
}

double CostateEstimator::update(double f) {
  if (pinned_) return lambda_;
  if (first_low_ && f > 0.0) {
    // Bracket from the chord's first evaluation with the opposite-sign end.
    prev_lambda_ = lambda_max_;
  } else if (first_low_) {
    prev_lambda_ = first_low_->first;
    prev_f_ = first_low_->second;
  }
  first_low_.reset();
  if (has_prev_ && std::abs(lambda_ - prev_lambda_) > 1e-9 * (1e-3 + std::abs(lambda_))) {
    const double secant = (f - prev_f_) / (lambda_ - prev_lambda_);
    if (secant < 0.0) slope_ = secant;
  }
  const double next = costate_newton_update(lambda_, f, slope_, slope_floor_, lambda_min_, lambda_max_);
  has_prev_ = true;
  prev_lambda_ = lambda_;
  prev_f_ = f;
  lambda_ = next;
  return lambda_;
}

void CostateEstimator::restart(double lambda, double slope) {
  lambda_ = std::clamp(lambda, lambda_min_, lambda_max_);
  if (slope < 0.0) slope_ = slope;
  has_prev_ = false;
  pinned_ = false;
  first_low_.reset();
}

std::string_view to_string(MpcMode mode) { return mode == MpcMode::Shrinking ? "shmpc" : "mhmpc"; }

MpcMode mpc_mode_from_string(std::string_view name) {
  if (name == "shmpc" || name == "shrinking") return MpcMode::Shrinking;
  if (name == "mhmpc" || name == "moving") return MpcMode::Moving;
  throw std::invalid_argument("unknown MPC mode '" + std::string(name) + "'");
}

double find_lambda_max(const Scenario& sc, const HorizonGrid& grid, const State& state,
                       const std::vector<double>& E_hat, int sqp_iter) {
  SqpOptions opt;
  opt.max_iter = sqp_iter;
  auto time_at = [&](double lambda) { return solve_horizon(sc, grid, state, E_hat, lambda, opt).time; };
  const double t_fast = time_at(kHugeTimePrice);
  double lo = std::log(1e-5);
  double hi = std::log(kHugeTimePrice);
  for (int i = 0; i < 14; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (time_at(std::exp(mid)) <= 1.001 * t_fast) hi = mid;
    else lo = mid;
  }
  return std::exp(hi);
}

CalibratedSolve calibrate_costate(const Scenario& sc, const HorizonGrid& grid, const State& state,
                                  const std::vector<double>& E_hat, double t_budget, double lambda_max,
                                  const SqpOptions& opt, double rel_tol, int max_eval) {
  CalibratedSolve out;
  double last_lambda = 0.0, last_f = 0.0;
  bool have_last = false;
  auto f_of = [&](double lambda) {
    ++out.evaluations;
    out.solution = solve_horizon(sc, grid, state, E_hat, lambda, opt);
    out.lambda = lambda;
    const double f = out.solution.time - t_budget;
    if (have_last && lambda != last_lambda) {
      const double secant = (f - last_f) / (lambda - last_lambda);
      if (secant < 0.0) out.slope = secant;
    }
    have_last = true;
    last_lambda = lambda;
    last_f = f;
    return f;
  };
  const double f_max = f_of(0.0);
  if (f_max <= 0.0) return out;
  const double f_min = f_of(lambda_max);
  if (f_min >= 0.0) return out;
  // Secant steps from the chord warm start, safeguarded by regula falsi.
  double lo = 0.0, flo = f_max, hi = lambda_max, fhi = f_min;
  CostateEstimator est(0.0, lambda_max, f_max, f_min);
  double lambda = est.lambda();
  while (out.evaluations < max_eval) {
    const double f = f_of(lambda);
    if (std::abs(f) <= rel_tol * t_budget) break;
    if (f > 0.0) {
      lo = lambda;
      flo = f;
    } else {
      hi = lambda;
      fhi = f;
    }
    double next = est.update(f);
    if (!(next > lo && next < hi)) next = lo - flo * (hi - lo) / (fhi - flo);
    lambda = next;
  }
  return out;
}

std::vector<double> costate_curve(const Scenario& sc, const HorizonGrid& grid, const State& state,
                                  const std::vector<double>& E_hat, double t_budget,
                                  const std::vector<double>& lambdas, const SqpOptions& opt) {
  std::vector<double> out;
  for (double lambda : lambdas) out.push_back(solve_horizon(sc, grid, state, E_hat, lambda, opt).time - t_budget);
  return out;
}

Trajectory plan_trajectory(const Scenario& sc, const HorizonGrid& grid, const HorizonPlan& plan, double t0) {
  Trajectory traj;
  traj.ds = grid.ds;
  double t = t0;
  for (int k = 0; k <= plan.N(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    const auto c = static_cast<std::size_t>(std::min(k, plan.N() - 1));
    TrajectorySample smp;
    smp.s = grid.position(k);
    smp.t = t;
    smp.E = plan.E[i];
    smp.v = speed_of(plan.E[i], sc.params);
    smp.a = plan.a[i];
    smp.j = plan.j[c];
    smp.F = plan.F[c];
    smp.F_brk = plan.Fb[c];
    smp.gear = gear_for(sc, smp.E, smp.F, smp.F_brk);
    traj.samples.push_back(smp);
    if (k < plan.N()) t += grid.ds * time_slope(plan.E[i], sc.params);
  }
  return traj;
}

Trajectory heuristic_trajectory(const Scenario& sc, const HeuristicProfile& hg) {
  const auto& p = sc.params;
  const double m = p.mass;
  const std::size_t K = hg.E.size() - 1;
  std::vector<double> a(K + 1, 0.0);
  for (std::size_t k = 0; k < K; ++k) a[k] = (hg.E[k + 1] - hg.E[k]) / (hg.ds * m);
  a[K] = a[K - 1];
  Trajectory traj;
  traj.ds = hg.ds;
  double t = 0.0;
  for (std::size_t k = 0; k <= K; ++k) {
    const std::size_t c = std::min(k, K - 1);
    TrajectorySample smp;
    smp.s = hg.s[k];
    smp.t = t;
    smp.E = hg.E[k];
    smp.v = hg.v[k];
    smp.a = a[k];
    smp.j = (a[c + 1] - a[c]) / hg.ds;
    const double Fa = sc.road.mean_grade_force(hg.s[c], hg.s[c + 1], m, p.gravity, p.rolling_coeff);
    const double T = traction_force(a[c], hg.E[c], 0.0, Fa, p);
    double F = std::max(T, 0.0);
    if (sc.powertrain.kind == PowertrainKind::Electric) F = std::max(T, sc.powertrain.limits.min_force(hg.E[c], m));
    smp.F = F;
    smp.F_brk = std::min(0.0, T - F);
    smp.gear = gear_for(sc, smp.E, smp.F, smp.F_brk);
    traj.samples.push_back(smp);
    if (k < K) t += hg.ds * time_slope(hg.E[k], p);
  }
  return traj;
}

double rms_jerk(const Trajectory& traj, bool time_domain) {
  const auto& s = traj.samples;
  if (s.size() < 2) return 0.0;
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double j0 = time_domain ? s[k].j * s[k].v : s[k].j;
    const double j1 = time_domain ? s[k + 1].j * s[k + 1].v : s[k + 1].j;
    integral += 0.5 * (s[k + 1].s - s[k].s) * (j0 * j0 + j1 * j1);
  }
  const double length = s.back().s - s.front().s;
  return length > 0.0 ? std::sqrt(integral / length) : 0.0;
}

RunMetrics evaluate_metrics(const Scenario& sc, const Trajectory& traj, double w1, double w2) {
  RunMetrics m;
  const auto coeffs = sc.coeffs(0.0);
  const auto& s = traj.samples;
  double brake_sq = 0.0;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double ds = s[k + 1].s - s[k].s;
    m.energy_cost += ds * energy_stage_cost(s[k].E, s[k].F, coeffs, sc.params);
    m.drivability_cost += ds * (w1 * s[k].a * s[k].a + w2 * s[k].j * s[k].j);
    brake_sq += s[k].F_brk * s[k].F_brk;
  }
  m.total_cost = m.energy_cost + m.drivability_cost;
  m.j_rms = rms_jerk(traj, true);
  m.brake_norm = std::sqrt(brake_sq) / 1000.0;
  m.arrival_time = s.empty() ? 0.0 : s.back().t;
  return m;
}

MpcResult run_mpc(const MpcConfig& cfg, const Scenario& sc, const PlanObserver& observer) {
  if (cfg.route_samples < 1) throw std::invalid_argument("route_samples must be positive");
  if (cfg.update_stride < 1) throw std::invalid_argument("update_stride must be positive");
  if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) throw std::invalid_argument("beta must lie in (0, 1]");
  const double s_f = sc.road.length();
  const double ds = s_f / cfg.route_samples;
  const double m = sc.params.mass;

  MpcResult res;
  res.heuristic = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, cfg.v_cru, ds);
  const auto& hg = res.heuristic;
  double t_f = cfg.budget_scale * hg.t_f;
  // A bounded horizon spans whole route steps so its grid matches the plant's.
  const double s_H_max =
      cfg.s_H_max > 0.0 ? std::max(1.0, std::round(cfg.s_H_max / ds)) * ds : s_f;

  State state{0.0, hg.E.front(), 0.0};
  auto horizon_budget = [&](double zeta, double s_H, double t_now) {
    if (cfg.mode == MpcMode::Shrinking) return t_f - t_now;
    return hg.time_at(zeta + s_H) * (t_f / hg.t_f) - t_now;
  };

  HorizonGrid grid = make_horizon(sc.road, sc.params, 0.0, s_H_max, ds);
  std::vector<double> E_hat = heuristic_guess(hg, grid, state.E);

  SqpOptions sqp;
  sqp.max_iter = cfg.sqp_iter;
  sqp.beta = cfg.beta;
  sqp.qp = cfg.qp;

  // Start from a converged plan: a full SQP at a fixed lambda, or the chord
  // warm start refined by secant steps at zeta = 0. After this every update
  // runs a single QP and a single costate step.
  std::optional<CostateEstimator> est;
  double lambda = cfg.fixed_lambda.value_or(0.0);
  if (cfg.fixed_lambda) {
    E_hat = solve_horizon(sc, grid, state, E_hat, lambda, sqp).plan.E;
  } else {
    res.lambda_max = cfg.lambda_max > 0.0 ? cfg.lambda_max : find_lambda_max(sc, grid, state, E_hat, 2);
    const double t_H0 = horizon_budget(0.0, grid.length, 0.0);
    const auto cal = calibrate_costate(sc, grid, state, E_hat, t_H0, res.lambda_max, sqp);
    // Chord ends from the calibration (f is monotone, so f(0) and f(lambda_max)
    // are its extreme values).
    SqpOptions quick = sqp;
    quick.max_iter = 2;
    const double f_lo = solve_horizon(sc, grid, state, E_hat, 0.0, quick).time - t_H0;
    const double f_hi = solve_horizon(sc, grid, state, E_hat, res.lambda_max, quick).time - t_H0;
    est.emplace(0.0, res.lambda_max, f_lo, f_hi);
    if (!est->pinned()) est->restart(cal.lambda, cal.slope);
    lambda = est->lambda();
    E_hat = cal.solution.plan.E;
    spdlog::debug("costate start: lambda_max={:.4g} f(0)={:.2f} f(max)={:.2f} lambda0={:.4g} ({} solves)",
                  res.lambda_max, f_lo, f_hi, lambda, cal.evaluations);
  }

  bool disturbed = false;
  int failures = 0;
  double zeta = 0.0;
  int update = 0;
  TrajectorySample last{};
  while (zeta < s_f - 1e-6 * ds) {
    grid = make_horizon(sc.road, sc.params, zeta, s_H_max, ds);
    if (update > 0) {
      std::vector<double> shifted(static_cast<std::size_t>(grid.N + 1));
      const int stride = cfg.update_stride;
      for (int k = 0; k <= grid.N; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const std::size_t src = i + static_cast<std::size_t>(stride);
        const double guess = src < E_hat.size() ? E_hat[src] : hg.energy_at(grid.position(k));
        shifted[i] = std::clamp(guess, grid.E_min[i], grid.E_max[i]);
      }
      E_hat = std::move(shifted);
    }
    E_hat[0] = state.E;
    const double t_H = horizon_budget(zeta, grid.length, state.t);

    const auto t0 = std::chrono::steady_clock::now();
    HorizonSolution sol = cfg.rti ? rti_step(sc, grid, state, E_hat, lambda, cfg.beta, cfg.qp)
                                  : solve_horizon(sc, grid, state, E_hat, lambda, sqp);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    UpdateRecord rec;
    rec.index = update;
    rec.zeta = zeta;
    rec.s_H = grid.length;
    rec.lambda = lambda;
    rec.t_H = t_H;
    rec.f = sol.time - t_H;
    rec.t_end = state.t + sol.time;
    rec.qp_iterations = 0;
    for (const auto& it : sol.history) rec.qp_iterations += it.qp_iterations;
    rec.relaxed = !sol.history.empty() && sol.history.back().relaxed;
    rec.objective = sol.cost;
    rec.solve_ms = ms;
    rec.status = sol.qp.status;
    res.log.push_back(rec);
    if (observer) observer(rec, sol);

    if (!sol.feasible) {
      ++failures;
      spdlog::warn("update {} at s={:.0f} m: QP {}", update, zeta, to_string(sol.qp.status));
      if (failures >= 3) {
        res.aborted = true;
        break;
      }
    } else {
      failures = 0;
    }

    // Apply the first stride of controls to the plant.
    const int steps = std::min(cfg.update_stride, grid.N);
    for (int k = 0; k < steps; ++k) {
      const auto i = static_cast<std::size_t>(k);
      TrajectorySample smp;
      smp.s = zeta + k * ds;
      smp.t = state.t;
      smp.E = state.E;
      smp.v = speed_of(state.E, sc.params);
      smp.a = state.a;
      smp.j = sol.feasible ? sol.plan.j[i] : 0.0;
      smp.F_brk = sol.feasible ? sol.plan.Fb[i] : 0.0;
      smp.F = traction_force(state.a, state.E, smp.F_brk, grid.grade_force[i], sc.params);
      smp.gear = gear_for(sc, smp.E, smp.F, smp.F_brk);
      res.trajectory.samples.push_back(smp);
      last = smp;
      state.t += ds * time_slope(state.E, sc.params);
      state.E += ds * m * state.a;
      state.a += ds * smp.j;
    }
    if (!(state.E > 0.0)) {
      res.aborted = true;
      break;
    }

    if (est && !cfg.freeze_lambda && grid.length >= cfg.freeze_factor * ds) lambda = est->update(rec.f);
    zeta += steps * ds;
    if (cfg.disturbance_at >= 0.0 && !disturbed && zeta >= cfg.disturbance_at * s_f) {
      t_f += cfg.disturbance_dt;
      disturbed = true;
    }
    E_hat = sol.E_hat_next;
    ++update;
  }
  if (!res.aborted) {
    TrajectorySample fin = last;
    fin.s = s_f;
    fin.t = state.t;
    fin.E = state.E;
    fin.v = speed_of(state.E, sc.params);
    fin.a = state.a;
    fin.gear = gear_for(sc, fin.E, fin.F, fin.F_brk);
    res.trajectory.samples.push_back(fin);
  }
  res.trajectory.ds = ds;
  res.metrics = evaluate_metrics(sc, res.trajectory, sc.w1, sc.w2);
  res.metrics.t_f = t_f;
  return res;
}

}  // namespace ecodrive
