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
#include "ecodrive/oracle/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ecodrive::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// out[i] = min_j c (i - j)^2 + f[j] via the lower envelope of parabolas;
// z[i] is the left end of the segment where parabola v[i] is lowest.
void distance_transform(const double* f, int n, double c, double* out, int* arg) {
  std::vector<int> v;
  std::vector<double> z;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    double s = -kInf;
    while (!v.empty()) {
      const int p = v.back();
      s = ((f[q] + c * q * q) - (f[p] + c * p * p)) / (2.0 * c * (q - p));
      if (s > z.back()) break;
      v.pop_back();
      z.pop_back();
      s = -kInf;
    }
    v.push_back(q);
    z.push_back(s);
  }
  if (v.empty()) {
    std::fill(out, out + n, kInf);
    std::fill(arg, arg + n, -1);
    return;
  }
  std::size_t j = 0;
  for (int q = 0; q < n; ++q) {
    while (j + 1 < v.size() && z[j + 1] <= q) ++j;
    const int p = v[j];
    out[q] = c * (q - p) * (q - p) + f[p];
    arg[q] = p;
  }
}

}  // namespace

DpResult dp_solve(const HorizonGrid& grid, const StageCostCoeffs& coeffs, const ForceLimitFit& limits,
                  const VehicleParams& params, double E0, const DpGrid& lattice) {
  if (grid.empty()) throw std::invalid_argument("dp_solve: empty horizon");
  if (lattice.energy_points < 2) throw std::invalid_argument("dp_solve: need at least two energy levels");
  coeffs.validate();
  const int N = grid.N;
  const double ds = grid.ds;
  const double m = params.mass;
  const double air = 2.0 * params.drag_factor() / m;
  const double a_lo = lattice.a_lo < lattice.a_hi ? lattice.a_lo : params.accel_lo;
  const double a_hi = lattice.a_lo < lattice.a_hi ? lattice.a_hi : params.accel_hi;
  if (!(a_lo < 0.0 && a_hi > 0.0)) throw std::invalid_argument("dp_solve: acceleration range must contain 0");

  const double E_lo = std::min(E0, *std::min_element(grid.E_min.begin(), grid.E_min.end()));
  const double E_hi = std::max(E0, *std::max_element(grid.E_max.begin(), grid.E_max.end()));
  DpResult res;
  res.energy_step = (E_hi - E_lo) / (lattice.energy_points - 1);
  res.accel_step = res.energy_step / (ds * m);
  const double dE = res.energy_step;
  const double da = res.accel_step;
  // Lattice anchored at E0 so that refinement nests.
  const long n_lo = static_cast<long>(std::ceil((E_lo - E0) / dE - 1e-9));
  const long n_hi = static_cast<long>(std::floor((E_hi - E0) / dE + 1e-9));
  const long q_lo = static_cast<long>(std::ceil(a_lo / da - 1e-9));
  const long q_hi = static_cast<long>(std::floor(a_hi / da + 1e-9));
  const int nE = static_cast<int>(n_hi - n_lo + 1);
  const int nA = static_cast<int>(q_hi - q_lo + 1);
  res.states = static_cast<std::size_t>(nE) * static_cast<std::size_t>(nA);
  auto energy = [&](int i) { return E0 + static_cast<double>(n_lo + i) * dE; };
  auto accel = [&](int iq) { return static_cast<double>(q_lo + iq) * da; };
  const int i0 = static_cast<int>(-n_lo);
  const int iq0 = static_cast<int>(-q_lo);

  // Admissible next-acceleration offsets from the jerk box.
  const long dq_lo = static_cast<long>(std::ceil(ds * params.jerk_lo / da - 1e-9));
  const long dq_hi = static_cast<long>(std::floor(ds * params.jerk_hi / da + 1e-9));
  const bool windowed = dq_lo > -(nA - 1) || dq_hi < nA - 1;
  const double c_jerk = coeffs.w2 * da * da / ds;  // per squared index step

  std::vector<double> V(res.states), W(res.states);
  std::vector<std::vector<int>> choice(static_cast<std::size_t>(N), std::vector<int>(res.states, -1));
  auto at = [nA](int iE, int iq) { return static_cast<std::size_t>(iE) * static_cast<std::size_t>(nA) + iq; };

  for (int iE = 0; iE < nE; ++iE) {
    const double E = energy(iE);
    const bool ok = E >= grid.E_min.back() - 1e-9 && E <= grid.E_max.back() + 1e-9;
    for (int iq = 0; iq < nA; ++iq) V[at(iE, iq)] = ok ? 0.0 : kInf;
  }

  for (int k = N - 1; k >= 0; --k) {
    auto& ch = choice[static_cast<std::size_t>(k)];
    // W(E', a) = min over a' of the jerk cost plus V(E', a').
    for (int iE = 0; iE < nE; ++iE) {
      const double* f = &V[at(iE, 0)];
      double* w = &W[at(iE, 0)];
      int* best = &ch[at(iE, 0)];
      if (!windowed && c_jerk > 0.0) {
        distance_transform(f, nA, c_jerk, w, best);
      } else if (!windowed) {
        const auto it = std::min_element(f, f + nA);
        const int p = static_cast<int>(std::distance(f, it));
        for (int iq = 0; iq < nA; ++iq) {
          w[iq] = *it;
          best[iq] = std::isfinite(*it) ? p : -1;
        }
      } else {
        for (int iq = 0; iq < nA; ++iq) {
          double bv = kInf;
          int bp = -1;
          const int lo = static_cast<int>(std::max<long>(0, iq + dq_lo));
          const int hi = static_cast<int>(std::min<long>(nA - 1, iq + dq_hi));
          for (int p = lo; p <= hi; ++p) {
            const double v = f[p] + c_jerk * (p - iq) * (p - iq);
            if (v < bv) {
              bv = v;
              bp = p;
            }
          }
          w[iq] = bv;
          best[iq] = bp;
        }
      }
    }
    const double Fa = grid.grade_force[static_cast<std::size_t>(k)];
    const double Emin_k = grid.E_min[static_cast<std::size_t>(k)];
    const double Emax_k = grid.E_max[static_cast<std::size_t>(k)];
    for (int iE = 0; iE < nE; ++iE) {
      const double E = energy(iE);
      const bool band_ok = k == 0 ? iE == i0 : (E >= Emin_k - 1e-9 && E <= Emax_k + 1e-9);
      for (int iq = 0; iq < nA; ++iq) {
        double& out = V[at(iE, iq)];
        out = kInf;
        if (!band_ok || (k == 0 && iq != iq0)) continue;
        const int iE_next = iE + static_cast<int>(q_lo) + iq;
        if (iE_next < 0 || iE_next >= nE) continue;
        const double tail = W[at(iE_next, iq)];
        if (!std::isfinite(tail)) continue;
        const double a = accel(iq);
        const double T = m * a + air * E + Fa;
        double F = std::max(T, 0.0);
        if (limits.has_min) F = std::max(T, limits.min_force(E, m));
        if (F > limits.max_force(E, m)) continue;
        const double Fb = T - F;
        if (Fb < params.brake_floor) continue;
        out = ds * stage_cost(E, a, 0.0, F, coeffs, params) + tail;
      }
    }
  }
  const double best = V[at(i0, iq0)];
  if (!std::isfinite(best)) return res;
  res.feasible = true;
  res.cost = best;

  int iE = i0, iq = iq0;
  auto& plan = res.plan;
  for (int k = 0; k < N; ++k) {
    const double E = energy(iE);
    const double a = accel(iq);
    const int iE_next = iE + static_cast<int>(q_lo) + iq;
    const int iq_next = choice[static_cast<std::size_t>(k)][at(iE_next, iq)];
    const double T = m * a + air * E + grid.grade_force[static_cast<std::size_t>(k)];
    double F = std::max(T, 0.0);
    if (limits.has_min) F = std::max(T, limits.min_force(E, m));
    plan.E.push_back(E);
    plan.a.push_back(a);
    plan.j.push_back((accel(iq_next) - a) / ds);
    plan.F.push_back(F);
    plan.Fb.push_back(T - F);
    iE = iE_next;
    iq = iq_next;
  }
  plan.E.push_back(energy(iE));
  plan.a.push_back(accel(iq));
  return res;
}

double FeasibilityReport::max() const {
  return std::max({speed_band, force_max, force_min, accel, jerk, brake, force_identity, dynamics});
}

FeasibilityReport nlp_feasibility_check(const Trajectory& traj, const RoadProfile& road,
                                        const ForceLimitFit& limits, PowertrainKind kind,
                                        const VehicleParams& params, double tol) {
  FeasibilityReport rep;
  rep.tol = tol;
  const auto& s = traj.samples;
  if (s.empty()) return rep;
  const double m = params.mass;
  const double E_ref = 0.5 * m * 20.0 * 20.0;
  const double f_ref = 1e4;
  const double j_ref = std::max(std::abs(params.jerk_lo), std::abs(params.jerk_hi));
  const double s_f = road.length();

  double E_sim = s.front().E;
  double a_sim = s.front().a;
  double t_sim = s.front().t;
  const double t_start = t_sim;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const auto& x = s[k];
    const double pos = std::min(x.s, s_f);
    const double lo = energy_floor(road.v_min_at(pos), params);
    const double vmax = road.v_max_at(pos);
    const double hi = 0.5 * m * vmax * vmax;
    rep.speed_band = std::max(rep.speed_band, std::max(lo - x.E, x.E - hi) / E_ref);
    rep.accel = std::max(rep.accel, std::max(params.accel_lo - x.a, x.a - params.accel_hi));

    // Time is the integral of ds / v, so its defect is relative to the elapsed time.
    const double t_ref = std::max(1.0, t_sim - t_start);
    const double defect =
        std::max({std::abs(x.E - E_sim) / E_ref, std::abs(x.a - a_sim), std::abs(x.t - t_sim) / t_ref});
    rep.dynamics = std::max(rep.dynamics, defect);
    if (defect > tol) rep.defect_nodes.push_back(static_cast<int>(k));

    if (k + 1 == s.size()) break;
    // Interval quantities (controls and force) are attached to the left node.
    const double ds = s[k + 1].s - x.s;
    rep.jerk = std::max(rep.jerk, std::max(params.jerk_lo - x.j, x.j - params.jerk_hi) / j_ref);
    rep.brake = std::max(rep.brake, std::max(params.brake_floor - x.F_brk, x.F_brk) / f_ref);
    if (x.E > 0.0) {
      rep.force_max = std::max(rep.force_max, (x.F - limits.max_force(x.E, m)) / f_ref);
      const double fmin = kind == PowertrainKind::Electric && limits.has_min ? limits.min_force(x.E, m) : 0.0;
      rep.force_min = std::max(rep.force_min, (fmin - x.F) / f_ref);
      const double Fa = road.mean_grade_force(x.s, std::min(s_f, s[k + 1].s), m, params.gravity, params.rolling_coeff);
      rep.force_identity =
          std::max(rep.force_identity, std::abs(x.F - traction_force(x.a, x.E, x.F_brk, Fa, params)) / f_ref);
    }
    // Replay from the recorded controls, not the recorded successor states.
    if (E_sim > 0.0) t_sim += ds * time_slope(E_sim, params);
    E_sim += ds * m * x.a;
    a_sim += ds * x.j;
  }
  return rep;
}

}  // namespace ecodrive::oracle
