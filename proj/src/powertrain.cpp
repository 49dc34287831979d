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
#include "ecodrive/powertrain.hpp"

#include <algorithm>
#include <array>
#include <utility>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ecodrive {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDieselHeatingValue = 42.6e6;  // J/kg

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return out;
}

// Index i such that grid[i] <= x <= grid[i+1], with x clamped to the grid.
std::size_t bracket(const std::vector<double>& grid, double x) {
  if (x <= grid.front()) return 0;
  if (x >= grid.back()) return grid.size() - 2;
  auto it = std::upper_bound(grid.begin(), grid.end(), x);
  return static_cast<std::size_t>(std::distance(grid.begin(), it)) - 1;
}

double interp1(const std::vector<double>& grid, const std::vector<double>& values, double x) {
  if (values.empty()) return 0.0;
  const std::size_t i = bracket(grid, x);
  const double xc = std::clamp(x, grid.front(), grid.back());
  const double t = (xc - grid[i]) / (grid[i + 1] - grid[i]);
  return values[i] + t * (values[i + 1] - values[i]);
}

}  // namespace

std::string_view to_string(PowertrainKind kind) {
  return kind == PowertrainKind::Conventional ? "cv" : "ev";
}

PowertrainKind powertrain_kind_from_string(std::string_view name) {
  if (name == "cv" || name == "conventional") return PowertrainKind::Conventional;
  if (name == "ev" || name == "electric") return PowertrainKind::Electric;
  throw std::invalid_argument("unknown powertrain kind '" + std::string(name) + "'");
}

double ActuatorMap::internal_power(double w, double M) const {
  const std::size_t i = bracket(omega, w);
  const std::size_t j = bracket(torque, M);
  const double tw = (std::clamp(w, omega.front(), omega.back()) - omega[i]) / (omega[i + 1] - omega[i]);
  const double tm = (std::clamp(M, torque.front(), torque.back()) - torque[j]) / (torque[j + 1] - torque[j]);
  const double p0 = power(i, j) + tm * (power(i, j + 1) - power(i, j));
  const double p1 = power(i + 1, j) + tm * (power(i + 1, j + 1) - power(i + 1, j));
  return p0 + tw * (p1 - p0);
}

double ActuatorMap::max_torque(double w) const { return interp1(omega, torque_max, w); }
double ActuatorMap::min_torque(double w) const { return interp1(omega, torque_min, w); }

double ActuatorMap::additional_brake_torque(double w) const {
  return torque_brake.empty() ? 0.0 : interp1(omega, torque_brake, w);
}

double ActuatorMap::efficiency(double w, double M) const {
  const double mech = w * M;
  const double p = internal_power(w, M);
  if (mech >= 0.0) return p > 0.0 ? mech / p : 0.0;
  return mech != 0.0 ? p / mech : 0.0;
}

ActuatorSpec default_actuator(PowertrainKind kind) {
  ActuatorSpec spec;
  spec.kind = kind;
  if (kind == PowertrainKind::Electric) {
    spec.rated_power = 350e3;
    spec.omega_idle = 0.0;
    spec.omega_max = 1000.0;
    spec.peak_torque = 1200.0;
    spec.brake_torque = 0.0;
  }
  return spec;
}

ActuatorMap synth_actuator_map(const ActuatorSpec& spec) {
  if (!(spec.rated_power > 0.0)) throw std::invalid_argument("rated power must be positive");
  if (!(spec.omega_idle >= 0.0) || !(spec.omega_idle < spec.omega_max)) {
    throw std::invalid_argument("idle speed must be non-negative and below the maximum speed");
  }
  if (!(spec.peak_torque > 0.0)) throw std::invalid_argument("peak torque must be positive");
  if (spec.omega_points < 2 || spec.torque_points < 4) {
    throw std::invalid_argument("actuator grid is too small");
  }

  ActuatorMap map;
  map.kind = spec.kind;
  map.omega_idle = spec.omega_idle;
  map.omega_max = spec.omega_max;
  map.omega = linspace(spec.omega_idle, spec.omega_max, spec.omega_points);
  const double scale = spec.rated_power / 330e3;

  if (spec.kind == PowertrainKind::Conventional) {
    if (!(spec.brake_torque >= 0.0)) throw std::invalid_argument("brake torque must be non-negative");
    map.heating_value = kDieselHeatingValue;
    map.coeffs.k0 = 10e3 * scale;
    map.coeffs.k1 = 30.0 * scale;
    map.coeffs.k3 = 0.001 * scale;
    map.coeffs.e1 = 1.0 / 0.46;

    // Torque grid with an exact node at zero; fuel is cut for negative torque.
    const int n_neg = std::max(2, spec.torque_points / 4);
    const int n_pos = spec.torque_points - n_neg + 1;
    auto neg = linspace(-std::max(spec.brake_torque, 1.0), 0.0, n_neg);
    auto pos = linspace(0.0, spec.peak_torque, n_pos);
    map.torque = neg;
    map.torque.insert(map.torque.end(), pos.begin() + 1, pos.end());

    const double taper_end = spec.omega_idle + 0.25 * (spec.omega_max - spec.omega_idle);
    const auto& c = map.coeffs;
    map.power.resize(static_cast<Eigen::Index>(map.omega.size()),
                     static_cast<Eigen::Index>(map.torque.size()));
    for (std::size_t i = 0; i < map.omega.size(); ++i) {
      const double w = map.omega[i];
      const double taper = std::min(1.0, (w - spec.omega_idle) / (taper_end - spec.omega_idle));
      const double m_max = std::min(spec.peak_torque * (0.7 + 0.3 * taper), spec.rated_power / w);
      map.torque_max.push_back(m_max);
      map.torque_min.push_back(0.0);
      const double frac = (w - spec.omega_idle) / (spec.omega_max - spec.omega_idle);
      map.torque_brake.push_back(-spec.brake_torque * (0.3 + 0.7 * frac));
      const double loss = c.k0 + c.k1 * w + c.k3 * w * w * w;
      for (std::size_t j = 0; j < map.torque.size(); ++j) {
        const double M = map.torque[j];
        map.power(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            M >= 0.0 ? loss + c.e1 * M * w : 0.0;
      }
    }
  } else {
    const double escale = spec.rated_power / 350e3;
    map.coeffs.k0 = 1500.0 * escale;
    map.coeffs.k1 = 0.0105 * escale;
    map.coeffs.k2 = 0.012 * escale;
    map.coeffs.e1 = 1.0;
    const int n = spec.torque_points | 1;  // odd count keeps an exact zero node
    map.torque = linspace(-spec.peak_torque, spec.peak_torque, n);
    const double w_base = spec.rated_power / spec.peak_torque;
    const auto& c = map.coeffs;
    map.power.resize(static_cast<Eigen::Index>(map.omega.size()),
                     static_cast<Eigen::Index>(map.torque.size()));
    for (std::size_t i = 0; i < map.omega.size(); ++i) {
      const double w = map.omega[i];
      double p_max = spec.rated_power;
      if (w > w_base && spec.omega_max > w_base) {
        const double r = (w - w_base) / (spec.omega_max - w_base);
        p_max *= 1.0 - 0.15 * r * r;
      }
      const double m_max = w > 0.0 ? std::min(spec.peak_torque, p_max / w) : spec.peak_torque;
      map.torque_max.push_back(m_max);
      map.torque_min.push_back(-0.9 * m_max);
      for (std::size_t j = 0; j < map.torque.size(); ++j) {
        const double M = map.torque[j];
        map.power(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            M * w + c.k0 + c.k1 * w * w + c.k2 * M * M;
      }
    }
  }
  return map;
}

WheelModel::WheelModel(ActuatorMap map, VehicleParams params)
    : map_(std::move(map)), params_(std::move(params)) {
  params_.validate();
  if (map_.kind == PowertrainKind::Electric && params_.gear_count() != 1) {
    throw std::invalid_argument("electric driveline is modelled with a single gear");
  }
}

double WheelModel::window_lo(int gear) const {
  const double v = map_.omega_idle * params_.gear_radius(gear);
  return 0.5 * params_.mass * v * v;
}

double WheelModel::window_hi(int gear) const {
  const double v = map_.omega_max * params_.gear_radius(gear);
  return 0.5 * params_.mass * v * v;
}

bool WheelModel::in_window(double E, int gear) const {
  return E >= window_lo(gear) && E <= window_hi(gear) && E > 0.0;
}

double WheelModel::max_force(double E, int gear) const {
  if (!in_window(E, gear)) return kNaN;
  const double R = params_.gear_radius(gear);
  return map_.max_torque(speed_of(E, params_) / R) / R;
}

double WheelModel::min_force(double E, int gear) const {
  if (!in_window(E, gear)) return kNaN;
  const double R = params_.gear_radius(gear);
  return map_.min_torque(speed_of(E, params_) / R) / R;
}

double WheelModel::brake_force(double E, int gear) const {
  if (!in_window(E, gear)) return kNaN;
  const double R = params_.gear_radius(gear);
  return map_.additional_brake_torque(speed_of(E, params_) / R) / R;
}

double WheelModel::power(double E, double F, int gear) const {
  if (!in_window(E, gear)) return kNaN;
  const double R = params_.gear_radius(gear);
  return map_.internal_power(speed_of(E, params_) / R, F * R);
}

WheelTables wheel_transform(const WheelModel& model, const GridSpec& grid) {
  const auto& params = model.params();
  const int gears = model.gear_count();
  WheelTables t;
  t.kind = model.map().kind;
  t.gear_count = gears;
  t.brake_floor = params.brake_floor;

  const double v_hi = grid.v_hi > 0.0 ? grid.v_hi
                                      : model.map().omega_max * params.gear_radius(gears);
  if (!(grid.v_lo > 0.0) || !(v_hi > grid.v_lo)) throw std::invalid_argument("bad wheel grid speed range");
  if (grid.energy_points < 2 || grid.force_points < 2) throw std::invalid_argument("wheel grid too small");
  t.energy = linspace(kinetic_energy(grid.v_lo, params), kinetic_energy(v_hi, params),
                      grid.energy_points);

  t.f_max.assign(static_cast<std::size_t>(gears), std::vector<double>(t.energy.size(), kNaN));
  t.f_min = t.f_max;
  t.f_brake = t.f_max;
  double f_hi = 0.0;
  double f_lo = 0.0;
  for (int g = 1; g <= gears; ++g) {
    bool any = false;
    for (std::size_t i = 0; i < t.energy.size(); ++i) {
      const double E = t.energy[i];
      if (!model.in_window(E, g)) continue;
      any = true;
      t.f_max[g - 1][i] = model.max_force(E, g);
      t.f_min[g - 1][i] = model.min_force(E, g);
      t.f_brake[g - 1][i] = model.brake_force(E, g);
      f_hi = std::max(f_hi, t.f_max[g - 1][i]);
      f_lo = std::min(f_lo, t.f_min[g - 1][i]);
    }
    if (!any) {
      throw std::invalid_argument("gear " + std::to_string(g) + " has no grid energy inside its speed window");
    }
  }
  t.force = linspace(f_lo + params.brake_floor, f_hi, grid.force_points);

  t.power.assign(static_cast<std::size_t>(gears),
                 Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(t.energy.size()),
                                           static_cast<Eigen::Index>(t.force.size()), kNaN));
  for (int g = 1; g <= gears; ++g) {
    for (std::size_t i = 0; i < t.energy.size(); ++i) {
      const double fmax = t.f_max[g - 1][i];
      if (std::isnan(fmax)) continue;
      const double fmin = t.kind == PowertrainKind::Conventional ? 0.0 : t.f_min[g - 1][i];
      for (std::size_t k = 0; k < t.force.size(); ++k) {
        const double F = t.force[k];
        if (F < fmin || F > fmax) continue;
        t.power[g - 1](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            model.power(t.energy[i], F, g);
      }
    }
  }
  return t;
}

GearMap optimise_gear_map(const WheelTables& tables) {
  GearMap gm;
  gm.kind = tables.kind;
  gm.energy = tables.energy;
  gm.force = tables.force;
  const std::size_t nE = tables.energy.size();
  const std::size_t nF = tables.force.size();
  gm.gear.assign(nE * nF, 0);
  gm.f_max.assign(nE, kNaN);
  gm.f_min.assign(nE, kNaN);
  gm.f_add_min.assign(nE, kNaN);

  for (std::size_t i = 0; i < nE; ++i) {
    double fmax = -std::numeric_limits<double>::infinity();
    double fmin = std::numeric_limits<double>::infinity();
    double fadd = std::numeric_limits<double>::infinity();
    bool any = false;
    for (int g = 0; g < tables.gear_count; ++g) {
      if (std::isnan(tables.f_max[g][i])) continue;
      any = true;
      fmax = std::max(fmax, tables.f_max[g][i]);
      fmin = std::min(fmin, tables.f_min[g][i]);
      fadd = std::min(fadd, tables.f_brake[g][i]);
    }
    if (!any) continue;
    gm.f_max[i] = fmax;
    if (tables.kind == PowertrainKind::Conventional) {
      gm.f_min[i] = 0.0;
      gm.f_add_min[i] = std::min(fadd, 0.0);
    } else {
      gm.f_min[i] = fmin;
      gm.f_add_min[i] = 0.0;
    }

    for (std::size_t k = 0; k < nF; ++k) {
      const double F = tables.force[k];
      int best = 0;
      if (tables.kind == PowertrainKind::Electric) {
        if (F <= fmax && F >= gm.f_min[i] + tables.brake_floor) best = 1;
      } else if (F >= 0.0) {
        double best_power = std::numeric_limits<double>::infinity();
        for (int g = 0; g < tables.gear_count; ++g) {
          const double p = tables.power[g](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
          if (!std::isnan(p) && p < best_power) {
            best_power = p;
            best = g + 1;
          }
        }
      } else if (F >= gm.f_add_min[i]) {
        // Highest gear whose additional brake still covers the demand.
        double best_brake = -std::numeric_limits<double>::infinity();
        for (int g = 0; g < tables.gear_count; ++g) {
          const double fb = tables.f_brake[g][i];
          if (!std::isnan(fb) && fb <= F && fb > best_brake) {
            best_brake = fb;
            best = g + 1;
          }
        }
      } else if (F >= tables.brake_floor) {
        double best_brake = std::numeric_limits<double>::infinity();
        for (int g = 0; g < tables.gear_count; ++g) {
          const double fb = tables.f_brake[g][i];
          if (!std::isnan(fb) && fb < best_brake) {
            best_brake = fb;
            best = g + 1;
          }
        }
      }
      gm.gear[i * nF + k] = best;
    }
  }
  return gm;
}

int GearMap::lookup(double E, double F_total) const {
  if (energy.size() < 2 || force.size() < 2) return 0;
  if (E < energy.front() || E > energy.back() || F_total < force.front() || F_total > force.back()) {
    return 0;
  }
  // Corners of the enclosing cell by normalised distance; the first feasible
  // one wins, so points on the envelope edge snap inward.
  const std::size_t i = bracket(energy, E);
  const std::size_t k = bracket(force, F_total);
  const double u = (E - energy[i]) / (energy[i + 1] - energy[i]);
  const double w = (F_total - force[k]) / (force[k + 1] - force[k]);
  std::array<std::pair<double, std::array<std::size_t, 2>>, 4> corners{{
      {u * u + w * w, {i, k}},
      {(1 - u) * (1 - u) + w * w, {i + 1, k}},
      {u * u + (1 - w) * (1 - w), {i, k + 1}},
      {(1 - u) * (1 - u) + (1 - w) * (1 - w), {i + 1, k + 1}},
  }};
  std::stable_sort(corners.begin(), corners.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& c : corners) {
    if (feasible(c.second[0], c.second[1])) return gear_at(c.second[0], c.second[1]);
  }
  return 0;
}

double GearMap::max_force_at(double E) const { return interp1(energy, f_max, E); }
double GearMap::min_force_at(double E) const { return interp1(energy, f_min, E); }

double optimal_power(const WheelModel& model, double E, double F) {
  double best = kNaN;
  for (int g = 1; g <= model.gear_count(); ++g) {
    if (!model.in_window(E, g)) continue;
    const double lo = model.map().kind == PowertrainKind::Conventional ? 0.0 : model.min_force(E, g);
    if (F < lo || F > model.max_force(E, g)) continue;
    const double p = model.power(E, F, g);
    if (std::isnan(best) || p < best) best = p;
  }
  return best;
}

std::array<double, 2> force_envelope(const WheelModel& model, double E) {
  std::array<double, 2> env{kNaN, kNaN};
  for (int g = 1; g <= model.gear_count(); ++g) {
    if (!model.in_window(E, g)) continue;
    const double lo = model.map().kind == PowertrainKind::Conventional ? 0.0 : model.min_force(E, g);
    const double hi = model.max_force(E, g);
    env[0] = std::isnan(env[0]) ? lo : std::min(env[0], lo);
    env[1] = std::isnan(env[1]) ? hi : std::max(env[1], hi);
  }
  return env;
}

Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index n = A.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()) * std::max(1.0, b.cwiseAbs().maxCoeff());

  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
    Eigen::VectorXd sp = Ap.colPivHouseholderQr().solve(b);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k]) = sp(static_cast<Eigen::Index>(k));
    return s;
  };

  for (int outer = 0; outer < 3 * n + 10; ++outer) {
    Eigen::VectorXd w = A.transpose() * (b - A * x);
    Eigen::Index j_best = -1;
    double w_best = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > w_best) {
        w_best = w(j);
        j_best = j;
      }
    }
    if (j_best < 0) break;
    passive[static_cast<std::size_t>(j_best)] = true;

    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      Eigen::VectorXd s = solve_passive();
      double alpha = 1.0;
      bool clipped = false;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) {
          clipped = true;
          alpha = std::min(alpha, x(j) / (x(j) - s(j)));
        }
      }
      if (!clipped) {
        x = s;
        break;
      }
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
  }
  return x;
}

std::vector<PowerSample> sample_optimal_power(const WheelModel& model, double v_lo, double v_hi,
                                              int speed_points, int force_points) {
  const auto& params = model.params();
  std::vector<PowerSample> out;
  for (double v : linspace(v_lo, v_hi, speed_points)) {
    const double E = kinetic_energy(v, params);
    const auto env = force_envelope(model, E);
    if (std::isnan(env[1])) continue;
    for (int k = 0; k < force_points; ++k) {
      double F;
      if (model.map().kind == PowertrainKind::Conventional) {
        F = env[1] * static_cast<double>(k + 1) / force_points;
      } else {
        F = env[0] + (env[1] - env[0]) * static_cast<double>(k) / (force_points - 1);
      }
      const double p = optimal_power(model, E, F);
      if (!std::isnan(p)) out.push_back({v, F, p});
    }
  }
  return out;
}

PowerFit fit_power_poly(const std::vector<PowerSample>& samples, PowertrainKind kind) {
  const Eigen::Index cols = kind == PowertrainKind::Conventional ? 3 : 4;
  if (samples.size() < static_cast<std::size_t>(cols)) {
    throw std::runtime_error("power fit needs at least as many samples as basis terms");
  }
  const auto rows = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd A(rows, cols);
  Eigen::VectorXd b(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& s = samples[static_cast<std::size_t>(r)];
    A(r, 0) = 1.0;
    A(r, 1) = s.v * s.v * s.v;
    A(r, 2) = s.v * s.F;
    if (cols == 4) A(r, 3) = s.v * s.F * s.F;
    b(r) = s.P;
  }
  Eigen::VectorXd norms = A.colwise().norm();
  for (Eigen::Index c = 0; c < cols; ++c) {
    if (!(norms(c) > 0.0)) {
      throw std::runtime_error("power fit basis term " + std::to_string(c) + " is unidentifiable (all-zero column)");
    }
  }
  Eigen::MatrixXd As = A * norms.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) throw std::runtime_error("power fit samples are rank deficient");

  Eigen::VectorXd xs = nonnegative_least_squares(As, b);
  PowerFit fit;
  fit.kind = kind;
  for (Eigen::Index c = 0; c < cols; ++c) fit.p[static_cast<std::size_t>(c)] = xs(c) / norms(c);

  double p_scale = 0.0;
  fit.v_lo = std::numeric_limits<double>::infinity();
  fit.v_hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    p_scale = std::max(p_scale, std::abs(s.P));
    fit.v_lo = std::min(fit.v_lo, s.v);
    fit.v_hi = std::max(fit.v_hi, s.v);
  }
  double sum = 0.0;
  for (const auto& s : samples) {
    const double rel = std::abs(fit.evaluate(s.v, s.F) - s.P) / std::max(std::abs(s.P), 0.01 * p_scale);
    fit.max_rel_error = std::max(fit.max_rel_error, rel);
    sum += rel;
  }
  fit.mean_rel_error = sum / static_cast<double>(samples.size());
  fit.sample_count = samples.size();
  return fit;
}

double ForceLimitFit::max_force_at_speed(double v) const { return std::min(f_cap_max, y0 + y1 / v); }

double ForceLimitFit::min_force_at_speed(double v) const {
  return has_min ? std::max(f_cap_min, x0 + x1 / v) : 0.0;
}

double ForceLimitFit::max_force(double E, double mass) const {
  return max_force_at_speed(std::sqrt(2.0 * E / mass));
}

double ForceLimitFit::min_force(double E, double mass) const {
  return min_force_at_speed(std::sqrt(2.0 * E / mass));
}

std::array<double, 2> solve_inner_lp(const std::vector<double>& speed,
                                     const std::vector<double>& bound, double v0, double v_max) {
  if (speed.size() != bound.size() || speed.empty()) {
    throw std::runtime_error("inner-approximation LP needs matching, non-empty samples");
  }
  if (!(v0 > 0.0) || !(v_max > v0)) throw std::runtime_error("inner-approximation LP needs 0 < v0 < v_max");
  const double c0 = v_max - v0;
  const double c1 = std::log(v_max / v0);

  // Constraint i is the point (1/v_i, b_i); feasible lines y0 + y1 x lie below
  // all points, so optimal vertices sit on edges of the lower convex hull.
  struct Pt {
    double x, b;
  };
  std::vector<Pt> pts;
  pts.reserve(speed.size());
  for (std::size_t i = 0; i < speed.size(); ++i) {
    if (!(speed[i] > 0.0) || !std::isfinite(bound[i])) {
      throw std::runtime_error("inner-approximation LP got an invalid sample");
    }
    pts.push_back({1.0 / speed[i], bound[i]});
  }
  std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) {
    return a.x < b.x || (a.x == b.x && a.b < b.b);
  });
  std::vector<Pt> hull;
  for (const auto& p : pts) {
    if (!hull.empty() && hull.back().x == p.x) continue;  // keep the lowest b per x
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.x - a.x) * (p.b - a.b) - (b.b - a.b) * (p.x - a.x);
      if (cross <= 0.0) hull.pop_back();
      else break;
    }
    hull.push_back(p);
  }

  double min_b = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) min_b = std::min(min_b, p.b);
  std::array<double, 2> best{min_b, 0.0};
  double best_obj = c0 * best[0];
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    const double y1 = (hull[k + 1].b - hull[k].b) / (hull[k + 1].x - hull[k].x);
    if (y1 < 0.0) continue;
    const double y0 = hull[k].b - y1 * hull[k].x;
    const double obj = c0 * y0 + c1 * y1;
    if (obj > best_obj) {
      best_obj = obj;
      best = {y0, y1};
    }
  }
  double violation = 0.0;
  for (const auto& p : pts) violation = std::max(violation, best[0] + best[1] * p.x - p.b);
  best[0] -= violation;
  return best;
}

ForceLimitFit fit_force_limits(const LimitCurve& max_curve, const LimitCurve* min_curve,
                               double v0, double v_max) {
  auto restrict = [&](const LimitCurve& c, double sign) {
    std::vector<double> s, b;
    for (std::size_t i = 0; i < c.speed.size(); ++i) {
      if (c.speed[i] >= v0 && c.speed[i] <= v_max) {
        s.push_back(c.speed[i]);
        b.push_back(sign * c.force[i]);
      }
    }
    if (s.empty()) throw std::runtime_error("force limit curve has no samples in [v0, v_max]");
    return std::make_pair(s, b);
  };

  ForceLimitFit fit;
  fit.v0 = v0;
  fit.v_max = v_max;
  auto [s, b] = restrict(max_curve, 1.0);
  const auto y = solve_inner_lp(s, b, v0, v_max);
  fit.y0 = y[0];
  fit.y1 = y[1];
  fit.f_cap_max = *std::max_element(max_curve.force.begin(), max_curve.force.end());
  if (min_curve != nullptr) {
    auto [sm, bm] = restrict(*min_curve, -1.0);
    const auto x = solve_inner_lp(sm, bm, v0, v_max);
    fit.x0 = -x[0];
    fit.x1 = -x[1];
    fit.f_cap_min = *std::min_element(min_curve->force.begin(), min_curve->force.end());
    fit.has_min = true;
  }
  return fit;
}

namespace {

LimitCurve envelope_curve(const WheelModel& model, double v_lo, double v_hi, int points, int side) {
  LimitCurve c;
  for (double v : linspace(v_lo, v_hi, points)) {
    const auto env = force_envelope(model, kinetic_energy(v, model.params()));
    if (std::isnan(env[side])) continue;
    c.speed.push_back(v);
    c.force.push_back(env[side]);
  }
  return c;
}

}  // namespace

LimitCurve max_force_curve(const WheelModel& model, double v_lo, double v_hi, int points) {
  return envelope_curve(model, v_lo, v_hi, points, 1);
}

LimitCurve min_force_curve(const WheelModel& model, double v_lo, double v_hi, int points) {
  return envelope_curve(model, v_lo, v_hi, points, 0);
}

PowertrainArtifacts build_powertrain(const PowertrainSetup& setup, const VehicleParams& params) {
  WheelModel model(synth_actuator_map(setup.actuator), params);
  const auto tables = wheel_transform(model, setup.grid);

  PowertrainArtifacts out;
  out.kind = setup.actuator.kind;
  out.gears = optimise_gear_map(tables);
  out.power = fit_power_poly(sample_optimal_power(model, setup.fit_v_lo, setup.fit_v_hi), out.kind);

  const bool cv = out.kind == PowertrainKind::Conventional;
  const double v0 = setup.limit_v0 > 0.0 ? setup.limit_v0 : (cv ? 8.0 : 55.0) / 3.6;
  const double v_max = model.map().omega_max * params.gear_radius(params.gear_count());

  // Constraints on the fine validation sweep plus every tabulated grid speed.
  LimitCurve upper = max_force_curve(model, v0, v_max, setup.limit_points);
  LimitCurve lower = min_force_curve(model, v0, v_max, setup.limit_points);
  for (std::size_t i = 0; i < out.gears.energy.size(); ++i) {
    const double v = speed_of(out.gears.energy[i], params);
    if (v < v0 || v > v_max || std::isnan(out.gears.f_max[i])) continue;
    upper.speed.push_back(v);
    upper.force.push_back(out.gears.f_max[i]);
    lower.speed.push_back(v);
    lower.force.push_back(out.gears.f_min[i]);
  }
  out.limits = fit_force_limits(upper, cv ? nullptr : &lower, v0, v_max);
  return out;
}

}  // namespace ecodrive
