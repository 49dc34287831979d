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
#include "ecodrive/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace ecodrive {

double fuel_price_per_joule(double eur_per_litre, double density, double heating_value) {
  return eur_per_litre / (density * heating_value);
}

double electricity_price_per_joule(double eur_per_kwh) { return eur_per_kwh / 3.6e6; }

std::string_view to_string(CaseLabel c) {
  switch (c) {
    case CaseLabel::Heuristic: return "hg";
    case CaseLabel::Case1: return "case1";
    case CaseLabel::Case2: return "case2";
  }
  return "?";
}

CaseLabel case_from_string(std::string_view name) {
  if (name == "hg") return CaseLabel::Heuristic;
  if (name == "case1") return CaseLabel::Case1;
  if (name == "case2") return CaseLabel::Case2;
  throw std::invalid_argument("unknown case '" + std::string(name) + "' (expected hg, case1 or case2)");
}

double RunConfig::energy_price() const {
  return kind == PowertrainKind::Electric ? electricity_price_per_joule(electricity_eur_per_kwh)
                                          : fuel_price_per_joule(fuel_eur_per_litre);
}

std::array<double, 2> RunConfig::weights(CaseLabel c) const {
  if (c == CaseLabel::Case2) return {w1, w2};
  return {0.0, 0.0};
}

RunConfig default_run_config(PowertrainKind kind) {
  RunConfig cfg;
  cfg.kind = kind;
  cfg.vehicle = kind == PowertrainKind::Electric ? electric_truck_params() : truck_params();
  cfg.powertrain.actuator = default_actuator(kind);
  return cfg;
}

namespace {

// Strict view of one mapping: every key read is recorded, leftovers are errors.
class Section {
public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ParseError(path_ + ": expected a mapping");
  }
  ~Section() = default;

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_ && node_.IsMap() && node_[key] && !node_[key].IsNull();
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ParseError(fmt::format("{}.{}: wrong type", path_, key), line(key));
    }
  }

  void number(const std::string& key, double& out, double lo, double hi, double factor = 1.0) {
    if (!has(key)) return;
    double v = 0.0;
    get(key, v);
    if (!std::isfinite(v) || v < lo || v > hi) {
      throw ParseError(fmt::format("{}.{}: {} outside [{}, {}]", path_, key, v, lo, hi), line(key));
    }
    out = v * factor;
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(node_ && node_.IsMap() ? node_[key] : YAML::Node(), path_ + "." + key);
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) {
        throw ParseError(fmt::format("{}: unknown key '{}'", path_, key), kv.first.Mark().line + 1);
      }
    }
  }

private:
  std::size_t line(const std::string& key) const {
    const auto mark = node_[key].Mark();
    return mark.line >= 0 ? static_cast<std::size_t>(mark.line) + 1 : 0;
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig parse_run_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(std::string("config: ") + e.msg, static_cast<std::size_t>(e.mark.line) + 1);
  }
  Section top(root, "config");

  auto veh = top.sub("vehicle");
  std::string kind = "cv";
  veh.get("kind", kind);
  RunConfig cfg;
  try {
    cfg = default_run_config(powertrain_kind_from_string(kind));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("config.vehicle.kind: ") + e.what());
  }
  auto& v = cfg.vehicle;
  veh.number("mass_kg", v.mass, 1.0, 1e6);
  veh.number("frontal_area_m2", v.frontal_area, 1e-3, 100.0);
  veh.number("drag_coeff", v.drag_coeff, 1e-3, 5.0);
  veh.number("air_density_kgpm3", v.air_density, 1e-3, 5.0);
  veh.number("rolling_coeff", v.rolling_coeff, 0.0, 0.1);
  veh.number("gravity_mps2", v.gravity, 0.0, 30.0);
  veh.number("wheel_radius_m", v.wheel_radius, 1e-2, 5.0);
  veh.number("final_gear_ratio", v.final_gear_ratio, 1e-2, 100.0);
  veh.get("transmission_ratios", v.transmission_ratios);
  veh.number("accel_min_mps2", v.accel_lo, -20.0, 0.0);
  veh.number("accel_max_mps2", v.accel_hi, 0.0, 20.0);
  double jerk_time = 0.0;
  veh.number("jerk_time_mps3", jerk_time, 0.0, 100.0);
  veh.number("brake_floor_N", v.brake_floor, -1e7, 0.0);
  veh.finish();

  auto pt = top.sub("powertrain");
  auto& act = cfg.powertrain.actuator;
  pt.get("artifacts", cfg.artifacts_dir);
  pt.number("rated_power_kW", act.rated_power, 1.0, 1e4, 1e3);
  pt.number("idle_speed_radps", act.omega_idle, 0.0, 2000.0);
  pt.number("max_speed_radps", act.omega_max, 1.0, 5000.0);
  pt.number("peak_torque_Nm", act.peak_torque, 1.0, 1e5);
  pt.number("brake_torque_Nm", act.brake_torque, 0.0, 1e5);
  double pts = act.omega_points;
  pt.number("map_speed_points", pts, 2, 2000);
  act.omega_points = static_cast<int>(pts);
  pts = act.torque_points;
  pt.number("map_torque_points", pts, 4, 2000);
  act.torque_points = static_cast<int>(pts);
  pt.number("fit_v_lo_kmh", cfg.powertrain.fit_v_lo, 1.0, 300.0, 1.0 / 3.6);
  pt.number("fit_v_hi_kmh", cfg.powertrain.fit_v_hi, 1.0, 300.0, 1.0 / 3.6);
  pt.number("limit_v0_kmh", cfg.powertrain.limit_v0, 0.0, 300.0, 1.0 / 3.6);
  pt.finish();

  auto rt = top.sub("route");
  rt.get("path", cfg.route.path);
  rt.number("vmin_kmh", cfg.route.default_vmin, 1.0, 300.0, 1.0 / 3.6);
  rt.number("vmax_kmh", cfg.route.default_vmax, 1.0, 300.0, 1.0 / 3.6);
  {
    auto syn = rt.sub("synthetic");
    auto& sp = cfg.route.synthetic;
    syn.number("length_km", sp.length, 0.1, 5000.0, 1e3);
    syn.number("spacing_m", sp.spacing, 1.0, 1e4);
    syn.number("max_grade_pct", sp.max_grade, 0.0, 20.0, 0.01);
    double hills = sp.hills;
    syn.number("hills", hills, 0, 1000);
    sp.hills = static_cast<int>(hills);
    syn.finish();
  }
  rt.finish();
  cfg.route.synthetic.v_min = cfg.route.default_vmin;
  cfg.route.synthetic.v_max = cfg.route.default_vmax;
  if (!(cfg.route.default_vmin < cfg.route.default_vmax)) throw ParseError("config.route: vmin_kmh must be below vmax_kmh");

  auto pr = top.sub("prices");
  pr.number("fuel_eur_per_litre", cfg.fuel_eur_per_litre, 1e-6, 100.0);
  pr.number("electricity_eur_per_kwh", cfg.electricity_eur_per_kwh, 1e-6, 100.0);
  pr.finish();

  auto mp = top.sub("mpc");
  auto& mc = cfg.mpc;
  if (mp.has("mode")) {
    std::string mode;
    mp.get("mode", mode);
    try {
      mc.mode = mpc_mode_from_string(mode);
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("config.mpc.mode: ") + e.what());
    }
  }
  double samples = mc.route_samples;
  mp.number("samples", samples, 1, 1e6);
  mc.route_samples = static_cast<int>(samples);
  mp.number("horizon_km", mc.s_H_max, 0.0, 1e4, 1e3);
  double stride = mc.update_stride;
  mp.number("update_stride", stride, 1, 1e6);
  mc.update_stride = static_cast<int>(stride);
  mp.number("beta", mc.beta, 1e-6, 1.0);
  mp.number("v_cru_kmh", mc.v_cru, 1.0, 300.0, 1.0 / 3.6);
  mp.number("budget_scale", mc.budget_scale, 0.1, 10.0);
  mp.number("lambda_max_eur_per_s", mc.lambda_max, 0.0, 1e3);
  mp.get("rti", mc.rti);
  double iters = mc.sqp_iter;
  mp.number("sqp_iterations", iters, 1, 1000);
  mc.sqp_iter = static_cast<int>(iters);
  mp.number("freeze_factor", mc.freeze_factor, 0.0, 1e6);
  mp.get("freeze_lambda", mc.freeze_lambda);
  if (mp.has("fixed_lambda_eur_per_s")) {
    double fl = 0.0;
    mp.number("fixed_lambda_eur_per_s", fl, 0.0, 1e3);
    mc.fixed_lambda = fl;
  }
  {
    auto dist = mp.sub("disturbance");
    dist.number("at_fraction", mc.disturbance_at, -1.0, 1.0);
    dist.number("extra_time_s", mc.disturbance_dt, -1e5, 1e5);
    dist.finish();
  }
  {
    auto qp = mp.sub("qp");
    qp.number("tol", mc.qp.tol, 1e-14, 1e-2);
    double it = mc.qp.max_iter;
    qp.number("max_iter", it, 1, 10000);
    mc.qp.max_iter = static_cast<int>(it);
    qp.finish();
  }
  mp.finish();

  auto cm = top.sub("comfort");
  cm.number("w1", cfg.w1, 0.0, 1e12);
  cm.number("w2", cfg.w2, 0.0, 1e12);
  cm.finish();

  if (top.has("case")) {
    std::string c;
    top.get("case", c);
    try {
      cfg.case_label = case_from_string(c);
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("config.case: ") + e.what());
    }
  }
  top.get("output", cfg.out_dir);
  top.get("seed", cfg.seed);
  top.finish();
  cfg.route.synthetic.seed = cfg.seed;

  if (jerk_time > 0.0) {
    cfg.vehicle.jerk_hi = jerk_time / cfg.mpc.v_cru;
    cfg.vehicle.jerk_lo = -cfg.vehicle.jerk_hi;
  }
  try {
    cfg.vehicle.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("config.vehicle: ") + e.what());
  }
  if (cfg.powertrain.actuator.omega_idle >= cfg.powertrain.actuator.omega_max) {
    throw ParseError("config.powertrain: idle_speed_radps must be below max_speed_radps");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

namespace {

// Fifteen significant digits hide unit-conversion round-off.
std::string num(double x) { return fmt::format("{:.15g}", x); }

}  // namespace

std::string dump_run_config(const RunConfig& cfg) {
  YAML::Emitter out;
  const auto& v = cfg.vehicle;
  const auto& a = cfg.powertrain.actuator;
  const auto& mc = cfg.mpc;
  out << YAML::BeginMap;
  out << YAML::Key << "vehicle" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << std::string(to_string(cfg.kind));
  out << YAML::Key << "mass_kg" << YAML::Value << num(v.mass);
  out << YAML::Key << "frontal_area_m2" << YAML::Value << num(v.frontal_area);
  out << YAML::Key << "drag_coeff" << YAML::Value << num(v.drag_coeff);
  out << YAML::Key << "air_density_kgpm3" << YAML::Value << num(v.air_density);
  out << YAML::Key << "rolling_coeff" << YAML::Value << num(v.rolling_coeff);
  out << YAML::Key << "gravity_mps2" << YAML::Value << num(v.gravity);
  out << YAML::Key << "wheel_radius_m" << YAML::Value << num(v.wheel_radius);
  out << YAML::Key << "final_gear_ratio" << YAML::Value << num(v.final_gear_ratio);
  out << YAML::Key << "transmission_ratios" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double r : v.transmission_ratios) out << num(r);
  out << YAML::EndSeq;
  out << YAML::Key << "accel_min_mps2" << YAML::Value << num(v.accel_lo);
  out << YAML::Key << "accel_max_mps2" << YAML::Value << num(v.accel_hi);
  out << YAML::Key << "jerk_time_mps3" << YAML::Value << num(v.jerk_hi * mc.v_cru);
  out << YAML::Key << "brake_floor_N" << YAML::Value << num(v.brake_floor);
  out << YAML::EndMap;
  out << YAML::Key << "powertrain" << YAML::Value << YAML::BeginMap;
  if (!cfg.artifacts_dir.empty()) out << YAML::Key << "artifacts" << YAML::Value << cfg.artifacts_dir;
  out << YAML::Key << "rated_power_kW" << YAML::Value << num(a.rated_power / 1e3);
  out << YAML::Key << "idle_speed_radps" << YAML::Value << num(a.omega_idle);
  out << YAML::Key << "max_speed_radps" << YAML::Value << num(a.omega_max);
  out << YAML::Key << "peak_torque_Nm" << YAML::Value << num(a.peak_torque);
  out << YAML::Key << "brake_torque_Nm" << YAML::Value << num(a.brake_torque);
  out << YAML::Key << "map_speed_points" << YAML::Value << a.omega_points;
  out << YAML::Key << "map_torque_points" << YAML::Value << a.torque_points;
  out << YAML::Key << "fit_v_lo_kmh" << YAML::Value << num(cfg.powertrain.fit_v_lo * 3.6);
  out << YAML::Key << "fit_v_hi_kmh" << YAML::Value << num(cfg.powertrain.fit_v_hi * 3.6);
  out << YAML::Key << "limit_v0_kmh" << YAML::Value << num(cfg.powertrain.limit_v0 * 3.6);
  out << YAML::EndMap;
  out << YAML::Key << "route" << YAML::Value << YAML::BeginMap;
  if (!cfg.route.path.empty()) out << YAML::Key << "path" << YAML::Value << cfg.route.path;
  out << YAML::Key << "vmin_kmh" << YAML::Value << num(cfg.route.default_vmin * 3.6);
  out << YAML::Key << "vmax_kmh" << YAML::Value << num(cfg.route.default_vmax * 3.6);
  out << YAML::Key << "synthetic" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "length_km" << YAML::Value << num(cfg.route.synthetic.length / 1e3);
  out << YAML::Key << "spacing_m" << YAML::Value << num(cfg.route.synthetic.spacing);
  out << YAML::Key << "max_grade_pct" << YAML::Value << num(cfg.route.synthetic.max_grade * 100.0);
  out << YAML::Key << "hills" << YAML::Value << cfg.route.synthetic.hills;
  out << YAML::EndMap << YAML::EndMap;
  out << YAML::Key << "prices" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "fuel_eur_per_litre" << YAML::Value << num(cfg.fuel_eur_per_litre);
  out << YAML::Key << "electricity_eur_per_kwh" << YAML::Value << num(cfg.electricity_eur_per_kwh);
  out << YAML::EndMap;
  out << YAML::Key << "mpc" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << std::string(to_string(mc.mode));
  out << YAML::Key << "samples" << YAML::Value << mc.route_samples;
  out << YAML::Key << "horizon_km" << YAML::Value << num(mc.s_H_max / 1e3);
  out << YAML::Key << "update_stride" << YAML::Value << mc.update_stride;
  out << YAML::Key << "beta" << YAML::Value << num(mc.beta);
  out << YAML::Key << "v_cru_kmh" << YAML::Value << num(mc.v_cru * 3.6);
  out << YAML::Key << "budget_scale" << YAML::Value << num(mc.budget_scale);
  out << YAML::Key << "lambda_max_eur_per_s" << YAML::Value << num(mc.lambda_max);
  out << YAML::Key << "rti" << YAML::Value << mc.rti;
  out << YAML::Key << "sqp_iterations" << YAML::Value << mc.sqp_iter;
  out << YAML::Key << "freeze_factor" << YAML::Value << num(mc.freeze_factor);
  out << YAML::Key << "freeze_lambda" << YAML::Value << mc.freeze_lambda;
  if (mc.fixed_lambda) out << YAML::Key << "fixed_lambda_eur_per_s" << YAML::Value << num(*mc.fixed_lambda);
  out << YAML::Key << "disturbance" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "at_fraction" << YAML::Value << num(mc.disturbance_at);
  out << YAML::Key << "extra_time_s" << YAML::Value << num(mc.disturbance_dt);
  out << YAML::EndMap;
  out << YAML::Key << "qp" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "tol" << YAML::Value << num(mc.qp.tol);
  out << YAML::Key << "max_iter" << YAML::Value << mc.qp.max_iter;
  out << YAML::EndMap << YAML::EndMap;
  out << YAML::Key << "comfort" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "w1" << YAML::Value << num(cfg.w1);
  out << YAML::Key << "w2" << YAML::Value << num(cfg.w2);
  out << YAML::EndMap;
  out << YAML::Key << "case" << YAML::Value << std::string(to_string(cfg.case_label));
  out << YAML::Key << "output" << YAML::Value << cfg.out_dir;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

RoadProfile load_route(const RunConfig& cfg) {
  if (!cfg.route.path.empty()) return ingest_road(cfg.route.path, cfg.route.default_vmin, cfg.route.default_vmax);
  auto spec = cfg.route.synthetic;
  spec.seed = cfg.seed;
  return synthetic_route(spec);
}

PowertrainArtifacts load_or_build_powertrain(const RunConfig& cfg) {
  if (!cfg.artifacts_dir.empty()) {
    auto art = load_artifacts(cfg.artifacts_dir);
    if (art.kind != cfg.kind) throw ParseError("artifacts in '" + cfg.artifacts_dir + "' are for a different powertrain kind");
    return art;
  }
  auto setup = cfg.powertrain;
  setup.actuator.kind = cfg.kind;
  return build_powertrain(setup, cfg.vehicle);
}

Scenario make_scenario(const RunConfig& cfg, CaseLabel c) {
  Scenario sc;
  sc.road = load_route(cfg);
  sc.params = cfg.vehicle;
  sc.powertrain = load_or_build_powertrain(cfg);
  sc.c_eg = cfg.energy_price();
  const auto w = cfg.weights(c);
  sc.w1 = w[0];
  sc.w2 = w[1];
  return sc;
}

}  // namespace ecodrive
