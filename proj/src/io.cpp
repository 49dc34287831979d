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
#include "ecodrive/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace ecodrive {

namespace fs = std::filesystem;
using nlohmann::json;

ParseError::ParseError(const std::string& what, std::size_t line)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, what) : what), line_(line) {}

namespace {

constexpr const char* kGearMapSchema = "ecodrive.gear_map";
constexpr const char* kPowerFitSchema = "ecodrive.power_fit";
constexpr const char* kForceLimitSchema = "ecodrive.force_limits";
constexpr int kSchemaVersion = 1;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, const std::string& column, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw ParseError(fmt::format("column {}: '{}' is not a number", column, cell), line);
  }
  if (used != cell.size()) throw ParseError(fmt::format("column {}: trailing characters in '{}'", column, cell), line);
  if (!std::isfinite(v)) throw ParseError(fmt::format("column {}: non-finite value", column), line);
  return v;
}

json number_array(const std::vector<double>& xs) {
  json arr = json::array();
  for (double x : xs) arr.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return arr;
}

std::vector<double> read_array(const json& doc, const char* key, const std::string& schema) {
  if (!doc.contains(key) || !doc.at(key).is_array()) {
    throw ParseError(fmt::format("{}: missing array '{}'", schema, key));
  }
  std::vector<double> out;
  for (const auto& v : doc.at(key)) {
    if (v.is_null()) out.push_back(std::numeric_limits<double>::quiet_NaN());
    else if (v.is_number()) out.push_back(v.get<double>());
    else throw ParseError(fmt::format("{}: non-numeric entry in '{}'", schema, key));
  }
  return out;
}

double read_number(const json& doc, const char* key, const std::string& schema) {
  if (!doc.contains(key) || !doc.at(key).is_number()) {
    throw ParseError(fmt::format("{}: missing number '{}'", schema, key));
  }
  return doc.at(key).get<double>();
}

void check_header(const json& doc, const char* schema) {
  if (!doc.is_object()) throw ParseError(fmt::format("{}: document is not an object", schema));
  if (doc.value("schema", std::string()) != schema) {
    throw ParseError(fmt::format("expected schema '{}', got '{}'", schema, doc.value("schema", std::string("?"))));
  }
  if (doc.value("version", -1) != kSchemaVersion) {
    throw ParseError(fmt::format("{}: unsupported version {}", schema, doc.value("version", -1)));
  }
}

PowertrainKind read_kind(const json& doc, const std::string& schema) {
  try {
    return powertrain_kind_from_string(doc.at("kind").get<std::string>());
  } catch (const std::exception& e) {
    throw ParseError(fmt::format("{}: bad 'kind' ({})", schema, e.what()));
  }
}

// Uniform double in [0, 1) from the raw 64-bit engine output; avoids
// implementation-defined distribution algorithms so routes are portable.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

RoadProfile parse_road_csv(std::istream& in, double default_vmin, double default_vmax) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw ParseError("empty road file", line_no);
  auto col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(std::distance(header.begin(), it));
  };
  const int c_s = col("distance_m");
  const int c_h = col("elevation_m");
  const int c_g = col("grade_rad");
  const int c_lo = col("vmin_kmh");
  const int c_hi = col("vmax_kmh");
  if (c_s < 0) throw ParseError("missing column distance_m", line_no);
  if (c_h < 0 && c_g < 0) throw ParseError("need one of the columns elevation_m or grade_rad", line_no);
  if (c_h >= 0 && c_g >= 0) throw ParseError("columns elevation_m and grade_rad are mutually exclusive", line_no);

  struct Row {
    double s, z, lo, hi;
    std::size_t line;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError(fmt::format("expected {} fields, found {}", header.size(), cells.size()), line_no);
    }
    Row r{};
    r.line = line_no;
    r.s = parse_number(cells[static_cast<std::size_t>(c_s)], "distance_m", line_no);
    r.z = c_h >= 0 ? parse_number(cells[static_cast<std::size_t>(c_h)], "elevation_m", line_no)
                   : parse_number(cells[static_cast<std::size_t>(c_g)], "grade_rad", line_no);
    r.lo = c_lo >= 0 ? parse_number(cells[static_cast<std::size_t>(c_lo)], "vmin_kmh", line_no) / 3.6 : default_vmin;
    r.hi = c_hi >= 0 ? parse_number(cells[static_cast<std::size_t>(c_hi)], "vmax_kmh", line_no) / 3.6 : default_vmax;
    if (!rows.empty() && !(r.s > rows.back().s)) {
      throw ParseError(fmt::format("distance {} m does not increase (previous {} m)", r.s, rows.back().s), line_no);
    }
    if (rows.empty() && r.s != 0.0) throw ParseError("first distance must be 0", line_no);
    if (!(r.lo > 0.0) || !(r.lo < r.hi)) {
      throw ParseError(fmt::format("invalid speed band [{}, {}] km/h", r.lo * 3.6, r.hi * 3.6), line_no);
    }
    rows.push_back(r);
  }
  if (rows.size() < 2) throw ParseError("road file needs at least two data rows", line_no);

  std::vector<RoadSample> samples;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    RoadSample smp;
    smp.position = rows[i].s;
    if (c_h >= 0) {
      // Interval grade from the elevation difference; the last sample repeats.
      const std::size_t k = std::min(i, rows.size() - 2);
      smp.grade = std::atan((rows[k + 1].z - rows[k].z) / (rows[k + 1].s - rows[k].s));
    } else {
      smp.grade = rows[i].z;
    }
    smp.v_min_road = smp.v_min_traffic = rows[i].lo;
    smp.v_max_road = smp.v_max_traffic = rows[i].hi;
    samples.push_back(smp);
  }
  return RoadProfile(std::move(samples));
}

RoadProfile ingest_road(const std::string& path, double default_vmin, double default_vmax) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open road file '" + path + "'");
  return parse_road_csv(in, default_vmin, default_vmax);
}

RoadProfile synthetic_route(const SyntheticRouteSpec& spec) {
  if (!(spec.length > 0.0) || !(spec.spacing > 0.0) || spec.spacing > spec.length) {
    throw std::invalid_argument("synthetic route: bad length or spacing");
  }
  if (!(spec.max_grade >= 0.0) || !(spec.v_min > 0.0) || !(spec.v_min < spec.v_max)) {
    throw std::invalid_argument("synthetic route: bad grade or speed band");
  }
  std::mt19937_64 rng(spec.seed);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  struct Wave {
    double amp, wavelength, phase;
  };
  std::vector<Wave> waves;
  for (double wl : {23e3, 9.5e3, 4.1e3}) {
    waves.push_back({0.4 + 0.6 * unit_draw(rng), wl * (0.8 + 0.4 * unit_draw(rng)), kTwoPi * unit_draw(rng)});
  }
  struct Hill {
    double centre, half_width, height;
  };
  std::vector<Hill> hills;
  for (int i = 0; i < spec.hills; ++i) {
    const double centre = spec.length * unit_draw(rng);
    const double half_width = 800.0 + 2200.0 * unit_draw(rng);
    const double height = (unit_draw(rng) < 0.5 ? -1.0 : 1.0) * (15.0 + 55.0 * unit_draw(rng));
    hills.push_back({centre, half_width, height});
  }
  // Slope of the elevation field; raw units are arbitrary, normalised below.
  auto slope = [&](double s) {
    double d = 0.0;
    for (const auto& w : waves) d += w.amp * std::cos(kTwoPi * s / w.wavelength + w.phase) * kTwoPi / w.wavelength * 1e3;
    for (const auto& h : hills) {
      const double x = (s - h.centre) / h.half_width;
      if (std::abs(x) < 1.0) d += -0.5 * h.height * std::numbers::pi / h.half_width * std::sin(std::numbers::pi * x) * 50.0;
    }
    return d;
  };

  const int K = static_cast<int>(std::lround(spec.length / spec.spacing));
  const double step = spec.length / K;
  std::vector<double> raw(static_cast<std::size_t>(K + 1));
  double peak = 0.0;
  for (int k = 0; k <= K; ++k) {
    raw[static_cast<std::size_t>(k)] = slope((k + 0.5) * step);
    peak = std::max(peak, std::abs(raw[static_cast<std::size_t>(k)]));
  }
  // Scale so the steepest stretch saturates slightly, then clip.
  const double gain = peak > 0.0 ? 1.25 * spec.max_grade / peak : 0.0;
  std::vector<RoadSample> samples;
  for (int k = 0; k <= K; ++k) {
    RoadSample smp;
    smp.position = k == K ? spec.length : k * step;
    const double tan_a = std::clamp(gain * raw[static_cast<std::size_t>(k)], -spec.max_grade, spec.max_grade);
    smp.grade = std::atan(tan_a);
    smp.v_min_road = smp.v_min_traffic = spec.v_min;
    smp.v_max_road = smp.v_max_traffic = spec.v_max;
    samples.push_back(smp);
  }
  return RoadProfile(std::move(samples));
}

void write_road_csv(std::ostream& out, const RoadProfile& road) {
  out << "distance_m,grade_rad,vmin_kmh,vmax_kmh\n";
  for (const auto& r : road.samples()) {
    fmt::print(out, "{:.17g},{:.17g},{:.17g},{:.17g}\n", r.position, r.grade, r.v_min() * 3.6, r.v_max() * 3.6);
  }
}

json to_json(const GearMap& map) {
  json doc;
  doc["schema"] = kGearMapSchema;
  doc["version"] = kSchemaVersion;
  doc["kind"] = std::string(to_string(map.kind));
  doc["shape"] = {map.energy.size(), map.force.size()};
  doc["energy_J"] = number_array(map.energy);
  doc["force_N"] = number_array(map.force);
  doc["gear"] = map.gear;
  doc["f_max_N"] = number_array(map.f_max);
  doc["f_min_N"] = number_array(map.f_min);
  doc["f_add_min_N"] = number_array(map.f_add_min);
  return doc;
}

json to_json(const PowerFit& fit) {
  json doc;
  doc["schema"] = kPowerFitSchema;
  doc["version"] = kSchemaVersion;
  doc["kind"] = std::string(to_string(fit.kind));
  doc["p"] = {fit.p[0], fit.p[1], fit.p[2], fit.p[3]};
  doc["v_lo_mps"] = fit.v_lo;
  doc["v_hi_mps"] = fit.v_hi;
  doc["max_rel_error"] = fit.max_rel_error;
  doc["mean_rel_error"] = fit.mean_rel_error;
  doc["sample_count"] = fit.sample_count;
  return doc;
}

json to_json(const ForceLimitFit& fit) {
  json doc;
  doc["schema"] = kForceLimitSchema;
  doc["version"] = kSchemaVersion;
  doc["y0_N"] = fit.y0;
  doc["y1_W"] = fit.y1;
  doc["x0_N"] = fit.x0;
  doc["x1_W"] = fit.x1;
  doc["f_cap_max_N"] = fit.f_cap_max;
  doc["f_cap_min_N"] = fit.f_cap_min;
  doc["v0_mps"] = fit.v0;
  doc["v_max_mps"] = fit.v_max;
  doc["has_min"] = fit.has_min;
  return doc;
}

GearMap gear_map_from_json(const json& doc) {
  const std::string schema = kGearMapSchema;
  check_header(doc, kGearMapSchema);
  GearMap map;
  map.kind = read_kind(doc, schema);
  map.energy = read_array(doc, "energy_J", schema);
  map.force = read_array(doc, "force_N", schema);
  map.f_max = read_array(doc, "f_max_N", schema);
  map.f_min = read_array(doc, "f_min_N", schema);
  map.f_add_min = read_array(doc, "f_add_min_N", schema);
  if (!doc.contains("shape") || !doc.at("shape").is_array() || doc.at("shape").size() != 2) {
    throw ParseError(schema + ": missing 'shape'");
  }
  const auto nE = doc.at("shape")[0].get<std::size_t>();
  const auto nF = doc.at("shape")[1].get<std::size_t>();
  if (nE != map.energy.size() || nF != map.force.size()) throw ParseError(schema + ": shape does not match the grids");
  if (map.f_max.size() != nE || map.f_min.size() != nE || map.f_add_min.size() != nE) {
    throw ParseError(schema + ": limit arrays must have one entry per energy point");
  }
  if (!doc.contains("gear") || !doc.at("gear").is_array()) throw ParseError(schema + ": missing array 'gear'");
  for (const auto& g : doc.at("gear")) {
    if (!g.is_number_integer()) throw ParseError(schema + ": gear entries must be integers");
    map.gear.push_back(g.get<int>());
  }
  if (map.gear.size() != nE * nF) throw ParseError(schema + ": gear table size does not match shape");
  return map;
}

PowerFit power_fit_from_json(const json& doc) {
  const std::string schema = kPowerFitSchema;
  check_header(doc, kPowerFitSchema);
  PowerFit fit;
  fit.kind = read_kind(doc, schema);
  const auto p = read_array(doc, "p", schema);
  if (p.size() != 4) throw ParseError(schema + ": 'p' must have 4 entries");
  std::copy(p.begin(), p.end(), fit.p.begin());
  fit.v_lo = read_number(doc, "v_lo_mps", schema);
  fit.v_hi = read_number(doc, "v_hi_mps", schema);
  fit.max_rel_error = read_number(doc, "max_rel_error", schema);
  fit.mean_rel_error = read_number(doc, "mean_rel_error", schema);
  fit.sample_count = static_cast<std::size_t>(read_number(doc, "sample_count", schema));
  return fit;
}

ForceLimitFit force_limits_from_json(const json& doc) {
  const std::string schema = kForceLimitSchema;
  check_header(doc, kForceLimitSchema);
  ForceLimitFit fit;
  fit.y0 = read_number(doc, "y0_N", schema);
  fit.y1 = read_number(doc, "y1_W", schema);
  fit.x0 = read_number(doc, "x0_N", schema);
  fit.x1 = read_number(doc, "x1_W", schema);
  fit.f_cap_max = read_number(doc, "f_cap_max_N", schema);
  fit.f_cap_min = read_number(doc, "f_cap_min_N", schema);
  fit.v0 = read_number(doc, "v0_mps", schema);
  fit.v_max = read_number(doc, "v_max_mps", schema);
  if (!doc.contains("has_min") || !doc.at("has_min").is_boolean()) throw ParseError(schema + ": missing 'has_min'");
  fit.has_min = doc.at("has_min").get<bool>();
  return fit;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

void save_artifacts(const std::string& dir, const PowertrainArtifacts& art) {
  fs::create_directories(dir);
  write_json_file((fs::path(dir) / "gear_map.json").string(), to_json(art.gears));
  write_json_file((fs::path(dir) / "power_fit.json").string(), to_json(art.power));
  write_json_file((fs::path(dir) / "force_limits.json").string(), to_json(art.limits));
}

PowertrainArtifacts load_artifacts(const std::string& dir) {
  for (const char* name : {"gear_map.json", "power_fit.json", "force_limits.json"}) {
    if (!fs::exists(fs::path(dir) / name)) {
      throw ParseError(fmt::format("missing fitted artifact '{}' in '{}'; run `ecodrive fit-maps --out {}` first",
                                   name, dir, dir));
    }
  }
  PowertrainArtifacts art;
  art.gears = gear_map_from_json(read_json_file((fs::path(dir) / "gear_map.json").string()));
  art.power = power_fit_from_json(read_json_file((fs::path(dir) / "power_fit.json").string()));
  art.limits = force_limits_from_json(read_json_file((fs::path(dir) / "force_limits.json").string()));
  art.kind = art.power.kind;
  if (art.gears.kind != art.kind) throw ParseError("gear map and power fit disagree on the powertrain kind");
  return art;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "s_m,t_s,v_kmh,E_J,a_mps2,j,F_N,F_brk_N,gear\n";
  for (const auto& s : traj.samples) {
    fmt::print(out, "{:.6f},{:.6f},{:.6f},{:.3f},{:.9f},{:.9e},{:.3f},{:.3f},{}\n", s.s, s.t, s.v * 3.6, s.E, s.a,
               s.j, s.F, s.F_brk, s.gear);
  }
}

void write_update_log(std::ostream& out, const std::vector<UpdateRecord>& log, bool timing) {
  for (const auto& r : log) {
    json rec;
    rec["update"] = r.index;
    rec["zeta_m"] = r.zeta;
    rec["s_H_m"] = r.s_H;
    rec["lambda_eur_per_s"] = r.lambda;
    rec["f_s"] = r.f;
    rec["t_H_s"] = r.t_H;
    rec["t_end_s"] = r.t_end;
    rec["qp_iterations"] = r.qp_iterations;
    rec["objective_eur"] = r.objective;
    rec["status"] = std::string(to_string(r.status));
    rec["relaxed"] = r.relaxed;
    if (timing) rec["solve_ms"] = r.solve_ms;
    out << rec.dump() << '\n';
  }
}

json to_json(const RunMetrics& m) {
  return {{"energy_cost", m.energy_cost},   {"drivability_cost", m.drivability_cost},
          {"total_cost", m.total_cost},     {"j_rms", m.j_rms},
          {"brake_norm", m.brake_norm},     {"arrival_time_s", m.arrival_time},
          {"t_f_s", m.t_f}};
}

}  // namespace ecodrive
