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

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecodrive/mpc.hpp"
#include "ecodrive/powertrain.hpp"
#include "ecodrive/vehicle.hpp"

namespace ecodrive {

/// Input error carrying the offending line (1-based, 0 if not line-bound).
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t line = 0);
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// Reads a road CSV. Header must contain distance_m and one of elevation_m /
/// grade_rad; vmin_kmh and vmax_kmh are optional and default to `defaults`.
/// Elevation is turned into per-interval grade atan(dh / ds).
RoadProfile parse_road_csv(std::istream& in, double default_vmin, double default_vmax);
RoadProfile ingest_road(const std::string& path, double default_vmin = 50.0 / 3.6,
                        double default_vmax = 90.0 / 3.6);

struct SyntheticRouteSpec {
  double length = 118e3;      // m
  double spacing = 100.0;     // m between samples
  double max_grade = 0.04;    // |tan(alpha)|
  double v_min = 50.0 / 3.6;  // m/s
  double v_max = 90.0 / 3.6;  // m/s
  std::uint64_t seed = 1;
  int hills = 14;
};

/// Rolling terrain: a few long sinusoids plus seeded raised-cosine hills,
/// with the slope clipped to max_grade.
RoadProfile synthetic_route(const SyntheticRouteSpec& spec);

void write_road_csv(std::ostream& out, const RoadProfile& road);

/// Versioned JSON documents for the offline artifacts. Non-finite table
/// entries are stored as null.
nlohmann::json to_json(const GearMap& map);
nlohmann::json to_json(const PowerFit& fit);
nlohmann::json to_json(const ForceLimitFit& fit);

/// Throw ParseError naming the first schema violation.
GearMap gear_map_from_json(const nlohmann::json& doc);
PowerFit power_fit_from_json(const nlohmann::json& doc);
ForceLimitFit force_limits_from_json(const nlohmann::json& doc);

/// fit-maps output layout: gear_map.json, power_fit.json, force_limits.json.
void save_artifacts(const std::string& dir, const PowertrainArtifacts& art);
/// Throws ParseError if a file is missing; the message points at fit-maps.
PowertrainArtifacts load_artifacts(const std::string& dir);

/// Columns s_m, t_s, v_kmh, E_J, a_mps2, j, F_N, F_brk_N, gear.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// One JSON object per line; `timing` false drops solve_ms for byte-stable output.
void write_update_log(std::ostream& out, const std::vector<UpdateRecord>& log, bool timing = true);

nlohmann::json to_json(const RunMetrics& m);

/// Reads a whole file into a JSON value; throws ParseError.
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);

}  // namespace ecodrive
