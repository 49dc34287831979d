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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "ecodrive/io.hpp"
#include "ecodrive/mpc.hpp"
#include "ecodrive/powertrain.hpp"
#include "ecodrive/vehicle.hpp"

namespace ecodrive {

/// Documented constants for the fuel price conversion.
inline constexpr double kDieselDensity = 0.832;        // kg/l
inline constexpr double kDieselLowerHeating = 42.6e6;  // J/kg

/// EUR/l of diesel to EUR/J of fuel chemical energy.
double fuel_price_per_joule(double eur_per_litre, double density = kDieselDensity,
                            double heating_value = kDieselLowerHeating);
/// EUR/kWh to EUR/J.
double electricity_price_per_joule(double eur_per_kwh);

enum class CaseLabel { Heuristic, Case1, Case2 };
std::string_view to_string(CaseLabel c);
CaseLabel case_from_string(std::string_view name);

struct RouteConfig {
  std::string path;  // empty selects the synthetic generator
  SyntheticRouteSpec synthetic;
  double default_vmin = 50.0 / 3.6;  // m/s, for CSVs without speed columns
  double default_vmax = 90.0 / 3.6;
};

struct RunConfig {
  PowertrainKind kind = PowertrainKind::Conventional;
  VehicleParams vehicle = truck_params();
  PowertrainSetup powertrain;
  std::string artifacts_dir;  // prefitted artifacts; empty = synthesise in-process
  RouteConfig route;
  double fuel_eur_per_litre = 1.51;
  double electricity_eur_per_kwh = 0.18;
  MpcConfig mpc;
  double w1 = 0.0;         // comfort weights of Case 2 (Case 1 uses zero)
  double w2 = 300.0;
  CaseLabel case_label = CaseLabel::Case1;
  std::string out_dir = "out";
  std::uint64_t seed = 1;

  /// Energy price of the configured powertrain, EUR/J.
  double energy_price() const;
  /// Comfort weights of a case: zero for hg and Case 1.
  std::array<double, 2> weights(CaseLabel c) const;
};

/// Defaults for a powertrain kind (vehicle, actuator).
RunConfig default_run_config(PowertrainKind kind);

/// Parses the YAML document. Unknown keys, wrong types and out-of-range
/// values raise ParseError naming the key path.
RunConfig parse_run_config(const std::string& yaml_text);
RunConfig load_run_config(const std::string& path);

/// Serialises the effective configuration (round-trips through parse).
std::string dump_run_config(const RunConfig& cfg);

/// Route described by the configuration (CSV or synthetic with cfg.seed).
RoadProfile load_route(const RunConfig& cfg);

/// Powertrain from artifacts_dir when set, otherwise synthesised.
PowertrainArtifacts load_or_build_powertrain(const RunConfig& cfg);

Scenario make_scenario(const RunConfig& cfg, CaseLabel c);

}  // namespace ecodrive
