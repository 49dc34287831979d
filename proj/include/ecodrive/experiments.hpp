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

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecodrive/config.hpp"
#include "ecodrive/mpc.hpp"

namespace ecodrive {

/// One leg of the hg / case1 / case2 comparison. Drivability is evaluated
/// with the reference comfort weights for every leg so the rows compare.
struct CaseOutcome {
  CaseLabel label = CaseLabel::Case1;
  RunMetrics metrics;
  double improvement_pct = 0.0;  // total-cost saving relative to hg
  double lambda_final = 0.0;     // EUR/s, 0 for hg
  Trajectory trajectory;
  std::vector<UpdateRecord> log;
  bool aborted = false;
};

/// Runs the three legs concurrently on a shared base scenario.
std::vector<CaseOutcome> compare_cases(const RunConfig& cfg, const Scenario& base);

nlohmann::json to_json(const CaseOutcome& c);

struct SweepPoint {
  double w2 = 0.0;
  RunMetrics metrics;  // drivability with the point's own w2
  bool aborted = false;
};

/// Closed loop per comfort weight, legs run concurrently.
std::vector<SweepPoint> sweep_w2(const RunConfig& cfg, const Scenario& base, const std::vector<double>& w2_values);

/// Start of the window of `length` with the largest mean |grade|, scanned
/// in `step` increments.
double hilliest_window(const RoadProfile& road, double length, double step = 100.0);

struct OracleLevel {
  int energy_points = 0;
  bool feasible = false;
  double dp_cost = 0.0;
  double gap_pct = 0.0;  // (dp - sqp) / sqp
  std::size_t states = 0;
  double ms = 0.0;
};

struct OracleReport {
  double start = 0.0;
  double length = 0.0;
  int N = 0;
  double lambda = 0.0;
  double v0 = 0.0;
  double sqp_cost = 0.0;
  bool sqp_converged = false;
  int sqp_iterations = 0;
  std::vector<OracleLevel> levels;

  /// |gap| non-increasing from level to level.
  bool monotone() const;
};

struct OracleSetup {
  double start = -1.0;  // m, < 0 picks the hilliest window
  double length = 6000.0;
  int N = 20;
  double lambda = 0.0;      // EUR/s
  double v0 = 75.0 / 3.6;   // initial speed, clipped into the band
  double a_abs = 0.6;       // DP acceleration range +-a_abs
  std::vector<int> energy_points{101, 201, 401};
};

/// SQP-converged horizon cost against the DP lattice optimum on a segment.
OracleReport oracle_compare(const Scenario& sc, const OracleSetup& setup);

nlohmann::json to_json(const OracleReport& r);

struct BenchPoint {
  int N = 0;
  double solve_ms = 0.0;  // median single-QP time
  int qp_iterations = 0;
};

/// Single-QP timings over the whole route about the heuristic guess.
std::vector<BenchPoint> bench_qp(const Scenario& sc, double v_cru, double lambda, const std::vector<int>& Ns,
                                 int repeats = 5);

/// Coefficient of determination of the least-squares line y = a + b x.
double linear_r2(const std::vector<double>& x, const std::vector<double>& y);

/// Costate that meets the heuristic travel time over the whole route.
double route_costate(const Scenario& sc, const MpcConfig& cfg);

}  // namespace ecodrive
