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

#include <vector>

#include "ecodrive/ocp.hpp"
#include "ecodrive/powertrain.hpp"
#include "ecodrive/vehicle.hpp"

namespace ecodrive::oracle {

/// Lattice for the value iteration. Energy levels are E_lo + i * dE and the
/// acceleration levels are q * dE / (ds m), so that the forward-Euler energy
/// update lands exactly on the lattice. Refining dE by 2 nests the lattice.
struct DpGrid {
  int energy_points = 200;  // levels across the widest speed band of the segment
  double a_lo = 0.0;        // 0/0 selects the comfort box
  double a_hi = 0.0;
};

struct DpResult {
  bool feasible = false;
  double cost = 0.0;       // discretised cost of the lattice optimum (EUR)
  HorizonPlan plan;
  double energy_step = 0.0;  // J
  double accel_step = 0.0;   // m/s^2
  std::size_t states = 0;    // lattice points per stage
};

/// Backward value iteration over (E, a) with the next acceleration as the
/// decision. Uses the exact stage cost and the fitted nonlinear force limits;
/// F and F_brk are eliminated per state. The initial energy is snapped onto
/// the lattice origin, a0 must be 0.
DpResult dp_solve(const HorizonGrid& grid, const StageCostCoeffs& coeffs, const ForceLimitFit& limits,
                  const VehicleParams& params, double E0, const DpGrid& lattice = {});

/// Violation report per constraint family; values are scaled (forces by
/// 1e4 N, energies by the 20 m/s kinetic energy, accelerations by 1 m/s^2,
/// jerks by the jerk bound, times by the elapsed time, at least 1 s).
struct FeasibilityReport {
  double speed_band = 0.0;
  double force_max = 0.0;
  double force_min = 0.0;
  double accel = 0.0;
  double jerk = 0.0;
  double brake = 0.0;
  double force_identity = 0.0;
  double dynamics = 0.0;
  std::vector<int> defect_nodes;  // nodes whose dynamics defect exceeds tol
  double tol = 1e-6;

  double max() const;
  bool feasible() const { return max() <= tol; }
};

/// Checks a trajectory against the original (pre-linearisation) limits. The
/// dynamics defect compares every node with a forward-Euler replay of the
/// recorded accelerations and jerks from the first sample, so a corrupted
/// state shows up at its own node only.
FeasibilityReport nlp_feasibility_check(const Trajectory& traj, const RoadProfile& road,
                                        const ForceLimitFit& limits, PowertrainKind kind,
                                        const VehicleParams& params, double tol = 1e-6);

}  // namespace ecodrive::oracle
