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

#include <cmath>
#include <vector>

#include "ecodrive/powertrain.hpp"

namespace testing_support {

// Straightforward per-cell reference for the offline gear choice.
inline int enumerate_gear(const ecodrive::WheelTables& t, std::size_t iE, std::size_t iF) {
  const double F = t.force[iF];
  std::vector<int> window;
  for (int g = 0; g < t.gear_count; ++g) {
    if (!std::isnan(t.f_max[g][iE])) window.push_back(g);
  }
  if (window.empty()) return 0;
  if (t.kind == ecodrive::PowertrainKind::Electric) {
    double fmax = t.f_max[0][iE];
    return (F <= fmax && F >= t.f_min[0][iE] + t.brake_floor) ? 1 : 0;
  }
  if (F >= 0.0) {
    int best = 0;
    double bp = 0.0;
    for (int g : window) {
      if (F > t.f_max[g][iE]) continue;
      const double p = t.power[g](static_cast<Eigen::Index>(iE), static_cast<Eigen::Index>(iF));
      if (best == 0 || p < bp) {
        best = g + 1;
        bp = p;
      }
    }
    return best;
  }
  double fa_min = 0.0;
  for (int g : window) fa_min = std::min(fa_min, t.f_brake[g][iE]);
  if (F >= fa_min) {
    int best = 0;
    for (int g : window) {
      if (t.f_brake[g][iE] > F) continue;
      if (best == 0 || t.f_brake[g][iE] > t.f_brake[best - 1][iE]) best = g + 1;
    }
    return best;
  }
  if (F < t.brake_floor) return 0;
  int best = 0;
  for (int g : window) {
    if (best == 0 || t.f_brake[g][iE] < t.f_brake[best - 1][iE]) best = g + 1;
  }
  return best;
}

}  // namespace testing_support
