// Copyright 2026 The pgfair Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Brute-force reference computations for tests: exhaustive search over a
// grid of allocations with a fixed step.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pgfair/model.hpp"

namespace pgfair::testing {

// Visits every allocation w with w[l][t] in {0, 1/steps, ..., 1}, per-round
// sums <= 1 and total <= B, passing the utilities u_i(w) to `visit`.
inline void for_each_grid_allocation(
    const Instance& inst, int steps,
    const std::function<void(const std::vector<double>&)>& visit) {
  const int N = inst.num_agents(), L = inst.num_goods(), T = inst.num_rounds();
  const int cells = L * T;
  const long budget_units = static_cast<long>(std::floor(inst.budget() * steps + 1e-9));
  // One utility vector per depth, so backtracking leaves no rounding residue.
  std::vector<std::vector<double>> u(cells + 1, std::vector<double>(N, 0.0));
  std::function<void(int, long, int)> rec = [&](int cell, long spent, int round_used) {
    if (cell == cells) {
      visit(u[cell]);
      return;
    }
    const int t = cell / L, l = cell % L;
    const int used = l == 0 ? 0 : round_used;
    const long max_units = std::min<long>(steps - used, budget_units - spent);
    for (long k = 0; k <= max_units; ++k) {
      const double w = static_cast<double>(k) / steps;
      for (int i = 0; i < N; ++i) u[cell + 1][i] = u[cell][i] + inst.value(i, l, t) * w;
      rec(cell + 1, spent + k, used + static_cast<int>(k));
    }
  };
  rec(0, 0, 0);
}

// Largest Nash welfare over the grid.
inline double grid_max_nsw(const Instance& inst, int steps) {
  double best = 0.0;
  for_each_grid_allocation(inst, steps, [&](const std::vector<double>& u) {
    double s = 0.0;
    for (double e : u) {
      if (!(e > 0.0)) return;
      s += std::log(e);
    }
    best = std::max(best, std::exp(s / static_cast<double>(u.size())));
  });
  return best;
}

// max_w (1/N) sum_i ratio(u_i(w), u_i(x)) over the grid.
inline double grid_max_pf(const Instance& inst, const std::vector<double>& ux, int steps) {
  double best = 0.0;
  for_each_grid_allocation(inst, steps, [&](const std::vector<double>& u) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += ratio(u[i], ux[i]);
    best = std::max(best, s / static_cast<double>(u.size()));
  });
  return best;
}

}  // namespace pgfair::testing
