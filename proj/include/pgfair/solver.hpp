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

// Per-round greedy subproblems of the set-aside greedy allocators.
//
// For one round with values v[i][l] and running promised utilities gamma[i],
//
//   u~_i(z)  = gamma_i + sum_l v[i][l] z_l
//   Phi_l(z) = (1/N) sum_i v[i][l] / u~_i(z)
//
// Phi_l is the partial derivative of (1/N) sum_i ln u~_i(z) in z_l. The
// single-good rule inverts Phi by bisection; the batched rule maximizes
//
//   F(z, lambda) = (1/N) sum_i ln u~_i(z) + lambda q
//
// over {z, lambda >= 0, sum_l z_l + lambda = cap} by pairwise Frank-Wolfe.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pgfair/model.hpp"

namespace pgfair {

struct SolverTolerances {
  double bisect = 1e-10;     // absolute, in z
  double objective = 1e-8;   // Frank-Wolfe duality gap
  double kkt = 1e-6;         // certified KKT residual
  int max_iterations = 100000;
};

// Running promised utilities gamma_i carried between rounds.
class GreedyState {
 public:
  GreedyState() = default;
  explicit GreedyState(std::vector<double> gamma) : gamma_(std::move(gamma)) {}

  std::span<const double> gamma() const { return gamma_; }
  double gamma(int agent) const { return gamma_[agent]; }
  int num_agents() const { return static_cast<int>(gamma_.size()); }

  void set_floor(int agent, double value) { gamma_[agent] = value; }

  // Adds sum_l v[i][l] z_l to every agent.
  void accumulate(const RoundBatch& batch, std::span<const double> z) {
    for (int i = 0; i < batch.num_agents; ++i) {
      double gain = 0.0;
      for (int l = 0; l < batch.num_goods; ++l) gain += batch.value(i, l) * z[l];
      gamma_[i] += gain;
    }
  }

 private:
  std::vector<double> gamma_;
};

class PhiFunction {
 public:
  PhiFunction(const RoundBatch& batch, std::span<const double> gamma)
      : num_agents_(batch.num_agents),
        num_goods_(batch.num_goods),
        values_(batch.values),
        gamma_(gamma.begin(), gamma.end()) {
    if (static_cast<int>(gamma_.size()) != num_agents_)
      throw StructuralError("phi: gamma size does not match the batch");
  }

  PhiFunction(int num_agents, int num_goods, std::vector<double> values,
              std::vector<double> gamma)
      : num_agents_(num_agents),
        num_goods_(num_goods),
        values_(std::move(values)),
        gamma_(std::move(gamma)) {
    if (values_.size() != static_cast<std::size_t>(num_agents_) * num_goods_ ||
        static_cast<int>(gamma_.size()) != num_agents_)
      throw StructuralError("phi: inconsistent dimensions");
  }

  int num_agents() const { return num_agents_; }
  int num_goods() const { return num_goods_; }
  double value(int agent, int good) const {
    return values_[static_cast<std::size_t>(agent) * num_goods_ + good];
  }
  double gamma(int agent) const { return gamma_[agent]; }

  bool agent_active(int agent) const {
    for (int l = 0; l < num_goods_; ++l)
      if (value(agent, l) > 0.0) return true;
    return false;
  }

  // True when some agent values this round but has nothing promised yet.
  bool degenerate() const {
    for (int i = 0; i < num_agents_; ++i)
      if (gamma_[i] <= 0.0 && agent_active(i)) return true;
    return false;
  }

  double promised(int agent, std::span<const double> z) const {
    double u = gamma_[agent];
    for (int l = 0; l < num_goods_; ++l) u += value(agent, l) * z[l];
    return u;
  }

  std::vector<double> promised_all(std::span<const double> z) const {
    std::vector<double> u(num_agents_);
    for (int i = 0; i < num_agents_; ++i) u[i] = promised(i, z);
    return u;
  }

  // Phi_l for every good, from precomputed promised utilities.
  std::vector<double> partials_from(std::span<const double> promised) const {
    std::vector<double> g(num_goods_, 0.0);
    for (int i = 0; i < num_agents_; ++i) {
      for (int l = 0; l < num_goods_; ++l) {
        const double v = value(i, l);
        if (v > 0.0) g[l] += v / promised[i];
      }
    }
    for (double& e : g) e /= num_agents_;
    return g;
  }

  std::vector<double> partials(std::span<const double> z) const {
    return partials_from(promised_all(z));
  }

  double max_partial(std::span<const double> z) const {
    auto g = partials(z);
    return *std::max_element(g.begin(), g.end());
  }

  // Single-good specialisation Phi(z) and its derivative.
  double scalar(double z) const {
    double s = 0.0;
    for (int i = 0; i < num_agents_; ++i) {
      const double v = value(i, 0);
      if (v > 0.0) s += v / (gamma_[i] + v * z);
    }
    return s / num_agents_;
  }

  double scalar_derivative(double z) const {
    double s = 0.0;
    for (int i = 0; i < num_agents_; ++i) {
      const double v = value(i, 0);
      if (v > 0.0) {
        const double u = gamma_[i] + v * z;
        s -= v * v / (u * u);
      }
    }
    return s / num_agents_;
  }

  // F(z, lambda), restricted to agents that value some good this round;
  // the others only add a constant.
  double objective(std::span<const double> z, double lambda, double q) const {
    double f = 0.0;
    for (int i = 0; i < num_agents_; ++i)
      if (agent_active(i)) f += std::log(promised(i, z));
    return f / num_agents_ + lambda * q;
  }

 private:
  int num_agents_ = 0;
  int num_goods_ = 0;
  std::vector<double> values_;  // [i][l]
  std::vector<double> gamma_;
};

struct GreedySolution {
  std::vector<double> z;
  double lambda = 0.0;
  double kkt_residual = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
};

namespace detail {

inline void require_nondegenerate(const PhiFunction& phi, const char* who) {
  if (phi.degenerate())
    throw DegeneratePredictionError(std::string(who) +
                                    ": agent with positive value has zero "
                                    "promised utility");
}

// Maximizes h(d) = scale * sum_i ln(base_i + d dir_i) + lin * d over
// [0, max_step]. h is concave; base_i + d dir_i must stay positive on the
// interval for every i with dir_i != 0.
inline double log_sum_line_search(std::span<const double> base,
                                  std::span<const double> dir, double scale,
                                  double lin, double max_step) {
  auto slope = [&](double d) {
    double s = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i)
      if (dir[i] != 0.0) s += dir[i] / (base[i] + d * dir[i]);
    return scale * s + lin;
  };
  auto curvature = [&](double d) {
    double s = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i)
      if (dir[i] != 0.0) {
        const double w = base[i] + d * dir[i];
        s -= dir[i] * dir[i] / (w * w);
      }
    return scale * s;
  };
  if (!(max_step > 0.0) || slope(0.0) <= 0.0) return 0.0;
  if (slope(max_step) >= 0.0) return max_step;
  // Safeguarded Newton on h' inside the bracket [lo, hi].
  double lo = 0.0, hi = max_step;
  double d = 0.5 * max_step;
  for (int k = 0; k < 200; ++k) {
    const double s = slope(d);
    if (s == 0.0) return d;
    (s > 0.0 ? lo : hi) = d;
    const double c = curvature(d);
    double next = c < 0.0 ? d - s / c : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == d) return d;
    d = next;
  }
  return d;
}

}  // namespace detail

// Smallest z in [0, cap] with Phi(z) <= q, or cap when none exists. `cap`
// may be +inf.
inline double solve_threshold_L1(const PhiFunction& phi, double q, double cap,
                                 const SolverTolerances& tol = {}) {
  if (phi.num_goods() != 1)
    throw StructuralError("solve_threshold_L1: needs a single good per round");
  if (!(q > 0.0)) throw ArgumentError("solve_threshold_L1: q must be positive");
  if (!(cap >= 0.0)) throw ArgumentError("solve_threshold_L1: cap must be >= 0");
  detail::require_nondegenerate(phi, "solve_threshold_L1");

  if (phi.scalar(0.0) <= q) return 0.0;

  double hi = cap;
  if (std::isinf(cap)) {
    hi = 1.0;
    while (phi.scalar(hi) > q) hi *= 2.0;
  } else if (phi.scalar(cap) > q) {
    return cap;
  }

  // Invariant: Phi(lo) > q >= Phi(hi).
  double lo = 0.0;
  while (hi - lo > tol.bisect) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (phi.scalar(mid) > q ? lo : hi) = mid;
  }

  // Phi is convex and decreasing, so Newton from the left of the root
  // increases monotonically and never overshoots.
  double z = lo;
  for (int k = 0; k < 60; ++k) {
    const double f = phi.scalar(z) - q;
    if (f <= 0.0) break;
    const double next = std::min(hi, z - f / phi.scalar_derivative(z));
    if (!(next > z)) break;
    z = next;
  }
  return z;
}

// Maximum KKT violation of (z, lambda) for the batched subproblem:
//   (a) z_l > 0           => Phi_l = max Phi
//   (b) lambda > 0        => max Phi <= q
//   (c) sum z > 0         => max Phi >= q
inline double check_kkt(const GreedySolution& solution, const PhiFunction& phi,
                        double q, double eps = kFeasTol) {
  const auto g = phi.partials(solution.z);
  const double top = *std::max_element(g.begin(), g.end());
  double residual = 0.0;
  double zsum = 0.0;
  for (std::size_t l = 0; l < g.size(); ++l) {
    zsum += solution.z[l];
    if (solution.z[l] > 0.0) residual = std::max(residual, top - g[l]);
  }
  if (solution.lambda > eps) residual = std::max(residual, top - q);
  if (zsum > eps) residual = std::max(residual, q - top);
  return residual;
}

// Maximizes F over the scaled simplex of size `budget_cap`. Coordinates are
// z_0..z_{L-1} followed by lambda; the vertex cap * e_j has F-gradient entry
// Phi_j (or q for lambda). Each iteration moves mass from the worst active
// coordinate to the best one with an exact line search, which converges
// linearly here and removes stale coordinates exactly.
inline GreedySolution solve_batched(const PhiFunction& phi, double q,
                                    double budget_cap,
                                    const SolverTolerances& tol = {}) {
  if (!(budget_cap >= 0.0))
    throw ArgumentError("solve_batched: budget cap must be >= 0");
  if (!(q > 0.0)) throw ArgumentError("solve_batched: q must be positive");
  detail::require_nondegenerate(phi, "solve_batched");

  const int n = phi.num_agents();
  const int L = phi.num_goods();
  const int lam = L;
  std::vector<double> x(L + 1, 0.0);
  x[lam] = budget_cap;

  GreedySolution sol;
  auto finish = [&](double gap) {
    sol.z.assign(x.begin(), x.begin() + L);
    sol.lambda = x[lam];
    sol.duality_gap = gap;
    sol.kkt_residual = check_kkt(sol, phi, q);
    return sol;
  };
  if (budget_cap == 0.0) return finish(0.0);

  std::vector<double> grad(L + 1);
  std::vector<double> u(n);
  std::vector<double> dir(n);
  for (int it = 0;; ++it) {
    sol.iterations = it;
    const std::span<const double> z(x.data(), L);
    for (int i = 0; i < n; ++i) u[i] = phi.promised(i, z);
    auto partial = phi.partials_from(u);
    std::copy(partial.begin(), partial.end(), grad.begin());
    grad[lam] = q;

    // Lowest index wins among equal partials; lambda comes last.
    int best = 0;
    for (int j = 1; j <= L; ++j)
      if (grad[j] > grad[best]) best = j;
    int worst = -1;
    for (int j = 0; j <= L; ++j)
      if (x[j] > 0.0 && (worst < 0 || grad[j] < grad[worst])) worst = j;

    double inner = 0.0;
    for (int j = 0; j <= L; ++j) inner += x[j] * grad[j];
    const double fw_gap = budget_cap * grad[best] - inner;
    const double pair_gap = grad[best] - grad[worst];
    const double pair_tol = std::max(1e-3 * tol.kkt, 1e-13 * grad[best]);
    if (fw_gap <= tol.objective && pair_gap <= pair_tol) return finish(fw_gap);
    if (it >= tol.max_iterations)
      throw SolverError("solve_batched: no convergence after " +
                        std::to_string(it) + " iterations (gap " +
                        std::to_string(fw_gap) + ")");

    // h(d) = F(x + d (e_best - e_worst)), d in [0, x_worst].
    for (int i = 0; i < n; ++i)
      dir[i] = (best < L ? phi.value(i, best) : 0.0) -
               (worst < L ? phi.value(i, worst) : 0.0);
    const double lin = (best == lam ? q : 0.0) - (worst == lam ? q : 0.0);
    const double max_step = x[worst];
    const double step =
        detail::log_sum_line_search(u, dir, 1.0 / n, lin, max_step);
    if (step >= max_step) {
      x[best] += x[worst];
      x[worst] = 0.0;
    } else {
      if (step <= 0.0) {
        // No representable improvement left along this pair.
        return finish(fw_gap);
      }
      x[best] += step;
      x[worst] -= step;
    }
  }
}

}  // namespace pgfair
