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

// Fairness evaluators.
//
// The proportional-fairness value of x is the optimum of the linear program
//
//   max_w (1/N) sum_i u_i(w) / (c_i u_i(x))
//   s.t.  sum_{l,t} w_{l,t} <= B,  sum_l w_{l,t} <= 1,  w >= 0
//
// whose optimum is a fractional knapsack over rounds: each round offers its
// best good, rounds are taken by decreasing coefficient until B runs out.
// The same oracle is the linear step of the offline Nash-welfare benchmark.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgfair/engine.hpp"
#include "pgfair/model.hpp"
#include "pgfair/solver.hpp"

namespace pgfair {

struct KnapsackSolution {
  std::vector<std::pair<std::size_t, double>> entries;  // (t * L + l, amount)
  double value = 0.0;
};

// Maximizes sum kappa[t][l] w[l][t] over the per-round/overall polytope.
// Ties between goods go to the lower good index, between rounds to the
// earlier round. Rounds whose best coefficient is not positive get nothing.
inline KnapsackSolution fractional_knapsack(std::span<const double> kappa,
                                            int num_goods, int num_rounds,
                                            double budget) {
  struct Offer {
    int round;
    int good;
    double coeff;
  };
  std::vector<Offer> offers;
  offers.reserve(num_rounds);
  for (int t = 0; t < num_rounds; ++t) {
    int best = 0;
    for (int l = 1; l < num_goods; ++l)
      if (kappa[t * num_goods + l] > kappa[t * num_goods + best]) best = l;
    const double c = kappa[t * num_goods + best];
    if (c > 0.0) offers.push_back({t, best, c});
  }
  std::stable_sort(offers.begin(), offers.end(),
                   [](const Offer& a, const Offer& b) { return a.coeff > b.coeff; });
  KnapsackSolution sol;
  double left = budget;
  for (const Offer& o : offers) {
    if (left <= 0.0) break;
    const double amount = std::min(1.0, left);
    sol.entries.emplace_back(
        static_cast<std::size_t>(o.round) * num_goods + o.good, amount);
    sol.value += o.coeff * amount;
    left -= amount;
  }
  return sol;
}

inline Allocation knapsack_allocation(const KnapsackSolution& sol, int num_goods,
                                      int num_rounds) {
  std::vector<double> w(static_cast<std::size_t>(num_goods) * num_rounds, 0.0);
  for (auto [k, amount] : sol.entries) w[k] += amount;
  return Allocation::from_total(num_goods, num_rounds, std::move(w));
}

struct PFResult {
  double pf_value = 0.0;
  Allocation witness;
  std::optional<double> dual_bound;
};

namespace detail {

inline std::vector<double> scale_or_ones(std::span<const double> scale_c, int n) {
  if (scale_c.empty()) return std::vector<double>(n, 1.0);
  if (static_cast<int>(scale_c.size()) != n)
    throw StructuralError("scale_c must have one entry per agent");
  return std::vector<double>(scale_c.begin(), scale_c.end());
}

// How each agent enters the PF objective under x.
struct AgentTerms {
  std::vector<double> weight;  // 1 / (N c_i u_i(x)), or 0 for inactive agents
  int constant_agents = 0;     // u_i(x) = 0 and no value anywhere: ratio 0/0 = 1
  int starved_agent = -1;      // u_i(x) = 0 but values something
};

inline AgentTerms agent_terms(const Instance& instance, const UtilityVector& u,
                              const std::vector<double>& c) {
  const int n = instance.num_agents();
  AgentTerms terms;
  terms.weight.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (u[i] > 0.0) {
      terms.weight[i] = 1.0 / (n * c[i] * u[i]);
    } else if (instance.agent_has_value(i)) {
      if (terms.starved_agent < 0) terms.starved_agent = i;
    } else {
      ++terms.constant_agents;
    }
  }
  return terms;
}

inline std::vector<double> knapsack_coefficients(const Instance& instance,
                                                 std::span<const double> weight) {
  const int N = instance.num_agents(), L = instance.num_goods(),
            T = instance.num_rounds();
  std::vector<double> kappa(static_cast<std::size_t>(T) * L, 0.0);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < N; ++i) {
      if (weight[i] == 0.0) continue;
      for (int l = 0; l < L; ++l)
        kappa[t * L + l] += weight[i] * instance.value(i, l, t);
    }
  return kappa;
}

}  // namespace detail

// Exact max_w (1/N) sum_i u_i(w) / (c_i u_i(x)). +inf when some agent gets
// nothing from x but values some good.
inline PFResult evaluate_pf(const Instance& instance, const Allocation& alloc,
                            std::span<const double> scale_c = {}) {
  const int N = instance.num_agents(), L = instance.num_goods(),
            T = instance.num_rounds();
  const auto u = utilities(instance, alloc);
  const auto c = detail::scale_or_ones(scale_c, N);
  const auto terms = detail::agent_terms(instance, u, c);
  PFResult r;
  if (terms.starved_agent >= 0) {
    std::vector<double> only(N, 0.0);
    only[terms.starved_agent] = 1.0;
    const auto kappa = detail::knapsack_coefficients(instance, only);
    r.witness = knapsack_allocation(
        fractional_knapsack(kappa, L, T, instance.budget()), L, T);
    r.pf_value = kInf;
    return r;
  }
  const auto kappa = detail::knapsack_coefficients(instance, terms.weight);
  const auto sol = fractional_knapsack(kappa, L, T, instance.budget());
  r.witness = knapsack_allocation(sol, L, T);
  r.pf_value = sol.value + static_cast<double>(terms.constant_agents) / N;
  return r;
}

struct CertificateCheck {
  bool feasible = false;
  double bound = kInf;          // sum_t p_t + B q (+ constant agents / N)
  double max_violation = 0.0;   // largest shortfall of a dual constraint
  double pf_value = 0.0;
  bool weak_duality_holds = true;
};

// Checks p_t + q >= (1/N) max_l sum_i v_{i,l,t} / (c_i u_i(x)) for every t.
// Agents with no value anywhere and zero utility contribute the constant 1
// to the primal objective, so they add 1/N to the bound instead.
inline CertificateCheck verify_certificate(const Instance& instance,
                                           const Allocation& alloc,
                                           const DualCertificate& cert,
                                           std::span<const double> scale_c = {},
                                           double eps = 1e-6) {
  const int N = instance.num_agents(), L = instance.num_goods(),
            T = instance.num_rounds();
  if (static_cast<int>(cert.p.size()) != T)
    throw StructuralError("certificate: one price per round expected");
  const auto u = utilities(instance, alloc);
  const auto c = detail::scale_or_ones(scale_c, N);
  const auto terms = detail::agent_terms(instance, u, c);

  CertificateCheck r;
  double violation = cert.q < 0.0 ? -cert.q : 0.0;
  double psum = 0.0;
  for (int t = 0; t < T; ++t) {
    violation = std::max(violation, -cert.p[t]);
    psum += cert.p[t];
  }
  if (terms.starved_agent >= 0) {
    violation = kInf;
  } else {
    const auto kappa = detail::knapsack_coefficients(instance, terms.weight);
    for (int t = 0; t < T; ++t) {
      double best = 0.0;
      for (int l = 0; l < L; ++l) best = std::max(best, kappa[t * L + l]);
      violation = std::max(violation, best - (cert.p[t] + cert.q));
    }
  }
  r.max_violation = violation;
  r.feasible = violation <= eps;
  r.bound = psum + instance.budget() * cert.q +
            static_cast<double>(terms.constant_agents) / N;
  r.pf_value = evaluate_pf(instance, alloc, scale_c).pf_value;
  if (r.feasible)
    r.weak_duality_holds = r.pf_value <= r.bound + eps * instance.budget();
  return r;
}

// Geometric mean of utilities; 0 as soon as one agent gets nothing.
inline double nash_welfare(const UtilityVector& u) {
  double s = 0.0;
  for (double e : u) {
    if (!(e > 0.0)) return 0.0;
    s += std::log(e);
  }
  return std::exp(s / static_cast<double>(u.size()));
}

inline double nash_welfare(const Instance& instance, const Allocation& alloc) {
  return nash_welfare(utilities(instance, alloc));
}

struct BenchmarkOptions {
  double objective_tol = 1e-8;   // stop at duality gap <= N * objective_tol
  int max_iterations = 200000;
};

struct BenchmarkResult {
  Allocation allocation;
  bool all_zero = false;     // nobody values anything; allocation is zero
  int iterations = 0;
  double duality_gap = 0.0;
  double pf_value = 1.0;     // self-check, equals 1 + gap / N
};

// Offline maximizer of sum_i ln u_i(w), i.e. a proportionally fair
// allocation. Pairwise Frank-Wolfe over the vertices returned by the
// knapsack oracle, with exact line search in utility space.
inline BenchmarkResult offline_pf_benchmark(const Instance& instance,
                                            const BenchmarkOptions& opt = {}) {
  const int N = instance.num_agents(), L = instance.num_goods(),
            T = instance.num_rounds();
  const double B = instance.budget();
  BenchmarkResult result;

  std::vector<int> active;
  for (int i = 0; i < N; ++i)
    if (instance.agent_has_value(i)) active.push_back(i);
  if (active.empty() || B == 0.0) {
    result.allocation = Allocation::zeros(L, T);
    result.all_zero = active.empty();
    result.pf_value = evaluate_pf(instance, result.allocation).pf_value;
    return result;
  }
  const int n = static_cast<int>(active.size());

  struct Vertex {
    KnapsackSolution sol;
    std::vector<double> u;  // utilities of the active agents
    double weight = 0.0;
  };
  std::vector<Vertex> verts;
  std::map<std::vector<std::pair<std::size_t, double>>, std::size_t> index;

  auto vertex_utilities = [&](const KnapsackSolution& sol) {
    std::vector<double> u(n, 0.0);
    for (auto [k, amount] : sol.entries) {
      const int t = static_cast<int>(k / L), l = static_cast<int>(k % L);
      for (int a = 0; a < n; ++a) u[a] += instance.value(active[a], l, t) * amount;
    }
    return u;
  };
  auto find_or_add = [&](KnapsackSolution sol) {
    auto it = index.find(sol.entries);
    if (it != index.end()) return it->second;
    Vertex v{sol, vertex_utilities(sol), 0.0};
    index.emplace(v.sol.entries, verts.size());
    verts.push_back(std::move(v));
    return verts.size() - 1;
  };

  // Start from the average of each agent's favourite vertex so every active
  // agent has positive utility.
  for (int a = 0; a < n; ++a) {
    std::vector<double> only(N, 0.0);
    only[active[a]] = 1.0;
    const auto kappa = detail::knapsack_coefficients(instance, only);
    const std::size_t k = find_or_add(fractional_knapsack(kappa, L, T, B));
    verts[k].weight += 1.0 / n;
  }

  std::vector<double> u(n), dir(n), weight(N, 0.0);
  const double gap_tol = N * opt.objective_tol;
  for (int it = 0;; ++it) {
    result.iterations = it;
    std::fill(u.begin(), u.end(), 0.0);
    for (const Vertex& v : verts)
      if (v.weight > 0.0)
        for (int a = 0; a < n; ++a) u[a] += v.weight * v.u[a];

    // Gradient of sum ln u_i in w is kappa = sum_i v_i / u_i.
    std::fill(weight.begin(), weight.end(), 0.0);
    for (int a = 0; a < n; ++a) weight[active[a]] = 1.0 / u[a];
    const auto kappa = detail::knapsack_coefficients(instance, weight);
    // <kappa, vertex> = sum_a u_a(vertex) / u_a, and <kappa, w> = n.
    auto score = [&](const Vertex& v) {
      double s = 0.0;
      for (int a = 0; a < n; ++a) s += v.u[a] / u[a];
      return s;
    };
    const std::size_t s_idx = find_or_add(fractional_knapsack(kappa, L, T, B));
    const double gap = score(verts[s_idx]) - n;
    result.duality_gap = gap;
    if (gap <= gap_tol) break;
    if (it >= opt.max_iterations)
      throw SolverError("offline_pf_benchmark: no convergence after " +
                        std::to_string(it) + " iterations (gap " +
                        std::to_string(gap) + ")");

    std::size_t a_idx = s_idx;
    double worst = kInf;
    for (std::size_t k = 0; k < verts.size(); ++k) {
      if (verts[k].weight <= 0.0) continue;
      const double sc = score(verts[k]);
      if (sc < worst) {
        worst = sc;
        a_idx = k;
      }
    }
    if (a_idx == s_idx) break;  // only the FW vertex is active: optimum
    for (int a = 0; a < n; ++a) dir[a] = verts[s_idx].u[a] - verts[a_idx].u[a];
    const double max_step = verts[a_idx].weight;
    const double step = detail::log_sum_line_search(u, dir, 1.0, 0.0, max_step);
    if (step <= 0.0) break;
    if (step >= max_step) {
      verts[s_idx].weight += verts[a_idx].weight;
      verts[a_idx].weight = 0.0;
    } else {
      verts[s_idx].weight += step;
      verts[a_idx].weight -= step;
    }
  }

  std::vector<double> w(static_cast<std::size_t>(L) * T, 0.0);
  double total_weight = 0.0;
  for (const Vertex& v : verts) total_weight += v.weight;
  for (const Vertex& v : verts) {
    if (v.weight <= 0.0) continue;
    for (auto [k, amount] : v.sol.entries) w[k] += v.weight / total_weight * amount;
  }
  for (double& e : w) e = std::clamp(e, 0.0, 1.0);
  result.allocation = Allocation::from_total(L, T, std::move(w));
  result.pf_value = evaluate_pf(instance, result.allocation).pf_value;
  return result;
}

// NSW(benchmark) / NSW(alloc), with 0/0 = 1.
inline double nsw_ratio_report(double benchmark_nsw, const Instance& instance,
                               const Allocation& alloc) {
  return ratio(benchmark_nsw, nash_welfare(instance, alloc));
}

inline double nsw_ratio_report(const Instance& instance, const Allocation& alloc) {
  const auto bench = offline_pf_benchmark(instance);
  return nsw_ratio_report(nash_welfare(instance, bench.allocation), instance, alloc);
}

// max_{l in [S]} (l+1) / (W + sum_{j<=l} j y_j) >= H_S / (2W).
inline bool harmonic_lemma_check(int S, double W, std::span<const double> y) {
  if (S < 1) throw ArgumentError("harmonic_lemma_check: S must be >= 1");
  if (!(W >= 1.0)) throw ArgumentError("harmonic_lemma_check: W must be >= 1");
  if (static_cast<int>(y.size()) != S)
    throw ArgumentError("harmonic_lemma_check: y must have S entries");
  double total = 0.0;
  for (double e : y) {
    if (!(e >= 0.0 && e <= 1.0))
      throw ArgumentError("harmonic_lemma_check: y must lie in [0, 1]");
    total += e;
  }
  if (total > W * (1.0 + 1e-12))
    throw ArgumentError("harmonic_lemma_check: sum y exceeds W");
  double best = 0.0, weighted = 0.0;
  for (int l = 1; l <= S; ++l) {
    weighted += l * y[l - 1];
    best = std::max(best, (l + 1) / (W + weighted));
  }
  return best >= harmonic(S) / (2.0 * W);
}

}  // namespace pgfair
