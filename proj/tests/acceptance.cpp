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


// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Every criterion runs at its pinned tolerance.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pgfair.hpp"

using namespace pgfair;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct CertifiedRun {
  Instance instance;
  EngineRun run;
};

// Runs that carry a certified alpha; criterion 12 rechecks all of them.
std::vector<CertifiedRun> g_certified;

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

AlgorithmConfig batched_config(int n) {
  AlgorithmConfig c;
  c.variant = Variant::kBatched;
  c.d_bound.assign(n, 1.0);
  return c;
}

// Runs of criterion 1, reused by 2 and 3.
struct BatchedSample {
  Instance instance;
  EngineRun run;
  double alpha;
};
std::vector<BatchedSample> g_batched;

void build_batched_sample() {
  std::mt19937_64 rng(20260101);
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  for (int k = 0; k < 200; ++k) {
    const int n = pick(2, 8), L = pick(1, 4), T = pick(20, 200);
    const double B = std::uniform_real_distribution<double>(1.0, T)(rng);
    const auto inst = gen_random(n, L, T, B, Distribution::uniform01(), 1000 + k);
    const double alpha = 4.0 * std::log(2.0 * std::min(n, L) * T / B);
    auto cfg = batched_config(n);
    cfg.alpha = alpha;
    auto run = run_algorithm(inst, PredictionSet::perfect(inst), cfg);
    g_certified.push_back({inst, run});
    g_batched.push_back({inst, std::move(run), alpha});
  }
}

Outcome ac1() {
  build_batched_sample();
  double worst = -kInf;
  int bad = 0;
  for (const auto& s : g_batched) {
    const double pf = evaluate_pf(s.instance, s.run.allocation).pf_value;
    worst = std::max(worst, pf - s.alpha);
    if (!(pf <= s.alpha + 1e-4)) ++bad;
  }
  return {bad == 0, fmt("200 runs, max(pf - alpha) = %.6g, violations %g", worst, bad)};
}

Outcome ac2() {
  double worst = -kInf;
  int bad = 0;
  for (const auto& s : g_batched) {
    // Independent sum over the stored allocation and certificate.
    double lhs = 0.0;
    for (int t = 0; t < s.instance.num_rounds(); ++t)
      lhs += (s.run.certificate.p[t] + s.run.certificate.q) * s.run.allocation.round_greedy(t);
    worst = std::max(worst, lhs - s.alpha / 4);
    if (!(lhs <= s.alpha / 4 + 1e-5)) ++bad;
  }
  return {bad == 0, fmt("max(sum (p+q) z - alpha/4) = %.6g, violations %g", worst, bad)};
}

Outcome ac3() {
  double worst_budget = -kInf, worst_round = -kInf, worst_floor = -kInf;
  int bad = 0;
  for (const auto& s : g_batched) {
    const auto& inst = s.instance;
    const auto& a = s.run.allocation;
    const int n = inst.num_agents(), L = inst.num_goods(), T = inst.num_rounds();
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
      double round = 0.0;
      for (int l = 0; l < L; ++l) {
        const double x = a.set_aside(l, t) + a.greedy(l, t);
        if (x < -1e-9 || x > 1 + 1e-9) ++bad;
        round += x;
      }
      worst_round = std::max(worst_round, round - 1.0);
      total += round;
    }
    worst_budget = std::max(worst_budget, total - inst.budget());
    if (total > inst.budget() + 1e-9) ++bad;
    const double scale = inst.budget() / (2.0 * std::min(n, L) * T);
    for (int i = 0; i < n; ++i) {
      double got = 0.0, v = 0.0;
      for (int t = 0; t < T; ++t) {
        double best = 0.0;
        for (int l = 0; l < L; ++l) {
          got += inst.value(i, l, t) * a.set_aside(l, t);
          best = std::max(best, inst.value(i, l, t));
        }
        v += best;
      }
      worst_floor = std::max(worst_floor, scale * v - got);
      if (got < scale * v - 1e-9) ++bad;
    }
  }
  if (worst_round > 1e-9) ++bad;
  return {bad == 0, fmt("max budget excess %.3g, max round excess %.3g, max floor shortfall %.3g",
                        worst_budget, worst_round, worst_floor)};
}

Outcome ac4() {
  std::mt19937_64 rng(4242);
  double worst_pf = -kInf, worst_z = 0.0;
  int bad = 0;
  for (int k = 0; k < 100; ++k) {
    const int n = std::uniform_int_distribution<int>(1, 16)(rng);
    const int T = std::uniform_int_distribution<int>(1, 300)(rng);
    const double p = std::uniform_real_distribution<double>(0.02, 0.6)(rng);
    const auto inst = gen_random(n, 1, T, 1.0, Distribution::binary(p), 5000 + k);
    AlgorithmConfig cfg;
    cfg.variant = Variant::kBinary;
    cfg.alpha = 2.0 * std::log(2.0 * n);
    const auto run = run_algorithm(inst, {}, cfg);
    const double pf = evaluate_pf(inst, run.allocation).pf_value;
    const double zsum = run.allocation.greedy_sum();
    worst_pf = std::max(worst_pf, pf - *cfg.alpha);
    worst_z = std::max(worst_z, zsum);
    if (!(pf <= *cfg.alpha + 1e-4) || !(zsum <= 0.5 + 1e-9)) ++bad;
    g_certified.push_back({inst, run});
  }
  return {bad == 0, fmt("100 runs, max(pf - 2 ln 2N) = %.6g, max sum z = %.6g, violations %g",
                        worst_pf, worst_z, bad)};
}

Outcome suite_outcome(SuiteFamily f, const SuiteParams& p, double floor) {
  const auto s = lower_bound_suite(f, p);
  const bool ok = s.passed && s.max_ratio >= floor - 1e-6 && std::abs(s.floor - floor) < 1e-12;
  return {ok, fmt("max ratio %.6g, floor %.6g", s.max_ratio, floor)};
}

Outcome ac5() {
  Outcome out;
  for (int n : {4, 6, 8}) {
    SuiteParams p;
    p.n = n;
    const auto o = suite_outcome(SuiteFamily::kBinary, p, harmonic(n) / 2);
    out.pass = out.pass && o.pass;
    out.detail += (out.detail.empty() ? "" : "; ") + std::string("N=") + std::to_string(n) +
                  ": " + o.detail;
  }
  // Floor at N = 4 is exactly 25/24.
  out.pass = out.pass && std::abs(harmonic(4) / 2 - 25.0 / 24) < 1e-15;
  return out;
}

Outcome ac6() {
  SuiteParams p;
  p.horizon = 8;
  p.budget = 1;
  p.m = 1e3;
  return suite_outcome(SuiteFamily::kGeometric, p, 4.0);
}

Outcome ac7() {
  SuiteParams p;
  p.t_prime = 6;
  p.budget = 1;
  return suite_outcome(SuiteFamily::kPredictionHardness, p, harmonic(6) / 2);
}

Outcome ac8() {
  const int n = 5, L = 3, T = 120;
  const double B = 8;
  const auto inst = gen_random(n, L, T, B, Distribution::uniform01(), 88);
  Outcome out;
  for (int e = 0; e <= 3; ++e) {
    const double D = std::exp(static_cast<double>(e));
    const auto pred = gen_predictions(inst, std::vector<double>(n, 1.0),
                                      std::vector<double>(n, D), PredictionMode::kWorstUnder, 0);
    AlgorithmConfig cfg;
    cfg.variant = Variant::kBatched;
    cfg.d_bound.assign(n, D);
    const auto run = run_algorithm(inst, pred, cfg);
    const double pf = evaluate_pf(inst, run.allocation).pf_value;
    const double bound = 4 * std::log(2.0 * std::min(n, L) * T / B) + 4 * std::log(D);
    if (!(pf <= bound + 1e-4)) out.pass = false;
    out.detail += fmt("D=e^%g: pf %.5g <= %.5g; ", e, pf, bound);
    g_certified.push_back({inst, run});
  }
  return out;
}

Outcome ac9() {
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_diff = 0.0, worst_kkt = 0.0;
  for (int k = 0; k < 500; ++k) {
    const int n = 1 + static_cast<int>(rng() % 10);
    std::vector<double> v(n), g(n);
    for (int i = 0; i < n; ++i) {
      v[i] = u(rng) < 0.25 ? 0.0 : u(rng) * 3;
      g[i] = std::pow(10.0, -3 + 3 * u(rng));
    }
    const PhiFunction phi(n, 1, v, g);
    const double q = std::pow(10.0, -1 + 2 * u(rng));
    const double cap = 0.5 + 0.5 * u(rng);
    const auto batched = solve_batched(phi, q, cap);
    const double z = solve_threshold_L1(phi, q, cap);
    worst_diff = std::max(worst_diff, std::abs(batched.z[0] - z));
    const GreedySolution threshold{{z}, cap - z, 0, 0, 0};
    worst_kkt = std::max({worst_kkt, batched.kkt_residual, check_kkt(threshold, phi, q)});
  }
  return {worst_diff <= 1e-6 && worst_kkt <= 1e-6,
          fmt("500 rounds, max |z_batched - z_threshold| = %.3g, max KKT residual = %.3g",
              worst_diff, worst_kkt)};
}

Outcome ac10() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int failures = 0;
  for (int k = 0; k < 100000; ++k) {
    const int S = 1 + static_cast<int>(rng() % 50);
    const double W = 1.0 + 9.0 * u(rng);
    std::vector<double> y(S);
    switch (k % 4) {
      case 0:  // independent uniform
        for (auto& e : y) e = u(rng);
        break;
      case 1:  // sparse
        for (auto& e : y) e = u(rng) < 0.2 ? u(rng) : 0.0;
        break;
      case 2:  // mass pushed to the tail, the extremal shape
        for (int l = 1; l <= S; ++l)
          y[l - 1] = std::clamp(2.0 * W / harmonic(S) - W / l + 0.1 * (u(rng) - 0.5), 0.0, 1.0);
        break;
      case 3:  // saturate the budget from a random start
        for (int l = static_cast<int>(rng() % S); l < S; ++l) y[l] = 1.0;
        break;
    }
    double s = 0.0;
    for (double e : y) s += e;
    if (s > W)
      for (auto& e : y) e *= W / s * (1 - 1e-15);
    if (!harmonic_lemma_check(S, W, y)) ++failures;
  }
  return {failures == 0, fmt("100000 inputs, %g failures", failures)};
}

Outcome ac11() {
  std::mt19937_64 rng(1111);
  double worst_nsw = 0.0, worst_pf = 0.0;
  int bad = 0;
  for (int k = 0; k < 50; ++k) {
    // Keep the grid at no more than six cells so exhaustive search stays cheap.
    int L = 1 + static_cast<int>(rng() % 3);
    int T = 1 + static_cast<int>(rng() % (6 / L));
    if (L > 1 && T == 1 && rng() % 2) L = 1, T = 2 + static_cast<int>(rng() % 5);
    const int n = 1 + static_cast<int>(rng() % 4);
    const double B = 1 + static_cast<int>(rng() % T);
    const auto dist = k % 3 == 0 ? Distribution::sparse(0.6) : Distribution::uniform01();
    const auto inst = gen_random(n, L, T, B, dist, 7000 + k);
    const auto bench = offline_pf_benchmark(inst);
    const double nsw = nash_welfare(inst, bench.allocation);
    const double grid = testing::grid_max_nsw(inst, 20);
    const double pf = evaluate_pf(inst, bench.allocation).pf_value;
    worst_nsw = std::max(worst_nsw, std::abs(nsw - grid));
    worst_pf = std::max(worst_pf, pf - 1.0);
    if (!(std::abs(nsw - grid) <= 0.02) || !(pf <= 1 + 1e-4)) ++bad;
  }
  return {bad == 0, fmt("50 instances, max |NSW - grid| = %.4g, max(pf - 1) = %.3g, violations %g",
                        worst_nsw, worst_pf, bad)};
}

Outcome ac12() {
  double worst = -kInf;
  int bad = 0, infeasible = 0;
  for (const auto& c : g_certified) {
    const auto check = verify_certificate(c.instance, c.run.allocation, c.run.certificate);
    if (!check.feasible) ++infeasible;
    double bound = c.instance.budget() * c.run.certificate.q;
    for (double p : c.run.certificate.p) bound += p;
    const double pf = evaluate_pf(c.instance, c.run.allocation).pf_value;
    worst = std::max(worst, pf - bound);
    if (!(pf <= bound + 1e-4)) ++bad;
  }
  return {bad == 0 && infeasible == 0,
          fmt("%g certified runs, max(pf - (sum p + Bq)) = %.6g, infeasible certificates %g",
              static_cast<double>(g_certified.size()), worst, infeasible)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria{
      {"AC1", "certified PF bound", ac1},
      {"AC2", "key invariant", ac2},
      {"AC3", "feasibility and set-aside floor", ac3},
      {"AC4", "binary guarantee", ac4},
      {"AC5", "binary lower bound", ac5},
      {"AC6", "no-prediction hardness", ac6},
      {"AC7", "prediction hardness", ac7},
      {"AC8", "graceful degradation", ac8},
      {"AC9", "solver equivalence", ac9},
      {"AC10", "harmonic lemma fuzz", ac10},
      {"AC11", "offline benchmark vs grid", ac11},
      {"AC12", "weak duality", ac12},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %-5s %-32s %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
