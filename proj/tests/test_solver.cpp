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


#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pgfair/solver.hpp"

using namespace pgfair;
using Catch::Approx;

namespace {

PhiFunction random_phi(std::mt19937_64& rng, int n, int L, double zero_prob = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n) * L), g(n);
  for (auto& e : v) e = u(rng) < zero_prob ? 0.0 : u(rng);
  for (auto& e : g) e = 0.01 + u(rng);
  return PhiFunction(n, L, v, g);
}

// Best objective over a triangular grid {z1 + z2 <= cap} for L = 2.
double grid_max_l2(const PhiFunction& phi, double q, double cap, int steps) {
  double best = -kInf;
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; a + b <= steps; ++b) {
      const double z1 = cap * a / steps, z2 = cap * b / steps;
      const std::vector<double> z{z1, z2};
      best = std::max(best, phi.objective(z, cap - z1 - z2, q));
    }
  return best;
}

}  // namespace

TEST_CASE("phi function and its partials") {
  // N=2, L=2: v = [[1, 2], [0, 3]], gamma = (1, 2).
  PhiFunction phi(2, 2, {1, 2, 0, 3}, {1, 2});
  const std::vector<double> z{0.5, 0.25};
  const auto u = phi.promised_all(z);
  CHECK(u[0] == Approx(1 + 0.5 + 0.5));
  CHECK(u[1] == Approx(2 + 0.75));
  const auto g = phi.partials(z);
  CHECK(g[0] == Approx(0.5 * (1 / u[0])));
  CHECK(g[1] == Approx(0.5 * (2 / u[0] + 3 / u[1])));
  CHECK(phi.max_partial(z) == Approx(g[1]));
  CHECK_THROWS_AS(PhiFunction(2, 2, {1, 2, 3}, {1, 1}), StructuralError);
}

TEST_CASE("phi is non-increasing in every coordinate") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto phi = random_phi(rng, 4, 3);
    std::vector<double> z{u(rng), u(rng), u(rng)};
    const auto before = phi.partials(z);
    z[trial % 3] += 0.1;
    const auto after = phi.partials(z);
    for (int l = 0; l < 3; ++l) CHECK(after[l] <= before[l] + 1e-15);
  }
}

TEST_CASE("objective gradient matches phi by central differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto phi = random_phi(rng, 3, 3, 0.2);
    std::vector<double> z{u(rng), u(rng), u(rng)};
    const auto g = phi.partials(z);
    for (int l = 0; l < 3; ++l) {
      const double h = 1e-6;
      auto zp = z, zm = z;
      zp[l] += h;
      zm[l] -= h;
      const double fd = (phi.objective(zp, 0, 1) - phi.objective(zm, 0, 1)) / (2 * h);
      CHECK(fd == Approx(g[l]).epsilon(1e-5).margin(1e-9));
    }
  }
}

TEST_CASE("objective is concave on the feasible simplex") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto phi = random_phi(rng, 3, 2);
    const double q = 0.5 + u(rng), cap = 0.9;
    auto point = [&]() {
      double a = u(rng), b = u(rng), c = u(rng);
      const double s = a + b + c;
      return std::vector<double>{cap * a / s, cap * b / s, cap * c / s};
    };
    const auto p = point(), r = point();
    std::vector<double> m(3);
    for (int k = 0; k < 3; ++k) m[k] = 0.5 * (p[k] + r[k]);
    auto f = [&](const std::vector<double>& x) {
      return phi.objective(std::span<const double>(x.data(), 2), x[2], q);
    };
    CHECK(f(m) >= 0.5 * (f(p) + f(r)) - 1e-12);
  }
}

TEST_CASE("threshold solver") {
  SECTION("zero-value good") {
    PhiFunction phi(2, 1, {0, 0}, {1, 1});
    CHECK(solve_threshold_L1(phi, 1.0, kInf) == 0.0);
  }
  SECTION("single agent closed form z = 1/q - gamma/v") {
    const double q = 2.0 * std::log(2.0);
    PhiFunction phi(1, 1, {1.0}, {0.5});
    const double z = solve_threshold_L1(phi, q, kInf);
    CHECK(z == Approx(1.0 / q - 0.5).margin(1e-10));
    CHECK(z == Approx(0.22135).margin(1e-5));
  }
  SECTION("phi(0) equal to q returns zero") {
    PhiFunction phi(1, 1, {2.0}, {1.0});
    CHECK(solve_threshold_L1(phi, 2.0, kInf) == 0.0);
  }
  SECTION("cap binds") {
    PhiFunction phi(1, 1, {1.0}, {0.01});
    CHECK(solve_threshold_L1(phi, 1.0, 0.3) == 0.3);
  }
  SECTION("random rounds meet the threshold tightly") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 300; ++trial) {
      const auto phi = random_phi(rng, 5, 1);
      const double q = 0.05 + std::uniform_real_distribution<double>(0, 2)(rng);
      const double z = solve_threshold_L1(phi, q, 1.0);
      if (z == 0.0) {
        CHECK(phi.scalar(0.0) <= q);
      } else if (z == 1.0) {
        CHECK(phi.scalar(1.0) >= q - 1e-12);
      } else {
        CHECK(phi.scalar(z) <= q + 1e-12);
        CHECK(phi.scalar(std::max(0.0, z - 1e-9)) > q);
      }
    }
  }
  SECTION("errors") {
    PhiFunction two(1, 2, {1, 1}, {1});
    CHECK_THROWS_AS(solve_threshold_L1(two, 1.0, 1.0), StructuralError);
    PhiFunction one(1, 1, {1}, {1});
    CHECK_THROWS_AS(solve_threshold_L1(one, 0.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(solve_threshold_L1(one, 1.0, -0.1), ArgumentError);
    PhiFunction degenerate(2, 1, {1, 1}, {0, 1});
    CHECK_THROWS_AS(solve_threshold_L1(degenerate, 1.0, 1.0), DegeneratePredictionError);
  }
}

TEST_CASE("batched solver") {
  SECTION("all-zero round sends everything to lambda") {
    PhiFunction phi(2, 3, std::vector<double>(6, 0.0), {1, 1});
    const auto s = solve_batched(phi, 1.0, 0.75);
    for (double z : s.z) CHECK(z == 0.0);
    CHECK(s.lambda == 0.75);
    CHECK(s.kkt_residual == 0.0);
  }
  SECTION("large q keeps z at zero") {
    PhiFunction phi(1, 2, {4, 1}, {1});
    const auto s = solve_batched(phi, 10.0, 0.9);
    CHECK(s.z[0] == 0.0);
    CHECK(s.z[1] == 0.0);
    CHECK(s.lambda == Approx(0.9));
  }
  SECTION("single agent: all greedy mass on the best good, closed form") {
    // v = (4, 1), gamma = 1, q = 2: z1 = 1/q - gamma/v = 0.25.
    PhiFunction phi(1, 2, {4, 1}, {1});
    const auto s = solve_batched(phi, 2.0, 0.9);
    CHECK(s.z[0] == Approx(0.25).margin(1e-9));
    CHECK(s.z[1] == 0.0);
    CHECK(s.lambda == Approx(0.65).margin(1e-9));
    CHECK(s.kkt_residual <= 1e-9);
  }
  SECTION("budget cap binds") {
    PhiFunction phi(1, 2, {4, 1}, {0.001});
    const auto s = solve_batched(phi, 0.5, 0.3);
    CHECK(s.z[0] == Approx(0.3).margin(1e-12));
    CHECK(s.lambda == Approx(0.0).margin(1e-12));
  }
  SECTION("feasible, KKT-certified and optimal against a grid oracle") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 40; ++trial) {
      const auto phi = random_phi(rng, 3, 2, 0.2);
      const double q = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
      const double cap = 0.95;
      const auto s = solve_batched(phi, q, cap);
      double sum = s.lambda;
      for (double z : s.z) {
        CHECK(z >= 0.0);
        sum += z;
      }
      CHECK(sum == Approx(cap).margin(1e-9));
      CHECK(s.kkt_residual <= 1e-6);
      const double f = phi.objective(s.z, s.lambda, q);
      const double grid = grid_max_l2(phi, q, cap, 400);
      CHECK(f >= grid - 1e-12);
      CHECK(f - grid <= 1e-3);
    }
  }
  SECTION("agrees with the threshold solver for one good") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
      const auto phi = random_phi(rng, 4, 1);
      const double q = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
      const double cap = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
      const auto s = solve_batched(phi, q, cap);
      CHECK(s.z[0] == Approx(solve_threshold_L1(phi, q, cap)).margin(1e-6));
    }
  }
  SECTION("errors") {
    PhiFunction phi(1, 2, {1, 1}, {1});
    CHECK_THROWS_AS(solve_batched(phi, 1.0, -0.1), ArgumentError);
    CHECK_THROWS_AS(solve_batched(phi, 0.0, 0.5), ArgumentError);
    PhiFunction degenerate(2, 2, {1, 0, 0, 1}, {1, 0});
    CHECK_THROWS_AS(solve_batched(degenerate, 1.0, 0.5), DegeneratePredictionError);
  }
  SECTION("iteration cap is surfaced") {
    PhiFunction phi(3, 3, {1, 0.5, 0.2, 0.1, 1, 0.3, 0.4, 0.2, 1}, {0.01, 0.02, 0.03});
    SolverTolerances tight;
    tight.max_iterations = 1;
    CHECK_THROWS_AS(solve_batched(phi, 0.5, 0.9, tight), SolverError);
  }
}

TEST_CASE("KKT residual") {
  SECTION("exact single-agent solution") {
    PhiFunction phi(1, 1, {1.0}, {0.5});
    const double q = 1.5;
    GreedySolution s{{1.0 / q - 0.5}, 0.9 - (1.0 / q - 0.5), 0, 0, 0};
    CHECK(check_kkt(s, phi, q) <= 1e-9);
  }
  SECTION("z = 0 when phi(0) <= q") {
    PhiFunction phi(1, 1, {1.0}, {2.0});
    GreedySolution s{{0.0}, 0.9, 0, 0, 0};
    CHECK(check_kkt(s, phi, 1.0) == 0.0);
  }
  SECTION("moving mass off the argmax coordinate is detected") {
    PhiFunction phi(2, 2, {1, 0.2, 0.3, 1}, {0.1, 0.1});
    const auto opt = solve_batched(phi, 0.5, 0.9);
    REQUIRE(opt.kkt_residual <= 1e-6);
    const auto g = phi.partials(opt.z);
    const int top = g[0] >= g[1] ? 0 : 1;
    auto bad = opt;
    bad.z[top] -= 0.01;
    bad.z[1 - top] += 0.01;
    CHECK(check_kkt(bad, phi, 0.5) > 1e-4);
  }
}
