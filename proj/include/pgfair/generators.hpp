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

// Instance families: the adversarial constructions behind the lower bounds,
// seeded random instances, predictions with controlled error, and the
// private-goods embedding.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pgfair/model.hpp"

namespace pgfair {

enum class BlockKind { kS, kL, kLPrime, kSGen, kSGenPrime };

// One building block of an adversarial instance.
//   kS         S_r: N goods, good j liked by agents i with (i - j) mod N < r
//   kL         L_r = S_{r+1} then r copies of S_0
//   kLPrime    L'_r = r + 1 copies of S_1
//   kSGen      single agent, B(r+1) goods, (r+1)/T' on the first B, then 0
//   kSGenPrime single agent, B(r+1) goods of value 1/T'
struct BlockSpec {
  BlockKind kind = BlockKind::kS;
  int r = 0;
  int num_agents = 1;   // N for the binary blocks
  int budget = 1;       // B for the single-agent blocks
  int t_prime = 2;      // T' for the single-agent blocks
};

// Columns of a block, each column holding one value per agent.
inline std::vector<std::vector<double>> block_columns(const BlockSpec& spec) {
  std::vector<std::vector<double>> cols;
  const int n = spec.num_agents;
  auto append_s = [&](int r) {
    for (int j = 0; j < n; ++j) {
      std::vector<double> col(n, 0.0);
      for (int i = 0; i < n; ++i)
        if (((i - j) % n + n) % n < r) col[i] = 1.0;
      cols.push_back(std::move(col));
    }
  };
  switch (spec.kind) {
    case BlockKind::kS:
      if (spec.r < 0 || spec.r > n) throw ArgumentError("S_r needs 0 <= r <= N");
      append_s(spec.r);
      break;
    case BlockKind::kL:
      append_s(spec.r + 1);
      for (int c = 0; c < spec.r; ++c) append_s(0);
      break;
    case BlockKind::kLPrime:
      for (int c = 0; c <= spec.r; ++c) append_s(1);
      break;
    case BlockKind::kSGen:
    case BlockKind::kSGenPrime: {
      const int count = spec.budget * (spec.r + 1);
      for (int g = 0; g < count; ++g) {
        double v;
        if (spec.kind == BlockKind::kSGen)
          v = g < spec.budget ? (spec.r + 1.0) / spec.t_prime : 0.0;
        else
          v = 1.0 / spec.t_prime;
        cols.push_back({v});
      }
      break;
    }
  }
  return cols;
}

namespace detail {

inline Instance from_columns(int num_agents, double budget,
                             const std::vector<std::vector<double>>& cols) {
  std::vector<double> values;
  values.reserve(cols.size() * num_agents);
  for (const auto& col : cols) values.insert(values.end(), col.begin(), col.end());
  return Instance(num_agents, 1, static_cast<int>(cols.size()), budget,
                  std::move(values));
}

}  // namespace detail

// First round (0-based) of block L_k (or L'_k) in the binary construction.
inline int binary_block_offset(int num_agents, int k) {
  int offset = 0;
  for (int r = 1; r < k; ++r) offset += num_agents * (r + 1);
  return offset;
}

// I_k = (L_1, ..., L_k, L'_{k+1}, ..., L'_{N-1}) with binary values, B = 1.
inline Instance gen_binary_lower_bound(int num_agents, int k) {
  if (num_agents < 2) throw ArgumentError("binary lower bound needs N >= 2");
  if (k < 1 || k > num_agents - 1)
    throw ArgumentError("binary lower bound needs 1 <= k <= N-1");
  std::vector<std::vector<double>> cols;
  for (int r = 1; r <= num_agents - 1; ++r) {
    const BlockKind kind = r <= k ? BlockKind::kL : BlockKind::kLPrime;
    auto block = block_columns({kind, r, num_agents, 1, 2});
    cols.insert(cols.end(), block.begin(), block.end());
  }
  return detail::from_columns(num_agents, 1.0, cols);
}

// Single agent, v_t = M^(t-1) up to t_stop and 0 afterwards.
inline Instance gen_geometric_no_predictions(int horizon, int t_stop, double m,
                                             double budget = 1.0) {
  if (horizon < 1 || t_stop < 1 || t_stop > horizon)
    throw ArgumentError("geometric: needs 1 <= t_stop <= T");
  if (!(m > 1.0)) throw ArgumentError("geometric: needs M > 1");
  std::vector<double> values(horizon, 0.0);
  for (int t = 0; t < t_stop; ++t) values[t] = std::pow(m, t);
  if (!std::isfinite(values[t_stop - 1]))
    throw ArgumentError("geometric: M^(t_stop-1) overflows");
  return Instance(1, 1, horizon, budget, std::move(values));
}

// First round (0-based) of block S_k (or S'_k) in the prediction-hardness
// construction.
inline int prediction_block_offset(int budget, int k) {
  int offset = 0;
  for (int r = 1; r < k; ++r) offset += budget * (r + 1);
  return offset;
}

// I_k = (S_1, ..., S_k, S'_{k+1}, ..., S'_{T'-1}) for one agent;
// T = B (T'(T'+1) - 2) / 2 and the total value does not depend on k.
inline Instance gen_prediction_hardness(double budget, int t_prime, int k) {
  if (!(budget >= 1.0) || budget != std::floor(budget))
    throw ArgumentError("prediction hardness: B must be an integer >= 1");
  if (t_prime < 2) throw ArgumentError("prediction hardness: needs T' >= 2");
  if (k < 1 || k > t_prime - 1)
    throw ArgumentError("prediction hardness: needs 1 <= k <= T'-1");
  const int b = static_cast<int>(budget);
  std::vector<std::vector<double>> cols;
  for (int r = 1; r <= t_prime - 1; ++r) {
    const BlockKind kind = r <= k ? BlockKind::kSGen : BlockKind::kSGenPrime;
    auto block = block_columns({kind, r, 1, b, t_prime});
    cols.insert(cols.end(), block.begin(), block.end());
  }
  return detail::from_columns(1, budget, cols);
}

struct Distribution {
  enum class Kind { kUniform01, kExponential, kSparse, kBinary };
  Kind kind = Kind::kUniform01;
  double param = 0.0;  // mean for exponential, probability for sparse/binary

  static Distribution uniform01() { return {Kind::kUniform01, 0.0}; }
  static Distribution exponential(double mean) { return {Kind::kExponential, mean}; }
  static Distribution sparse(double p) { return {Kind::kSparse, p}; }
  static Distribution binary(double p) { return {Kind::kBinary, p}; }

  void validate() const {
    switch (kind) {
      case Kind::kUniform01: break;
      case Kind::kExponential:
        if (!(param > 0.0) || !std::isfinite(param))
          throw ArgumentError("exponential: mean must be positive");
        break;
      case Kind::kSparse:
      case Kind::kBinary:
        if (!(param >= 0.0 && param <= 1.0))
          throw ArgumentError("sparse/binary: probability must be in [0, 1]");
        break;
    }
  }
};

inline Distribution parse_distribution(const std::string& name, double param) {
  if (name == "uniform01") return Distribution::uniform01();
  if (name == "exponential") return Distribution::exponential(param);
  if (name == "sparse") return Distribution::sparse(param);
  if (name == "binary") return Distribution::binary(param);
  throw ArgumentError("unknown distribution '" + name + "'");
}

// Draws in agent-major order, then good, then round, from one mt19937_64.
inline Instance gen_random(int num_agents, int num_goods, int num_rounds,
                           double budget, const Distribution& dist,
                           std::uint64_t seed) {
  dist.validate();
  if (num_agents < 1 || num_goods < 1 || num_rounds < 1)
    throw ArgumentError("random: dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> values(
      static_cast<std::size_t>(num_agents) * num_goods * num_rounds, 0.0);
  for (int i = 0; i < num_agents; ++i)
    for (int l = 0; l < num_goods; ++l)
      for (int t = 0; t < num_rounds; ++t) {
        double v = 0.0;
        switch (dist.kind) {
          case Distribution::Kind::kUniform01:
            v = unit(rng);
            break;
          case Distribution::Kind::kExponential:
            v = -dist.param * std::log1p(-unit(rng));
            break;
          case Distribution::Kind::kSparse: {
            const double keep = unit(rng);
            const double draw = unit(rng);
            v = keep < dist.param ? draw : 0.0;
            break;
          }
          case Distribution::Kind::kBinary:
            v = unit(rng) < dist.param ? 1.0 : 0.0;
            break;
        }
        values[(static_cast<std::size_t>(t) * num_agents + i) * num_goods + l] = v;
      }
  return Instance(num_agents, num_goods, num_rounds, budget, std::move(values));
}

enum class PredictionMode { kWorstOver, kWorstUnder, kUniformLog };

inline PredictionMode parse_prediction_mode(const std::string& s) {
  if (s == "worst_over") return PredictionMode::kWorstOver;
  if (s == "worst_under") return PredictionMode::kWorstUnder;
  if (s == "uniform_log") return PredictionMode::kUniformLog;
  throw ArgumentError("unknown prediction mode '" + s + "'");
}

inline const char* prediction_mode_name(PredictionMode m) {
  switch (m) {
    case PredictionMode::kWorstOver: return "worst_over";
    case PredictionMode::kWorstUnder: return "worst_under";
    case PredictionMode::kUniformLog: return "uniform_log";
  }
  return "?";
}

// [c, d]-predictions of V_i = sum_t max_l v[i][l][t].
inline PredictionSet gen_predictions(const Instance& instance,
                                     std::vector<double> c, std::vector<double> d,
                                     PredictionMode mode, std::uint64_t seed) {
  const int n = instance.num_agents();
  if (static_cast<int>(c.size()) != n || static_cast<int>(d.size()) != n)
    throw ArgumentError("predictions: c and d need one entry per agent");
  for (int i = 0; i < n; ++i)
    if (!(c[i] >= 1.0) || !(d[i] >= 1.0))
      throw ArgumentError("predictions: c and d must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PredictionSet p{std::vector<double>(n, 0.0), c, d};
  for (int i = 0; i < n; ++i) {
    const double v = instance.total_value(i);
    switch (mode) {
      case PredictionMode::kWorstOver:
        p.v_tilde[i] = c[i] * v;
        break;
      case PredictionMode::kWorstUnder:
        p.v_tilde[i] = v / d[i];
        break;
      case PredictionMode::kUniformLog: {
        const double u = unit(rng);
        if (v > 0.0) {
          const double lo = std::log(v / d[i]), hi = std::log(c[i] * v);
          p.v_tilde[i] = std::clamp(std::exp(lo + u * (hi - lo)), v / d[i], c[i] * v);
        }
        break;
      }
    }
  }
  return p;
}

// Embeds private goods as public goods with B = T. Column j of `values` is
// private good g = j mod L' of round t = j / L'; it becomes public good
// g * N + i, valued only by agent i.
inline Instance private_goods_embed(const std::vector<std::vector<double>>& values,
                                    int goods_per_round) {
  if (goods_per_round < 1)
    throw ArgumentError("private embedding: L' must be >= 1");
  const int n = static_cast<int>(values.size());
  if (n < 1 || values[0].empty())
    throw ArgumentError("private embedding: empty value matrix");
  const std::size_t cols = values[0].size();
  for (const auto& row : values)
    if (row.size() != cols)
      throw StructuralError("private embedding: ragged value matrix");
  if (cols % goods_per_round != 0)
    throw StructuralError("private embedding: columns not divisible by L'");
  const int T = static_cast<int>(cols / goods_per_round);
  const int L = goods_per_round * n;
  std::vector<double> tensor(static_cast<std::size_t>(T) * n * L, 0.0);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < T; ++t)
      for (int g = 0; g < goods_per_round; ++g) {
        const int l = g * n + i;
        tensor[(static_cast<std::size_t>(t) * n + i) * L + l] =
            values[i][static_cast<std::size_t>(t) * goods_per_round + g];
      }
  return Instance(n, L, T, static_cast<double>(T), std::move(tensor));
}

}  // namespace pgfair
