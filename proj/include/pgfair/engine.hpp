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

// Online set-aside greedy allocators as streaming state machines.
//
// Each allocator splits the budget into a set-aside half, which guarantees
// every agent a floor on utility, and a greedy half, which is spent while
// the marginal fairness gain Phi stays above the price q. Allocators only
// ever receive the current RoundBatch; `step` returns that round's
// irrevocable decision.
//
//   Binary      unit budget, 0/1 values, horizon independent, threshold alpha
//   SingleGood  one good per round, predictions, threshold q = alpha / 2B
//   Batched     L goods per round, predictions, concave subproblem per round

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "pgfair/model.hpp"
#include "pgfair/solver.hpp"

namespace pgfair {

enum class Variant { kBinary, kSingleGood, kBatched };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kBinary: return "binary";
    case Variant::kSingleGood: return "single";
    case Variant::kBatched: return "batched";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "binary") return Variant::kBinary;
  if (s == "single") return Variant::kSingleGood;
  if (s == "batched") return Variant::kBatched;
  throw ConfigError("unknown algorithm '" + s + "'");
}

struct AlgorithmConfig {
  Variant variant = Variant::kBatched;
  std::optional<double> alpha;     // empty: the certified threshold
  std::vector<double> d_bound;     // empty: unknown, treated as all ones
  std::optional<int> horizon;      // overrides the stream header
  // Caps every greedy step by the unspent greedy budget B/2. Only needed for
  // uncertified runs; a guarded run no longer carries a valid certificate.
  bool budget_guard = false;
  SolverTolerances tolerances;
};

// Prices of the dual LP: q on the overall budget, p[t] on round t.
struct DualCertificate {
  double q = 0.0;
  std::vector<double> p;
};

// Floor applied to a zero prediction at an agent's first positive value.
inline constexpr double kPredictionClampFactor = 1e-9;

inline double mean_log(const std::vector<double>& d, int n) {
  if (d.empty()) return 0.0;
  double s = 0.0;
  for (double e : d) s += std::log(e);
  return s / n;
}

// Smallest alpha for which the variant's fairness guarantee is proven.
inline double certified_alpha(Variant variant, int num_agents, int num_goods,
                              int horizon, double budget,
                              const std::vector<double>& d_bound = {}) {
  switch (variant) {
    case Variant::kBinary:
      return 2.0 * std::log(2.0 * num_agents);
    case Variant::kSingleGood:
      return 4.0 * std::log(2.0 * horizon / budget) +
             4.0 * mean_log(d_bound, num_agents);
    case Variant::kBatched:
      return 4.0 *
                 std::log(2.0 * std::min(num_agents, num_goods) * horizon /
                          budget) +
             4.0 * mean_log(d_bound, num_agents);
  }
  return kInf;
}

// Everything an allocator produced for one run.
struct EngineRun {
  Variant variant = Variant::kBatched;
  int num_agents = 0;
  int num_goods = 0;
  double budget = 0.0;
  std::optional<int> horizon;
  double alpha = 0.0;
  double certified_alpha = 0.0;
  bool certified = false;

  Allocation allocation;
  DualCertificate certificate;
  std::vector<double> kkt_residuals;     // per round
  std::vector<int> solver_iterations;    // per round
  std::vector<double> promised_final;    // u~_{i,T}(z_T), the largest over t
  std::vector<double> v_tilde_used;      // after clamping
  std::vector<int> clamped_agents;
  bool cap_engaged = false;              // z clipped by 1 - y (binary)
  bool guard_engaged = false;            // z clipped by the budget guard
  std::vector<std::string> warnings;

  double max_kkt_residual() const {
    double r = 0.0;
    for (double e : kkt_residuals) r = std::max(r, e);
    return r;
  }
};

// Sum_t (p_t + q) sum_l z_{l,t} minus its proven ceiling q B / 2 (which is
// alpha/4 for the prediction-based variants and alpha/2 for the binary one).
inline double key_invariant_residual(const EngineRun& run) {
  double s = 0.0;
  for (int t = 0; t < run.allocation.num_rounds(); ++t)
    s += (run.certificate.p[t] + run.certificate.q) *
         run.allocation.round_greedy(t);
  return s - run.certificate.q * run.budget / 2.0;
}

struct RoundDecision {
  std::vector<double> set_aside;
  std::vector<double> greedy;
  double price = 0.0;          // p_t
  double kkt_residual = 0.0;
  int iterations = 0;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline void check_batch(const RoundBatch& batch, const StreamHeader& header,
                        int expected_round) {
  if (batch.num_agents != header.num_agents ||
      batch.num_goods != header.num_goods ||
      batch.values.size() !=
          static_cast<std::size_t>(batch.num_agents) * batch.num_goods)
    throw StructuralError("round " + std::to_string(batch.round) +
                          ": batch shape does not match stream header");
  if (batch.round != expected_round)
    throw InputError("stream rounds must arrive in order; expected " +
                     std::to_string(expected_round) + ", got " +
                     std::to_string(batch.round));
  for (double v : batch.values)
    if (!std::isfinite(v) || v < 0.0)
      throw InputError("round " + std::to_string(batch.round) +
                       ": values must be finite and >= 0");
}

// Shared bookkeeping of the three allocators.
class AllocatorBase {
 public:
  const EngineRun& run() const { return run_; }

 protected:
  AllocatorBase(Variant variant, const StreamHeader& header,
                const AlgorithmConfig& config)
      : header_(header), config_(config) {
    run_.variant = variant;
    run_.num_agents = header.num_agents;
    run_.num_goods = header.num_goods;
    run_.budget = header.budget;
    run_.horizon = config.horizon ? config.horizon : header.horizon;
    run_.allocation = Allocation(header.num_goods);
    if (!config.d_bound.empty()) {
      if (static_cast<int>(config.d_bound.size()) != header.num_agents)
        throw ConfigError("d_bound must have one entry per agent");
      for (double d : config.d_bound)
        if (!(d >= 1.0)) throw ConfigError("d_bound entries must be >= 1");
    }
  }

  void set_alpha(double certified) {
    run_.certified_alpha = certified;
    run_.alpha = config_.alpha.value_or(certified);
    if (!(run_.alpha > 0.0)) throw ConfigError("alpha must be positive");
    run_.certified = run_.alpha >= certified * (1.0 - 1e-12);
    if (!run_.certified)
      run_.warnings.push_back("uncertified alpha " + fmt_double(run_.alpha) +
                              " < " + fmt_double(certified));
  }

  // Applies the unspent-greedy-budget guard to a proposed greedy amount.
  double guarded(double proposed) {
    if (!config_.budget_guard) return proposed;
    const double left = std::max(0.0, run_.budget / 2.0 - greedy_spent_);
    if (proposed > left) {
      if (!run_.guard_engaged)
        run_.warnings.push_back("budget guard engaged at round " +
                                std::to_string(next_round_) +
                                "; certificate is void");
      run_.guard_engaged = true;
      return left;
    }
    return proposed;
  }

  void record(const RoundBatch& batch, RoundDecision& d) {
    double zsum = 0.0;
    for (double z : d.greedy) zsum += z;
    greedy_spent_ += zsum;
    state_.accumulate(batch, d.greedy);
    run_.allocation.append_round(d.set_aside, d.greedy);
    run_.certificate.p.push_back(d.price);
    run_.kkt_residuals.push_back(d.kkt_residual);
    run_.solver_iterations.push_back(d.iterations);
    ++next_round_;
  }

  void check_overall_budget() const {
    const double spent = run_.allocation.sum();
    if (spent > run_.budget + kFeasTol)
      throw InfeasibleAllocationError(
          std::string(variant_name(run_.variant)) + ": spent " +
          fmt_double(spent) + " of budget " + fmt_double(run_.budget));
  }

  StreamHeader header_;
  AlgorithmConfig config_;
  EngineRun run_;
  GreedyState state_;
  double greedy_spent_ = 0.0;
  int next_round_ = 1;
};

}  // namespace detail

// Unit budget, binary values. y_t = 1/(2N) when some agent sees its first
// liked good, then the smallest z_t with Phi(z_t) <= alpha.
class BinaryAllocator : public detail::AllocatorBase {
 public:
  BinaryAllocator(const StreamHeader& header, const AlgorithmConfig& config)
      : AllocatorBase(Variant::kBinary, header, config),
        seen_(header.num_agents, false) {
    if (header.num_goods != 1)
      throw ConfigError("binary: needs one good per round");
    if (header.budget != 1.0) throw ConfigError("binary: needs budget B = 1");
    set_alpha(certified_alpha(Variant::kBinary, header.num_agents, 1, 0, 1.0));
    state_ = GreedyState(std::vector<double>(header.num_agents, 0.0));
    run_.certificate.q = run_.alpha;
  }

  RoundDecision step(const RoundBatch& batch) {
    detail::check_batch(batch, header_, next_round_);
    const int n = batch.num_agents;
    bool first_like = false;
    for (int i = 0; i < n; ++i) {
      const double v = batch.value(i, 0);
      if (v != 0.0 && v != 1.0)
        throw InputError("binary: non-binary value at round " +
                         std::to_string(batch.round));
      if (v == 1.0 && !seen_[i]) {
        seen_[i] = true;
        first_like = true;
        state_.set_floor(i, 1.0 / (2.0 * n));
      }
    }
    RoundDecision d;
    const double y = first_like ? 1.0 / (2.0 * n) : 0.0;
    const PhiFunction phi(batch, state_.gamma());
    const double threshold =
        solve_threshold_L1(phi, run_.alpha, kInf, config_.tolerances);
    double z = threshold;
    if (z > 1.0 - y) {
      z = 1.0 - y;
      run_.cap_engaged = true;
    }
    z = guarded(z);
    d.set_aside = {y};
    d.greedy = {z};
    d.price = std::max(0.0, phi.scalar(z) - run_.alpha);
    // Slack is left exactly when the threshold itself was accepted.
    const GreedySolution as_solution{{z}, z < threshold ? 0.0 : 1.0, 0.0, 0.0, 0};
    d.kkt_residual = check_kkt(as_solution, phi, run_.alpha);
    record(batch, d);
    return d;
  }

  EngineRun finish() {
    if (run_.cap_engaged)
      run_.warnings.push_back("per-good cap 1 - y_t bound a greedy step");
    const double zsum = run_.allocation.greedy_sum();
    if (run_.certified && zsum > 0.5 + kFeasTol)
      throw InfeasibleAllocationError("binary: greedy spend " +
                                      detail::fmt_double(zsum) +
                                      " exceeds 1/2 under certified alpha");
    check_overall_budget();
    run_.promised_final.assign(state_.gamma().begin(), state_.gamma().end());
    run_.v_tilde_used.clear();
    return run_;
  }

 private:
  std::vector<bool> seen_;
};

namespace detail {

// Common core of the prediction-based allocators.
class PredictedAllocator : public AllocatorBase {
 protected:
  PredictedAllocator(Variant variant, const StreamHeader& header,
                     const PredictionSet& predictions,
                     const AlgorithmConfig& config)
      : AllocatorBase(variant, header, config) {
    const char* name = variant_name(variant);
    if (!run_.horizon)
      throw ConfigError(std::string(name) + ": horizon T is required");
    horizon_ = *run_.horizon;
    if (horizon_ < 1) throw ConfigError(std::string(name) + ": T must be >= 1");
    if (static_cast<int>(predictions.v_tilde.size()) != header.num_agents)
      throw ConfigError(std::string(name) +
                        ": predictions are missing or have the wrong size");
    for (double v : predictions.v_tilde)
      if (!std::isfinite(v) || v < 0.0)
        throw ConfigError(std::string(name) + ": predictions must be >= 0");
    if (config.d_bound.empty())
      run_.warnings.push_back(
          "prediction error bound d unknown; assuming d_i = 1");
    run_.v_tilde_used = predictions.v_tilde;
  }

  void init_floors(double scale) {
    floor_scale_ = scale;
    std::vector<double> gamma(run_.num_agents);
    for (int i = 0; i < run_.num_agents; ++i)
      gamma[i] = scale * run_.v_tilde_used[i];
    state_ = GreedyState(std::move(gamma));
  }

  // Keeps Phi finite when an agent with zero prediction first shows value.
  void clamp_zero_predictions(const RoundBatch& batch) {
    for (int i = 0; i < batch.num_agents; ++i) {
      if (state_.gamma(i) > 0.0) continue;
      double row = 0.0;
      for (int l = 0; l < batch.num_goods; ++l) row += batch.value(i, l);
      if (row <= 0.0) continue;
      const double clamped =
          std::max(run_.v_tilde_used[i], kPredictionClampFactor * row);
      run_.v_tilde_used[i] = clamped;
      state_.set_floor(i, floor_scale_ * clamped);
      run_.clamped_agents.push_back(i);
      run_.warnings.push_back("prediction of agent " + std::to_string(i) +
                              " clamped to " + fmt_double(clamped) +
                              " at round " + std::to_string(batch.round));
    }
  }

  void check_round(const RoundBatch& batch) {
    check_batch(batch, header_, next_round_);
    if (batch.round > horizon_)
      throw InputError("stream delivered more than T = " +
                       std::to_string(horizon_) + " rounds");
  }

  EngineRun finish_predicted() {
    if (next_round_ - 1 < horizon_)
      run_.warnings.push_back("stream ended after " +
                              std::to_string(next_round_ - 1) + " of " +
                              std::to_string(horizon_) + " rounds");
    check_overall_budget();
    run_.promised_final.assign(state_.gamma().begin(), state_.gamma().end());
    return run_;
  }

  int horizon_ = 0;
  double floor_scale_ = 0.0;
};

}  // namespace detail

// One good per round: y_t = B/(2T), z_t = min{z*_t, 1 - y_t} where z*_t is
// the smallest z with Phi(z) <= alpha/(2B).
class SingleGoodAllocator : public detail::PredictedAllocator {
 public:
  SingleGoodAllocator(const StreamHeader& header,
                      const PredictionSet& predictions,
                      const AlgorithmConfig& config)
      : PredictedAllocator(Variant::kSingleGood, header, predictions, config) {
    if (header.num_goods != 1)
      throw ConfigError("single: needs one good per round");
    if (!(header.budget > 0.0) || header.budget > 2.0 * horizon_)
      throw ConfigError("single: needs 0 < B <= 2T");
    set_alpha(certified_alpha(Variant::kSingleGood, header.num_agents, 1,
                              horizon_, header.budget, config.d_bound));
    q_ = run_.alpha / (2.0 * header.budget);
    run_.certificate.q = q_;
    y_ = header.budget / (2.0 * horizon_);
    init_floors(y_);
  }

  RoundDecision step(const RoundBatch& batch) {
    check_round(batch);
    clamp_zero_predictions(batch);
    const PhiFunction phi(batch, state_.gamma());
    const double cap = 1.0 - y_;
    const double z = guarded(solve_threshold_L1(phi, q_, cap, config_.tolerances));
    RoundDecision d;
    d.set_aside = {y_};
    d.greedy = {z};
    const GreedySolution as_solution{{z}, cap - z, 0.0, 0.0, 0};
    d.price = std::max(0.0, phi.scalar(z) - q_);
    d.kkt_residual = check_kkt(as_solution, phi, q_);
    record(batch, d);
    return d;
  }

  EngineRun finish() { return finish_predicted(); }

 private:
  double q_ = 0.0;
  double y_ = 0.0;
};

// L goods per round: the set-aside half is spread over the favourite goods
// F_t of the agents, the greedy half solves the concave subproblem.
class BatchedAllocator : public detail::PredictedAllocator {
 public:
  BatchedAllocator(const StreamHeader& header, const PredictionSet& predictions,
                   const AlgorithmConfig& config)
      : PredictedAllocator(Variant::kBatched, header, predictions, config) {
    if (!(header.budget >= 1.0) || header.budget > horizon_)
      throw ConfigError("batched: needs 1 <= B <= T");
    set_alpha(certified_alpha(Variant::kBatched, header.num_agents,
                              header.num_goods, horizon_, header.budget,
                              config.d_bound));
    q_ = run_.alpha / (2.0 * header.budget);
    run_.certificate.q = q_;
    const int m = std::min(header.num_agents, header.num_goods);
    init_floors(header.budget / (2.0 * m * horizon_));
  }

  // Favourite good of every agent with positive value, lowest index on ties.
  static std::vector<int> favorite_goods(const RoundBatch& batch) {
    std::vector<bool> in(batch.num_goods, false);
    for (int i = 0; i < batch.num_agents; ++i) {
      int best = 0;
      for (int l = 1; l < batch.num_goods; ++l)
        if (batch.value(i, l) > batch.value(i, best)) best = l;
      if (batch.value(i, best) > 0.0) in[best] = true;
    }
    std::vector<int> f;
    for (int l = 0; l < batch.num_goods; ++l)
      if (in[l]) f.push_back(l);
    return f;
  }

  RoundDecision step(const RoundBatch& batch) {
    check_round(batch);
    clamp_zero_predictions(batch);
    const int L = batch.num_goods;
    RoundDecision d;
    d.set_aside.assign(L, 0.0);
    const auto favorites = favorite_goods(batch);
    for (int l : favorites)
      d.set_aside[l] =
          run_.budget / (2.0 * favorites.size() * horizon_);

    const PhiFunction phi(batch, state_.gamma());
    const double cap = 1.0 - run_.budget / (2.0 * horizon_);
    GreedySolution sol = solve_batched(phi, q_, cap, config_.tolerances);

    if (config_.budget_guard) {
      double zsum = 0.0;
      for (double z : sol.z) zsum += z;
      const double allowed = guarded(zsum);
      if (allowed < zsum) {
        const double f = zsum > 0.0 ? allowed / zsum : 0.0;
        for (double& z : sol.z) z *= f;
        sol.lambda = cap - allowed;
      }
    }
    d.greedy = sol.z;
    d.price = std::max(0.0, phi.max_partial(sol.z) - q_);
    d.kkt_residual = check_kkt(sol, phi, q_);
    d.iterations = sol.iterations;

    double round = 0.0;
    for (int l = 0; l < L; ++l) round += d.set_aside[l] + d.greedy[l];
    if (round > 1.0 + kFeasTol)
      throw InfeasibleAllocationError("batched: round " +
                                      std::to_string(batch.round) + " spends " +
                                      detail::fmt_double(round));
    record(batch, d);
    return d;
  }

  EngineRun finish() { return finish_predicted(); }

 private:
  double q_ = 0.0;
};

template <class Allocator>
EngineRun drive(RoundStream& stream, Allocator& allocator) {
  while (auto batch = stream.next()) allocator.step(*batch);
  return allocator.finish();
}

inline EngineRun run_binary(RoundStream& stream, const AlgorithmConfig& config) {
  BinaryAllocator a(stream.header(), config);
  return drive(stream, a);
}

inline EngineRun run_single_good(RoundStream& stream,
                                 const PredictionSet& predictions,
                                 const AlgorithmConfig& config) {
  SingleGoodAllocator a(stream.header(), predictions, config);
  return drive(stream, a);
}

inline EngineRun run_batched(RoundStream& stream,
                             const PredictionSet& predictions,
                             const AlgorithmConfig& config) {
  BatchedAllocator a(stream.header(), predictions, config);
  return drive(stream, a);
}

// Runs `config.variant` over a stored instance.
inline EngineRun run_algorithm(const Instance& instance,
                               const PredictionSet& predictions,
                               const AlgorithmConfig& config) {
  InstanceStream stream(instance, config.variant != Variant::kBinary);
  switch (config.variant) {
    case Variant::kBinary: return run_binary(stream, config);
    case Variant::kSingleGood: return run_single_good(stream, predictions, config);
    case Variant::kBatched: return run_batched(stream, predictions, config);
  }
  throw ConfigError("unknown variant");
}

}  // namespace pgfair
