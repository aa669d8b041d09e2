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

// Core domain types for online public-goods allocation: instances, round
// batches, streams, allocations, predictions and the extended-real
// arithmetic conventions used by every metric.
//
// Indices are 0-based everywhere in the C++ API. `RoundBatch::round` is the
// only 1-based quantity, matching the streaming file format.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pgfair {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter outside its documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Shapes of two objects do not agree.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Observed data violates the contract of the algorithm consuming it.
class InputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// An agent with positive value has zero promised utility.
class DegeneratePredictionError : public Error {
 public:
  using Error::Error;
};

// An allocation left the feasible polytope.
class InfeasibleAllocationError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Absolute slack allowed on every linear feasibility constraint.
inline constexpr double kFeasTol = 1e-9;

// x/y over the extended non-negative reals: 0/0 = 1 and x/0 = +inf for x > 0.
inline double ratio(double numer, double denom) {
  if (denom == 0.0) return numer == 0.0 ? 1.0 : kInf;
  return numer / denom;
}

// k-th harmonic number, summed from 1/1 upwards.
inline double harmonic(int k) {
  if (k < 1) throw ArgumentError("harmonic: k must be >= 1");
  double h = 0.0;
  for (int j = 1; j <= k; ++j) h += 1.0 / j;
  return h;
}

// Values of all agents for the goods of one round, row-major N x L.
struct RoundBatch {
  int round = 0;  // 1-based
  int num_agents = 0;
  int num_goods = 0;
  std::vector<double> values;

  double value(int agent, int good) const {
    return values[static_cast<std::size_t>(agent) * num_goods + good];
  }
  std::span<const double> agent_row(int agent) const {
    return std::span<const double>(values).subspan(
        static_cast<std::size_t>(agent) * num_goods, num_goods);
  }
  double agent_max(int agent) const {
    auto row = agent_row(agent);
    return row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
  }
};

// Dense valuation tensor v[i][l][t] with budget metadata. Storage is
// round-major ([t][i][l]) so a round is a contiguous N x L block.
class Instance {
 public:
  Instance() = default;

  Instance(int num_agents, int num_goods, int num_rounds, double budget,
           std::vector<double> values)
      : num_agents_(num_agents),
        num_goods_(num_goods),
        num_rounds_(num_rounds),
        budget_(budget),
        values_(std::move(values)) {
    validate();
  }

  int num_agents() const { return num_agents_; }
  int num_goods() const { return num_goods_; }
  int num_rounds() const { return num_rounds_; }
  double budget() const { return budget_; }
  std::span<const double> raw() const { return values_; }

  double value(int agent, int good, int round) const {
    return values_[index(agent, good, round)];
  }

  std::span<const double> round_values(int round) const {
    const std::size_t block =
        static_cast<std::size_t>(num_agents_) * num_goods_;
    return std::span<const double>(values_).subspan(round * block, block);
  }

  RoundBatch round(int t) const {
    auto block = round_values(t);
    return RoundBatch{t + 1, num_agents_, num_goods_,
                      std::vector<double>(block.begin(), block.end())};
  }

  // V_i = sum_t max_l v[i][l][t]; for L = 1 this is the plain total value.
  double total_value(int agent) const {
    double total = 0.0;
    for (int t = 0; t < num_rounds_; ++t) {
      double best = 0.0;
      for (int l = 0; l < num_goods_; ++l)
        best = std::max(best, value(agent, l, t));
      total += best;
    }
    return total;
  }

  std::vector<double> total_values() const {
    std::vector<double> v(num_agents_);
    for (int i = 0; i < num_agents_; ++i) v[i] = total_value(i);
    return v;
  }

  bool agent_has_value(int agent) const {
    for (int t = 0; t < num_rounds_; ++t)
      for (int l = 0; l < num_goods_; ++l)
        if (value(agent, l, t) > 0.0) return true;
    return false;
  }

  Instance with_budget(double budget) const {
    return Instance(num_agents_, num_goods_, num_rounds_, budget, values_);
  }

  friend bool operator==(const Instance&, const Instance&) = default;

 private:
  std::size_t index(int agent, int good, int round) const {
    return (static_cast<std::size_t>(round) * num_agents_ + agent) *
               num_goods_ +
           good;
  }

  void validate() const {
    if (num_agents_ < 1 || num_goods_ < 1 || num_rounds_ < 1)
      throw ArgumentError("instance: N, L and T must be positive");
    if (!std::isfinite(budget_) || budget_ < 0.0)
      throw ArgumentError("instance: budget must be finite and >= 0");
    if (num_goods_ > 1 && (budget_ < 1.0 || budget_ > num_rounds_))
      throw ArgumentError("instance: batched instances need 1 <= B <= T");
    const std::size_t expected = static_cast<std::size_t>(num_agents_) *
                                 num_goods_ * num_rounds_;
    if (values_.size() != expected)
      throw StructuralError("instance: value tensor has wrong size");
    for (double v : values_)
      if (!std::isfinite(v) || v < 0.0)
        throw ArgumentError("instance: values must be finite and >= 0");
  }

  int num_agents_ = 0;
  int num_goods_ = 0;
  int num_rounds_ = 0;
  double budget_ = 0.0;
  std::vector<double> values_;
};

struct StreamHeader {
  int num_agents = 0;
  int num_goods = 0;
  double budget = 0.0;
  std::optional<int> horizon;  // absent for horizon-independent runs
};

// Online source of round batches. Consumers only ever see the current batch.
class RoundStream {
 public:
  virtual ~RoundStream() = default;
  virtual const StreamHeader& header() const = 0;
  virtual std::optional<RoundBatch> next() = 0;
};

// Replays a stored instance round by round.
class InstanceStream final : public RoundStream {
 public:
  explicit InstanceStream(const Instance& instance, bool reveal_horizon = true)
      : instance_(instance),
        header_{instance.num_agents(), instance.num_goods(), instance.budget(),
                reveal_horizon ? std::optional<int>(instance.num_rounds())
                               : std::nullopt} {}

  const StreamHeader& header() const override { return header_; }

  std::optional<RoundBatch> next() override {
    if (cursor_ >= instance_.num_rounds()) return std::nullopt;
    return instance_.round(cursor_++);
  }

 private:
  const Instance& instance_;
  StreamHeader header_;
  int cursor_ = 0;
};

// Investments x[l][t] = y[l][t] + z[l][t] split into the set-aside and
// greedy semi-allocations. Plain allocations (witnesses, benchmarks) keep
// everything in the greedy part.
class Allocation {
 public:
  Allocation() = default;
  explicit Allocation(int num_goods) : num_goods_(num_goods) {}

  static Allocation zeros(int num_goods, int num_rounds) {
    Allocation a(num_goods);
    a.num_rounds_ = num_rounds;
    a.set_aside_.assign(static_cast<std::size_t>(num_goods) * num_rounds, 0.0);
    a.greedy_ = a.set_aside_;
    return a;
  }

  static Allocation from_total(int num_goods, int num_rounds,
                               std::vector<double> total) {
    if (total.size() != static_cast<std::size_t>(num_goods) * num_rounds)
      throw StructuralError("allocation: total has wrong size");
    Allocation a = zeros(num_goods, num_rounds);
    a.greedy_ = std::move(total);
    return a;
  }

  void append_round(std::span<const double> set_aside,
                    std::span<const double> greedy) {
    if (set_aside.size() != static_cast<std::size_t>(num_goods_) ||
        greedy.size() != static_cast<std::size_t>(num_goods_))
      throw StructuralError("allocation: round has wrong number of goods");
    set_aside_.insert(set_aside_.end(), set_aside.begin(), set_aside.end());
    greedy_.insert(greedy_.end(), greedy.begin(), greedy.end());
    ++num_rounds_;
  }

  int num_goods() const { return num_goods_; }
  int num_rounds() const { return num_rounds_; }

  double set_aside(int good, int round) const { return set_aside_[at(good, round)]; }
  double greedy(int good, int round) const { return greedy_[at(good, round)]; }
  double total(int good, int round) const {
    return set_aside_[at(good, round)] + greedy_[at(good, round)];
  }
  std::span<const double> set_aside_raw() const { return set_aside_; }
  std::span<const double> greedy_raw() const { return greedy_; }

  std::vector<double> totals() const {
    std::vector<double> x(set_aside_.size());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = set_aside_[k] + greedy_[k];
    return x;
  }

  double round_total(int round) const {
    double s = 0.0;
    for (int l = 0; l < num_goods_; ++l) s += total(l, round);
    return s;
  }
  double round_greedy(int round) const {
    double s = 0.0;
    for (int l = 0; l < num_goods_; ++l) s += greedy(l, round);
    return s;
  }
  double set_aside_sum() const { return sum_of(set_aside_); }
  double greedy_sum() const { return sum_of(greedy_); }
  double sum() const { return set_aside_sum() + greedy_sum(); }

  Allocation scaled(double factor) const {
    Allocation a = *this;
    for (double& v : a.set_aside_) v *= factor;
    for (double& v : a.greedy_) v *= factor;
    return a;
  }

  friend bool operator==(const Allocation&, const Allocation&) = default;

 private:
  std::size_t at(int good, int round) const {
    return static_cast<std::size_t>(round) * num_goods_ + good;
  }
  static double sum_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e;
    return s;
  }

  int num_goods_ = 0;
  int num_rounds_ = 0;
  std::vector<double> set_aside_;  // [t][l]
  std::vector<double> greedy_;     // [t][l]
};

// Predicted total values with their error brackets. `c` is analysis-only;
// `d` is what the algorithm may be told.
struct PredictionSet {
  std::vector<double> v_tilde;
  std::vector<double> c;
  std::vector<double> d;

  static PredictionSet perfect(const Instance& instance) {
    const int n = instance.num_agents();
    return PredictionSet{instance.total_values(), std::vector<double>(n, 1.0),
                         std::vector<double>(n, 1.0)};
  }

  // V/d <= V~ <= c V for every agent, with a relative tolerance.
  bool brackets(const Instance& instance, double rel_tol = 1e-12) const {
    for (int i = 0; i < instance.num_agents(); ++i) {
      const double v = instance.total_value(i);
      const double lo = v / d[i], hi = c[i] * v;
      if (v_tilde[i] < lo * (1 - rel_tol) || v_tilde[i] > hi * (1 + rel_tol))
        return false;
    }
    return true;
  }
};

using UtilityVector = std::vector<double>;

// u_i(x) = sum_{t,l} v[i][l][t] x[l][t].
inline UtilityVector utilities(const Instance& instance, const Allocation& alloc) {
  if (alloc.num_goods() != instance.num_goods() ||
      alloc.num_rounds() != instance.num_rounds())
    throw StructuralError("utilities: allocation does not match instance");
  UtilityVector u(instance.num_agents(), 0.0);
  for (int t = 0; t < instance.num_rounds(); ++t)
    for (int l = 0; l < instance.num_goods(); ++l) {
      const double x = alloc.total(l, t);
      if (x == 0.0) continue;
      for (int i = 0; i < instance.num_agents(); ++i)
        u[i] += instance.value(i, l, t) * x;
    }
  return u;
}

// Per-constraint slacks; negative means violated.
struct FeasibilityReport {
  double budget_slack = 0.0;     // B - sum x
  double round_slack = kInf;     // min_t (1 - sum_l x[l][t])
  double lower_slack = kInf;     // min x[l][t]
  double upper_slack = kInf;     // min (1 - x[l][t])
  bool feasible = true;
};

inline FeasibilityReport check_feasibility(const Allocation& alloc, double budget,
                                           double tol = kFeasTol) {
  FeasibilityReport r;
  r.budget_slack = budget - alloc.sum();
  for (int t = 0; t < alloc.num_rounds(); ++t) {
    r.round_slack = std::min(r.round_slack, 1.0 - alloc.round_total(t));
    for (int l = 0; l < alloc.num_goods(); ++l) {
      const double x = alloc.total(l, t);
      r.lower_slack = std::min({r.lower_slack, x, alloc.set_aside(l, t),
                                alloc.greedy(l, t)});
      r.upper_slack = std::min(r.upper_slack, 1.0 - x);
    }
  }
  r.feasible = r.budget_slack >= -tol && r.round_slack >= -tol &&
               r.lower_slack >= -tol && r.upper_slack >= -tol;
  return r;
}

}  // namespace pgfair
