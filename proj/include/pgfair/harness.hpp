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

// Experiment runner: instance sources, algorithm x prediction grids, run
// reports with every invariant checked, lower-bound suites and tables.

#pragma once

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "pgfair/engine.hpp"
#include "pgfair/generators.hpp"
#include "pgfair/io.hpp"
#include "pgfair/metrics.hpp"

namespace pgfair {

// Tolerances used to pass or fail a run.
struct CheckTolerances {
  double feasibility = 1e-9;
  double pf = 1e-4;
  double key_invariant = 1e-5;
  double dual = 1e-6;
};

// Where the instance of a cell comes from: a JSON file or a named generator
// with its parameters.
struct InstanceSource {
  std::string id;
  std::string file;
  std::string generator;  // random | binary_lower_bound | geometric |
                          // prediction_hardness | private_embed
  Json params = Json::object();
};

struct AlgorithmSpec {
  Variant variant = Variant::kBatched;
  std::optional<double> alpha;  // empty: certified default
  bool budget_guard = false;
};

struct PredictionSpec {
  enum class Kind { kPerfect, kBracket, kConstant };
  Kind kind = Kind::kPerfect;
  double c = 1.0;
  double d = 1.0;
  PredictionMode mode = PredictionMode::kWorstUnder;
  std::uint64_t seed = 0;
  double constant = 1.0;      // for kConstant
  bool disclose_d = true;     // pass d to the algorithm

  std::string label() const {
    char buf[128];
    switch (kind) {
      case Kind::kPerfect: return "perfect";
      case Kind::kConstant:
        std::snprintf(buf, sizeof buf, "constant=%.17g", constant);
        return buf;
      case Kind::kBracket:
        std::snprintf(buf, sizeof buf, "c=%.17g,d=%.17g,mode=%s,seed=%" PRIu64, c, d,
                      prediction_mode_name(mode), seed);
        return buf;
    }
    return "?";
  }
};

struct ExperimentConfig {
  std::vector<InstanceSource> instances;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<PredictionSpec> predictions{PredictionSpec{}};
  int trials = 1;
  std::string sweep = "index";  // x column of the plot data: index | d | c
  std::string csv_path;
  std::string json_path;
  std::string plot_path;
};

struct RunReport {
  std::string instance_id;
  std::string algorithm;
  std::string prediction;
  int trial = 0;
  double x = 0.0;

  double alpha = 0.0;
  double certified_alpha = 0.0;
  bool certified = false;
  UtilityVector utilities;
  double pf_value = 0.0;
  double nsw = 0.0;
  double benchmark_nsw = 0.0;
  double nsw_ratio = 0.0;
  double dual_bound = 0.0;
  bool dual_feasible = false;
  double dual_violation = 0.0;
  double key_invariant_residual = 0.0;
  double budget_slack = 0.0;
  double round_slack = 0.0;
  double set_aside_floor_residual = 0.0;  // min_i (sum v y - floor_i)
  double promised_residual = 0.0;         // max_i (u~_i - c_i u_i)
  double max_kkt_residual = 0.0;
  int max_solver_iterations = 0;
  long total_solver_iterations = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> failures;
  std::string error;
  bool passed = false;

  Allocation allocation;
  DualCertificate certificate;
};

namespace detail {

inline double num_param(const Json& p, const char* key, std::optional<double> dflt = {}) {
  if (!p.contains(key)) {
    if (dflt) return *dflt;
    throw ConfigError(std::string("generator parameter '") + key + "' is required");
  }
  if (!p.at(key).is_number())
    throw ConfigError(std::string("generator parameter '") + key + "' must be numeric");
  return p.at(key).get<double>();
}

inline int int_param(const Json& p, const char* key, std::optional<int> dflt = {}) {
  if (!p.contains(key)) {
    if (dflt) return *dflt;
    throw ConfigError(std::string("generator parameter '") + key + "' is required");
  }
  if (!p.at(key).is_number_integer())
    throw ConfigError(std::string("generator parameter '") + key + "' must be an integer");
  return p.at(key).get<int>();
}

}  // namespace detail

inline Instance make_instance(const InstanceSource& src) {
  if (!src.file.empty()) return load_instance(src.file);
  const Json& p = src.params;
  const std::string& g = src.generator;
  if (g == "random") {
    const std::string dist = p.value("dist", std::string("uniform01"));
    return gen_random(detail::int_param(p, "n"), detail::int_param(p, "l", 1),
                      detail::int_param(p, "t"), detail::num_param(p, "b", 1.0),
                      parse_distribution(dist, detail::num_param(p, "param", 0.0)),
                      static_cast<std::uint64_t>(detail::int_param(p, "seed", 0)));
  }
  if (g == "binary_lower_bound")
    return gen_binary_lower_bound(detail::int_param(p, "n"), detail::int_param(p, "k"));
  if (g == "geometric")
    return gen_geometric_no_predictions(detail::int_param(p, "t"),
                                        detail::int_param(p, "t_stop"),
                                        detail::num_param(p, "m", 1e3),
                                        detail::num_param(p, "b", 1.0));
  if (g == "prediction_hardness")
    return gen_prediction_hardness(detail::num_param(p, "b", 1.0),
                                   detail::int_param(p, "t_prime"),
                                   detail::int_param(p, "k"));
  if (g == "private_embed") {
    if (!p.contains("values") || !p.at("values").is_array())
      throw ConfigError("private_embed needs a 'values' matrix");
    return private_goods_embed(p.at("values").get<std::vector<std::vector<double>>>(),
                               detail::int_param(p, "l_per_round", 1));
  }
  throw ConfigError(src.generator.empty() ? "instance source needs 'file' or 'generator'"
                                          : "unknown generator '" + g + "'");
}

inline PredictionSet make_predictions(const Instance& inst, const PredictionSpec& spec) {
  const int n = inst.num_agents();
  switch (spec.kind) {
    case PredictionSpec::Kind::kPerfect:
      return PredictionSet::perfect(inst);
    case PredictionSpec::Kind::kConstant:
      return PredictionSet{std::vector<double>(n, spec.constant), {}, {}};
    case PredictionSpec::Kind::kBracket:
      return gen_predictions(inst, std::vector<double>(n, spec.c),
                             std::vector<double>(n, spec.d), spec.mode, spec.seed);
  }
  throw ConfigError("unknown prediction kind");
}

// Set-aside floor each agent is owed by construction of the variant.
inline std::vector<double> set_aside_floor(const Instance& inst, const EngineRun& run) {
  const int n = inst.num_agents();
  std::vector<double> floor(n, 0.0);
  const double T = run.horizon ? *run.horizon : inst.num_rounds();
  for (int i = 0; i < n; ++i) {
    switch (run.variant) {
      case Variant::kBinary:
        floor[i] = inst.agent_has_value(i) ? 1.0 / (2.0 * n) : 0.0;
        break;
      case Variant::kSingleGood:
        floor[i] = run.budget / (2.0 * T) * inst.total_value(i);
        break;
      case Variant::kBatched:
        floor[i] = run.budget / (2.0 * std::min(n, inst.num_goods()) * T) *
                   inst.total_value(i);
        break;
    }
  }
  return floor;
}

inline double set_aside_value(const Instance& inst, const Allocation& a, int agent) {
  double s = 0.0;
  for (int t = 0; t < a.num_rounds(); ++t)
    for (int l = 0; l < a.num_goods(); ++l) s += inst.value(agent, l, t) * a.set_aside(l, t);
  return s;
}

// Attaches every metric and invariant check to a finished engine run.
inline RunReport evaluate_run(const Instance& inst, const PredictionSet& pred,
                              const EngineRun& run, const CheckTolerances& tol = {}) {
  RunReport r;
  const int n = inst.num_agents();
  r.alpha = run.alpha;
  r.certified_alpha = run.certified_alpha;
  r.certified = run.certified && !run.guard_engaged;
  r.allocation = run.allocation;
  r.certificate = run.certificate;
  r.warnings = run.warnings;
  r.utilities = utilities(inst, run.allocation);
  std::vector<double> c = pred.c.size() == static_cast<std::size_t>(n)
                              ? pred.c
                              : std::vector<double>(n, 1.0);
  if (run.variant == Variant::kBinary) c.assign(n, 1.0);

  r.pf_value = evaluate_pf(inst, run.allocation, c).pf_value;
  r.nsw = nash_welfare(r.utilities);
  const auto bench = offline_pf_benchmark(inst);
  r.benchmark_nsw = nash_welfare(inst, bench.allocation);
  r.nsw_ratio = ratio(r.benchmark_nsw, r.nsw);

  const auto cert = verify_certificate(inst, run.allocation, run.certificate, c, tol.dual);
  r.dual_bound = cert.bound;
  r.dual_feasible = cert.feasible;
  r.dual_violation = cert.max_violation;
  r.key_invariant_residual = key_invariant_residual(run);

  const auto feas = check_feasibility(run.allocation, inst.budget(), tol.feasibility);
  r.budget_slack = feas.budget_slack;
  r.round_slack = feas.round_slack;

  const auto floor = set_aside_floor(inst, run);
  r.set_aside_floor_residual = kInf;
  for (int i = 0; i < n; ++i)
    r.set_aside_floor_residual = std::min(
        r.set_aside_floor_residual, set_aside_value(inst, run.allocation, i) - floor[i]);
  if (n == 0) r.set_aside_floor_residual = 0.0;

  r.promised_residual = -kInf;
  for (int i = 0; i < n && i < static_cast<int>(run.promised_final.size()); ++i)
    r.promised_residual =
        std::max(r.promised_residual, run.promised_final[i] - c[i] * r.utilities[i]);
  if (!std::isfinite(r.promised_residual)) r.promised_residual = 0.0;

  r.max_kkt_residual = run.max_kkt_residual();
  for (int it : run.solver_iterations) {
    r.max_solver_iterations = std::max(r.max_solver_iterations, it);
    r.total_solver_iterations += it;
  }

  auto fail = [&](bool bad, const std::string& what) {
    if (bad) r.failures.push_back(what);
  };
  fail(!feas.feasible, "allocation infeasible");
  fail(r.set_aside_floor_residual < -tol.feasibility * std::max(1.0, inst.budget()),
       "set-aside floor violated");
  const bool brackets = run.variant == Variant::kBinary || pred.brackets(inst);
  if (r.certified && brackets) {
    fail(r.pf_value > r.alpha + tol.pf, "pf value exceeds alpha");
    fail(!cert.feasible, "dual certificate infeasible");
    fail(cert.feasible && r.pf_value > r.dual_bound + tol.pf, "weak duality violated");
    fail(r.key_invariant_residual > tol.key_invariant, "key invariant violated");
    fail(r.promised_residual > tol.feasibility * std::max(1.0, inst.budget()),
         "promised utility exceeds c * u");
    fail(r.max_kkt_residual > 1e-6, "solver KKT residual too large");
  }
  r.passed = r.failures.empty();
  return r;
}

inline AlgorithmConfig algorithm_config(const AlgorithmSpec& a, const PredictionSpec& p,
                                        int num_agents) {
  AlgorithmConfig cfg;
  cfg.variant = a.variant;
  cfg.alpha = a.alpha;
  cfg.budget_guard = a.budget_guard;
  if (a.variant != Variant::kBinary) {
    if (p.kind == PredictionSpec::Kind::kPerfect)
      cfg.d_bound.assign(num_agents, 1.0);
    else if (p.kind == PredictionSpec::Kind::kBracket && p.disclose_d)
      cfg.d_bound.assign(num_agents, p.d);
  }
  return cfg;
}

inline std::string algorithm_label(const AlgorithmSpec& a) {
  return variant_name(a.variant);
}

inline double sweep_value(const std::string& sweep, const PredictionSpec& p, int cell) {
  if (sweep == "d") return p.d;
  if (sweep == "c") return p.c;
  if (sweep == "index") return cell;
  throw ConfigError("unknown sweep '" + sweep + "'");
}

inline bool report_less(const RunReport& a, const RunReport& b) {
  return std::tie(a.instance_id, a.algorithm, a.x, a.prediction, a.trial) <
         std::tie(b.instance_id, b.algorithm, b.x, b.prediction, b.trial);
}

// Runs every (instance, algorithm, prediction, trial) cell. A cell whose
// engine or instance raises records the error and fails.
inline std::vector<RunReport> run_experiment(const ExperimentConfig& cfg,
                                             const CheckTolerances& tol = {}) {
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  std::vector<RunReport> reports;
  int cell = 0;
  for (std::size_t s = 0; s < cfg.instances.size(); ++s) {
    const auto& src = cfg.instances[s];
    const std::string id = src.id.empty() ? "instance" + std::to_string(s) : src.id;
    std::optional<Instance> inst;
    std::string load_error;
    try {
      inst = make_instance(src);
    } catch (const Error& e) {
      load_error = e.what();
    }
    for (const auto& algo : cfg.algorithms)
      for (const auto& pspec : cfg.predictions) {
        for (int trial = 0; trial < cfg.trials; ++trial) {
          RunReport rep;
          try {
            if (!inst) throw InputError(load_error);
            const auto pred = make_predictions(*inst, pspec);
            const auto run = run_algorithm(
                *inst, pred, algorithm_config(algo, pspec, inst->num_agents()));
            rep = evaluate_run(*inst, pred, run, tol);
          } catch (const Error& e) {
            rep = RunReport{};
            rep.error = e.what();
            rep.failures.push_back(std::string("error: ") + e.what());
            rep.passed = false;
          }
          rep.instance_id = id;
          rep.algorithm = algorithm_label(algo);
          rep.prediction = pspec.label();
          rep.trial = trial;
          rep.x = sweep_value(cfg.sweep, pspec, cell);
          reports.push_back(std::move(rep));
        }
        ++cell;
      }
  }
  std::stable_sort(reports.begin(), reports.end(), report_less);
  return reports;
}

// ---- Configuration parsing ----

inline PredictionSpec prediction_spec_from_json(const Json& j) {
  PredictionSpec p;
  if (j.is_string()) {
    if (j.get<std::string>() != "perfect")
      throw ConfigError("prediction must be \"perfect\" or an object");
    return p;
  }
  if (!j.is_object()) throw ConfigError("prediction must be \"perfect\" or an object");
  const std::string kind = j.value("kind", std::string(j.contains("constant") ? "constant"
                                                       : j.contains("d") || j.contains("c")
                                                           ? "bracket"
                                                           : "perfect"));
  if (kind == "perfect") return p;
  if (kind == "constant") {
    p.kind = PredictionSpec::Kind::kConstant;
    p.constant = j.value("constant", 1.0);
    if (!(p.constant >= 0.0)) throw ConfigError("constant prediction must be >= 0");
    return p;
  }
  if (kind != "bracket") throw ConfigError("unknown prediction kind '" + kind + "'");
  p.kind = PredictionSpec::Kind::kBracket;
  p.c = j.value("c", 1.0);
  p.d = j.value("d", 1.0);
  p.mode = parse_prediction_mode(j.value("mode", std::string("worst_under")));
  p.seed = j.value("seed", static_cast<std::uint64_t>(0));
  p.disclose_d = j.value("disclose_d", true);
  if (!(p.c >= 1.0) || !(p.d >= 1.0)) throw ConfigError("c and d must be >= 1");
  return p;
}

inline Json to_json(const PredictionSpec& p) {
  switch (p.kind) {
    case PredictionSpec::Kind::kPerfect: return "perfect";
    case PredictionSpec::Kind::kConstant:
      return Json{{"kind", "constant"}, {"constant", p.constant}};
    case PredictionSpec::Kind::kBracket:
      return Json{{"kind", "bracket"}, {"c", p.c}, {"d", p.d},
                  {"mode", prediction_mode_name(p.mode)}, {"seed", p.seed},
                  {"disclose_d", p.disclose_d}};
  }
  return nullptr;
}

inline AlgorithmSpec algorithm_spec_from_json(const Json& j) {
  AlgorithmSpec a;
  if (j.is_string()) {
    a.variant = parse_variant(j.get<std::string>());
    return a;
  }
  if (!j.is_object() || !j.contains("variant"))
    throw ConfigError("algorithm needs a 'variant'");
  a.variant = parse_variant(j.at("variant").get<std::string>());
  if (j.contains("alpha")) {
    const Json& al = j.at("alpha");
    if (al.is_number()) {
      a.alpha = al.get<double>();
    } else if (!(al.is_string() && al.get<std::string>() == "auto")) {
      throw ConfigError("alpha must be a number or \"auto\"");
    }
  }
  a.budget_guard = j.value("budget_guard", false);
  return a;
}

inline Json to_json(const AlgorithmSpec& a) {
  Json j{{"variant", variant_name(a.variant)}, {"budget_guard", a.budget_guard}};
  j["alpha"] = a.alpha ? Json(*a.alpha) : Json("auto");
  return j;
}

inline ExperimentConfig experiment_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be an object");
  ExperimentConfig cfg;
  try {
    for (const auto& s : j.value("instances", Json::array())) {
      InstanceSource src;
      src.id = s.value("id", std::string());
      src.file = s.value("file", std::string());
      src.generator = s.value("generator", std::string());
      src.params = s.value("params", Json::object());
      cfg.instances.push_back(std::move(src));
    }
    if (!j.contains("algorithms")) throw ConfigError("config needs 'algorithms'");
    for (const auto& a : j.at("algorithms")) cfg.algorithms.push_back(algorithm_spec_from_json(a));
    if (j.contains("predictions")) {
      cfg.predictions.clear();
      for (const auto& p : j.at("predictions"))
        cfg.predictions.push_back(prediction_spec_from_json(p));
    }
    cfg.trials = j.value("trials", 1);
    cfg.sweep = j.value("sweep", std::string("index"));
    if (j.contains("output")) {
      const Json& o = j.at("output");
      cfg.csv_path = o.value("csv", std::string());
      cfg.json_path = o.value("json", std::string());
      cfg.plot_path = o.value("plot", std::string());
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  return cfg;
}

inline Json to_json(const ExperimentConfig& cfg) {
  Json inst = Json::array();
  for (const auto& s : cfg.instances) {
    Json o{{"id", s.id}};
    if (!s.file.empty()) o["file"] = s.file;
    if (!s.generator.empty()) {
      o["generator"] = s.generator;
      o["params"] = s.params;
    }
    inst.push_back(std::move(o));
  }
  Json algos = Json::array(), preds = Json::array();
  for (const auto& a : cfg.algorithms) algos.push_back(to_json(a));
  for (const auto& p : cfg.predictions) preds.push_back(to_json(p));
  return Json{{"instances", inst}, {"algorithms", algos}, {"predictions", preds},
              {"trials", cfg.trials}, {"sweep", cfg.sweep},
              {"output", {{"csv", cfg.csv_path}, {"json", cfg.json_path},
                          {"plot", cfg.plot_path}}}};
}

// FNV-1a over the canonical serialization.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : to_json(cfg).dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

// ---- Tables ----

inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_real(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InputError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw InputError("not a number: '" + s + "'");
  return v;
}

// One row of the summary table.
struct TableRow {
  std::string instance_id;
  std::string algorithm;
  double alpha = 0.0;
  double pf = 0.0;
  double nsw = 0.0;
  double nsw_ratio = 0.0;
  double dual_bound = 0.0;
  double key_invariant_residual = 0.0;

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

inline const char* kTableHeader =
    "instance_id,algorithm,alpha,pf,nsw,nsw_ratio,dual_bound,key_invariant_residual";

inline TableRow table_row(const RunReport& r) {
  return TableRow{r.instance_id, r.algorithm, r.alpha, r.pf_value,
                  r.nsw, r.nsw_ratio, r.dual_bound, r.key_invariant_residual};
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

inline std::string reports_to_csv(const std::vector<RunReport>& reports) {
  std::string out = std::string(kTableHeader) + "\n";
  for (const auto& r : reports) {
    const auto row = table_row(r);
    out += detail::csv_field(row.instance_id) + "," + detail::csv_field(row.algorithm) +
           "," + format_real(row.alpha) + "," + format_real(row.pf) + "," +
           format_real(row.nsw) + "," + format_real(row.nsw_ratio) + "," +
           format_real(row.dual_bound) + "," + format_real(row.key_invariant_residual) +
           "\n";
  }
  return out;
}

inline std::vector<TableRow> table_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTableHeader)
    throw InputError("table: unexpected CSV header");
  std::vector<TableRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 8) throw InputError("table: expected 8 columns");
    rows.push_back(TableRow{f[0], f[1], parse_real(f[2]), parse_real(f[3]),
                            parse_real(f[4]), parse_real(f[5]), parse_real(f[6]),
                            parse_real(f[7])});
  }
  return rows;
}

inline Json to_json(const RunReport& r, bool include_allocation = true) {
  Json u = Json::array();
  for (double e : r.utilities) u.push_back(encode_real(e));
  Json p = Json::array();
  for (double e : r.certificate.p) p.push_back(encode_real(e));
  Json j{
      {"instance_id", r.instance_id},
      {"algorithm", r.algorithm},
      {"prediction", r.prediction},
      {"trial", r.trial},
      {"x", encode_real(r.x)},
      {"alpha", encode_real(r.alpha)},
      {"certified_alpha", encode_real(r.certified_alpha)},
      {"certified", r.certified},
      {"utilities", u},
      {"pf", encode_real(r.pf_value)},
      {"nsw", encode_real(r.nsw)},
      {"benchmark_nsw", encode_real(r.benchmark_nsw)},
      {"nsw_ratio", encode_real(r.nsw_ratio)},
      {"dual_bound", encode_real(r.dual_bound)},
      {"certificate", {{"q", encode_real(r.certificate.q)}, {"p", p},
                       {"feasible", r.dual_feasible},
                       {"max_violation", encode_real(r.dual_violation)}}},
      {"residuals",
       {{"key_invariant", encode_real(r.key_invariant_residual)},
        {"budget_slack", encode_real(r.budget_slack)},
        {"round_slack", encode_real(r.round_slack)},
        {"set_aside_floor", encode_real(r.set_aside_floor_residual)},
        {"promised", encode_real(r.promised_residual)},
        {"max_kkt", encode_real(r.max_kkt_residual)}}},
      {"solver", {{"max_iterations", r.max_solver_iterations},
                  {"total_iterations", r.total_solver_iterations}}},
      {"warnings", r.warnings},
      {"failures", r.failures},
      {"error", r.error},
      {"passed", r.passed},
  };
  if (include_allocation && r.allocation.num_goods() > 0) j["alloc"] = to_json(r.allocation);
  return j;
}

inline std::vector<TableRow> table_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("runs") || !j.at("runs").is_array())
    throw InputError("table: JSON needs a 'runs' array");
  std::vector<TableRow> rows;
  for (const auto& r : j.at("runs"))
    rows.push_back(TableRow{r.at("instance_id").get<std::string>(),
                            r.at("algorithm").get<std::string>(), decode_real(r.at("alpha")),
                            decode_real(r.at("pf")), decode_real(r.at("nsw")),
                            decode_real(r.at("nsw_ratio")), decode_real(r.at("dual_bound")),
                            decode_real(r.at("residuals").at("key_invariant"))});
  return rows;
}

inline Json reports_to_json(const std::vector<RunReport>& reports,
                            std::optional<std::uint64_t> hash = {}) {
  Json runs = Json::array();
  for (const auto& r : reports) runs.push_back(to_json(r));
  Json j{{"runs", runs}};
  if (hash) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, *hash);
    j["config_hash"] = buf;
  }
  return j;
}

// Plot companion: swept parameter against pf and nsw_ratio, with the
// certified threshold as a reference line.
inline std::string plot_data_csv(const std::vector<RunReport>& reports) {
  std::string out = "x,pf,nsw_ratio,certified_alpha\n";
  for (const auto& r : reports)
    out += format_real(r.x) + "," + format_real(r.pf_value) + "," +
           format_real(r.nsw_ratio) + "," + format_real(r.certified_alpha) + "\n";
  return out;
}

enum class TableFormat { kCsv, kJson };

inline TableFormat parse_table_format(const std::string& s) {
  if (s == "csv") return TableFormat::kCsv;
  if (s == "json") return TableFormat::kJson;
  throw ConfigError("unknown format '" + s + "'");
}

// Writes the table at `path` and the plot data next to it (`path` with
// ".plot.csv" appended) unless `plot_path` is given.
inline void emit_tables(const std::vector<RunReport>& reports, TableFormat format,
                        const std::string& path, const std::string& plot_path = {},
                        std::optional<std::uint64_t> hash = {}) {
  std::vector<RunReport> sorted = reports;
  std::stable_sort(sorted.begin(), sorted.end(), report_less);
  if (format == TableFormat::kCsv)
    write_text_file(path, reports_to_csv(sorted));
  else
    write_text_file(path, reports_to_json(sorted, hash).dump(2) + "\n");
  write_text_file(plot_path.empty() ? path + ".plot.csv" : plot_path, plot_data_csv(sorted));
}

// ---- Lower-bound suites ----

enum class SuiteFamily { kBinary, kGeometric, kPredictionHardness };

inline SuiteFamily parse_suite_family(const std::string& s) {
  if (s == "binary") return SuiteFamily::kBinary;
  if (s == "geometric") return SuiteFamily::kGeometric;
  if (s == "prediction_hardness") return SuiteFamily::kPredictionHardness;
  throw ConfigError("unknown suite family '" + s + "'");
}

inline const char* suite_family_name(SuiteFamily f) {
  switch (f) {
    case SuiteFamily::kBinary: return "binary";
    case SuiteFamily::kGeometric: return "geometric";
    case SuiteFamily::kPredictionHardness: return "prediction_hardness";
  }
  return "?";
}

struct SuiteParams {
  int n = 4;          // binary
  int horizon = 8;    // geometric T
  double m = 1e3;     // geometric M
  double budget = 1;  // geometric and prediction hardness B
  int t_prime = 6;    // prediction hardness T'
};

struct SuiteEntry {
  int k = 0;  // k, or t_stop for the geometric family
  double algorithm_nsw = 0.0;
  double comparator_nsw = 0.0;
  double ratio = 0.0;
  double pf_value = 0.0;
  bool run_ok = true;
  std::vector<std::string> warnings;
};

struct SuiteReport {
  SuiteFamily family = SuiteFamily::kBinary;
  SuiteParams params;
  std::string algorithm;
  std::vector<SuiteEntry> entries;
  double max_ratio = 0.0;
  double floor = 0.0;
  bool passed = false;
};

// Runs the family's designated algorithm on each instance of the family and
// compares it with the explicit hindsight allocation used in the hardness
// argument. Passes when the largest NSW ratio reaches the floor.
inline SuiteReport lower_bound_suite(SuiteFamily family, const SuiteParams& params,
                                     double floor_tol = 1e-6) {
  SuiteReport rep;
  rep.family = family;
  rep.params = params;
  std::vector<std::pair<int, Instance>> family_instances;
  AlgorithmConfig cfg;
  switch (family) {
    case SuiteFamily::kBinary:
      rep.algorithm = "binary";
      rep.floor = harmonic(params.n) / 2.0;
      cfg.variant = Variant::kBinary;
      for (int k = 1; k <= params.n - 1; ++k)
        family_instances.emplace_back(k, gen_binary_lower_bound(params.n, k));
      break;
    case SuiteFamily::kGeometric:
      rep.algorithm = "single (constant predictions, budget guard)";
      rep.floor = params.horizon / (2.0 * params.budget);
      cfg.variant = Variant::kSingleGood;
      cfg.budget_guard = true;
      cfg.d_bound = {1.0};
      for (int t = 1; t <= params.horizon; ++t)
        family_instances.emplace_back(
            t, gen_geometric_no_predictions(params.horizon, t, params.m, params.budget));
      break;
    case SuiteFamily::kPredictionHardness:
      rep.algorithm = "single (perfect predictions)";
      rep.floor = harmonic(params.t_prime) / 2.0;
      cfg.variant = Variant::kSingleGood;
      cfg.d_bound = {1.0};
      for (int k = 1; k <= params.t_prime - 1; ++k)
        family_instances.emplace_back(
            k, gen_prediction_hardness(params.budget, params.t_prime, k));
      break;
  }
  rep.passed = true;
  for (const auto& [k, inst] : family_instances) {
    SuiteEntry e;
    e.k = k;
    PredictionSet pred;
    std::vector<double> w(static_cast<std::size_t>(inst.num_rounds()), 0.0);
    switch (family) {
      case SuiteFamily::kBinary: {
        const int off = binary_block_offset(params.n, k);
        for (int j = 0; j < params.n; ++j) w[off + j] = 1.0 / params.n;
        break;
      }
      case SuiteFamily::kGeometric:
        pred = PredictionSet{{1.0}, {}, {}};
        w[k - 1] = 1.0;
        break;
      case SuiteFamily::kPredictionHardness: {
        pred = PredictionSet::perfect(inst);
        const int off = prediction_block_offset(static_cast<int>(params.budget), k);
        for (int j = 0; j < static_cast<int>(params.budget); ++j) w[off + j] = 1.0;
        break;
      }
    }
    const auto comparator = Allocation::from_total(1, inst.num_rounds(), w);
    try {
      const auto run = run_algorithm(inst, pred, cfg);
      e.warnings = run.warnings;
      e.algorithm_nsw = nash_welfare(inst, run.allocation);
      e.pf_value = evaluate_pf(inst, run.allocation).pf_value;
      const auto feas = check_feasibility(run.allocation, inst.budget());
      e.run_ok = feas.feasible;
    } catch (const Error& err) {
      e.run_ok = false;
      e.warnings.push_back(std::string("error: ") + err.what());
    }
    e.comparator_nsw = nash_welfare(inst, comparator);
    e.ratio = ratio(e.comparator_nsw, e.algorithm_nsw);
    rep.max_ratio = std::max(rep.max_ratio, e.ratio);
    if (!e.run_ok) rep.passed = false;
    rep.entries.push_back(std::move(e));
  }
  if (!(rep.max_ratio >= rep.floor - floor_tol)) rep.passed = false;
  return rep;
}

inline Json to_json(const SuiteReport& s) {
  Json entries = Json::array();
  for (const auto& e : s.entries)
    entries.push_back(Json{{"k", e.k},
                           {"algorithm_nsw", encode_real(e.algorithm_nsw)},
                           {"comparator_nsw", encode_real(e.comparator_nsw)},
                           {"ratio", encode_real(e.ratio)},
                           {"pf", encode_real(e.pf_value)},
                           {"run_ok", e.run_ok},
                           {"warnings", e.warnings}});
  return Json{{"family", suite_family_name(s.family)},
              {"algorithm", s.algorithm},
              {"params", {{"n", s.params.n}, {"t", s.params.horizon}, {"m", s.params.m},
                          {"b", s.params.budget}, {"t_prime", s.params.t_prime}}},
              {"entries", entries},
              {"max_ratio", encode_real(s.max_ratio)},
              {"floor", encode_real(s.floor)},
              {"passed", s.passed}};
}

}  // namespace pgfair
