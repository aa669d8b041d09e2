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

// pgfair command line: gen, run, eval, suite, bench.
//
// Exit codes: 0 all invariants hold, 1 some run or suite failed its checks,
// 2 usage or input error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pgfair.hpp"

namespace {

using namespace pgfair;

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    write_text_file(out, text);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// "key=value" pairs become JSON numbers when they parse as numbers.
Json parse_params(const std::vector<std::string>& kv) {
  Json p = Json::object();
  for (const auto& item : kv) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("parameter '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
    try {
      p[key] = Json::parse(val);
    } catch (const Json::parse_error&) {
      p[key] = val;
    }
  }
  return p;
}

// perfect | constant=v | c=..,d=..,mode=..,seed=..
PredictionSpec parse_prediction_flag(const std::string& s, std::uint64_t seed) {
  if (s == "perfect") return PredictionSpec{};
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string piece; std::getline(ss, piece, ',');) parts.push_back(piece);
  Json j = parse_params(parts);
  if (!j.contains("constant")) {
    j["kind"] = "bracket";
    if (!j.contains("seed")) j["seed"] = seed;
  }
  return prediction_spec_from_json(j);
}

struct LoadedInstance {
  Instance instance;
  bool reveal_horizon = true;
};

// Instance JSON, or a line-delimited round stream when the name ends in
// ".jsonl". A stream with t_total = null hides the horizon.
LoadedInstance load_any(const std::string& path) {
  if (!ends_with(path, ".jsonl")) return {load_instance(path), true};
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  JsonLinesStream stream(in);
  const auto header = stream.header();
  std::vector<double> values;
  int rounds = 0;
  while (auto batch = stream.next()) {
    if (batch->round != rounds + 1) throw InputError("stream rounds must arrive in order");
    values.insert(values.end(), batch->values.begin(), batch->values.end());
    ++rounds;
  }
  if (header.horizon && *header.horizon != rounds)
    throw InputError("stream announced " + std::to_string(*header.horizon) +
                     " rounds but delivered " + std::to_string(rounds));
  return {Instance(header.num_agents, header.num_goods, rounds, header.budget,
                   std::move(values)),
          header.horizon.has_value()};
}

EngineRun run_loaded(const LoadedInstance& li, const PredictionSet& pred,
                     const AlgorithmConfig& cfg) {
  InstanceStream stream(li.instance, li.reveal_horizon && cfg.variant != Variant::kBinary);
  switch (cfg.variant) {
    case Variant::kBinary: return run_binary(stream, cfg);
    case Variant::kSingleGood: return run_single_good(stream, pred, cfg);
    case Variant::kBatched: return run_batched(stream, pred, cfg);
  }
  throw ConfigError("unknown variant");
}

// 0 when every run passed, 2 when a run raised an error, 1 otherwise.
int report_exit(const std::vector<RunReport>& reports) {
  int failed = 0;
  bool errored = false;
  for (const auto& r : reports)
    if (!r.passed) {
      ++failed;
      errored = errored || !r.error.empty();
      std::cerr << r.instance_id << " / " << r.algorithm << " / " << r.prediction << ":";
      for (const auto& f : r.failures) std::cerr << " " << f << ";";
      std::cerr << "\n";
    }
  if (errored) return 2;
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online proportionally fair allocation of public goods"};
  app.require_subcommand(1);

  // gen
  std::string gen_name, gen_out;
  std::vector<std::string> gen_params;
  bool gen_stream = false, gen_hide_horizon = false;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("gen", "Generate an instance");
  gen->add_option("generator", gen_name,
                  "random | binary_lower_bound | geometric | prediction_hardness | private_embed")
      ->required();
  gen->add_option("-p,--param", gen_params, "Generator parameter key=value (repeatable)");
  gen->add_option("--seed", seed, "Seed for the random generator");
  gen->add_option("--out", gen_out, "Output path (default stdout)");
  gen->add_flag("--stream", gen_stream, "Write the line-delimited round stream");
  gen->add_flag("--hide-horizon", gen_hide_horizon, "Stream header with t_total = null");

  // run
  std::string instance_path, algo = "batched", alpha = "auto", pred = "perfect", out,
              format, config_path;
  bool guard = false;
  auto* run = app.add_subcommand("run", "Run an algorithm or an experiment config");
  run->add_option("--instance", instance_path, "Instance JSON or .jsonl stream");
  run->add_option("--config", config_path, "Experiment config JSON");
  run->add_option("--algo", algo, "binary | single | batched")
      ->check(CLI::IsMember({"binary", "single", "batched"}));
  run->add_option("--alpha", alpha, "Threshold alpha or 'auto'");
  run->add_option("--pred", pred, "perfect | constant=v | c=..,d=..,mode=..");
  run->add_option("--seed", seed, "Seed for generated predictions");
  run->add_flag("--budget-guard", guard, "Cap greedy spending by B/2 (voids the certificate)");
  run->add_option("--out", out, "Output path (default stdout)");
  run->add_option("--format", format, "csv | json (default from --out extension)")->check(CLI::IsMember({"csv", "json"}));

  // eval
  std::string alloc_path;
  auto* eval = app.add_subcommand("eval", "Evaluate an allocation");
  eval->add_option("--instance", instance_path, "Instance JSON")->required();
  eval->add_option("--alloc", alloc_path, "Allocation JSON")->required();
  eval->add_option("--out", out, "Output path (default stdout)");
  eval->add_option("--format", format, "csv | json (default from --out extension)")->check(CLI::IsMember({"csv", "json"}));

  // suite
  std::string family;
  SuiteParams sp;
  auto* suite = app.add_subcommand("suite", "Run a lower-bound suite");
  suite->add_option("family", family, "binary | geometric | prediction_hardness")
      ->required()
      ->check(CLI::IsMember({"binary", "geometric", "prediction_hardness"}));
  suite->add_option("--n", sp.n, "Agents (binary)");
  suite->add_option("--t", sp.horizon, "Horizon T (geometric)");
  suite->add_option("--m", sp.m, "Growth factor M (geometric)");
  suite->add_option("--b", sp.budget, "Budget B");
  suite->add_option("--t-prime", sp.t_prime, "T' (prediction_hardness)");
  suite->add_option("--out", out, "Output path (default stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "Offline proportionally fair benchmark");
  bench->add_option("--instance", instance_path, "Instance JSON")->required();
  bench->add_option("--out", out, "Output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  // Without --format, a .csv output path selects CSV; JSON otherwise.
  if (format.empty())
    format = out.size() >= 4 && out.compare(out.size() - 4, 4, ".csv") == 0 ? "csv" : "json";

  try {
    if (gen->parsed()) {
      InstanceSource src;
      src.generator = gen_name;
      src.params = parse_params(gen_params);
      if (gen_name == "random" && !src.params.contains("seed")) src.params["seed"] = seed;
      const Instance inst = make_instance(src);
      emit(gen_out, gen_stream ? to_json_lines(inst, !gen_hide_horizon)
                               : to_json(inst).dump() + "\n");
      return 0;
    }

    if (run->parsed()) {
      std::vector<RunReport> reports;
      std::optional<std::uint64_t> hash;
      if (!config_path.empty()) {
        const auto cfg = experiment_config_from_json(read_json_file(config_path));
        hash = config_hash(cfg);
        reports = run_experiment(cfg);
        if (!cfg.csv_path.empty()) emit_tables(reports, TableFormat::kCsv, cfg.csv_path, cfg.plot_path);
        if (!cfg.json_path.empty())
          emit_tables(reports, TableFormat::kJson, cfg.json_path,
                      cfg.csv_path.empty() ? cfg.plot_path : std::string(), hash);
      } else {
        if (instance_path.empty()) throw ConfigError("run needs --instance or --config");
        const auto li = load_any(instance_path);
        AlgorithmSpec as;
        as.variant = parse_variant(algo);
        if (alpha != "auto") as.alpha = parse_real(alpha);
        as.budget_guard = guard;
        const auto ps = parse_prediction_flag(pred, seed);
        RunReport rep;
        try {
          const auto pset = make_predictions(li.instance, ps);
          const auto er =
              run_loaded(li, pset, algorithm_config(as, ps, li.instance.num_agents()));
          rep = evaluate_run(li.instance, pset, er);
        } catch (const Error& e) {
          rep.error = e.what();
          rep.failures.push_back(std::string("error: ") + e.what());
        }
        rep.instance_id = instance_path;
        rep.algorithm = algorithm_label(as);
        rep.prediction = ps.label();
        reports.push_back(std::move(rep));
      }
      emit(out, format == "csv" ? reports_to_csv(reports)
                                : reports_to_json(reports, hash).dump(2) + "\n");
      return report_exit(reports);
    }

    if (eval->parsed()) {
      const Instance inst = load_instance(instance_path);
      const Allocation a = allocation_from_json(read_json_file(alloc_path));
      if (a.num_goods() != inst.num_goods() || a.num_rounds() != inst.num_rounds())
        throw StructuralError("allocation does not match the instance shape");
      const auto feas = check_feasibility(a, inst.budget());
      const auto pf = evaluate_pf(inst, a);
      const auto bench_res = offline_pf_benchmark(inst);
      const double bnsw = nash_welfare(inst, bench_res.allocation);
      RunReport rep;
      rep.instance_id = instance_path;
      rep.algorithm = "given";
      rep.utilities = utilities(inst, a);
      rep.pf_value = pf.pf_value;
      rep.nsw = nash_welfare(rep.utilities);
      rep.benchmark_nsw = bnsw;
      rep.nsw_ratio = ratio(bnsw, rep.nsw);
      rep.dual_bound = kInf;
      rep.budget_slack = feas.budget_slack;
      rep.round_slack = feas.round_slack;
      if (!feas.feasible) rep.failures.push_back("allocation infeasible");
      rep.passed = rep.failures.empty();
      std::vector<RunReport> reports{rep};
      emit(out, format == "csv" ? reports_to_csv(reports)
                                : reports_to_json(reports).dump(2) + "\n");
      return report_exit(reports);
    }

    if (suite->parsed()) {
      const auto rep = lower_bound_suite(parse_suite_family(family), sp);
      emit(out, to_json(rep).dump(2) + "\n");
      if (!rep.passed)
        std::cerr << family << ": max ratio " << format_real(rep.max_ratio) << " below floor "
                  << format_real(rep.floor) << "\n";
      return rep.passed ? 0 : 1;
    }

    if (bench->parsed()) {
      const Instance inst = load_instance(instance_path);
      const auto b = offline_pf_benchmark(inst);
      Json u = Json::array();
      for (double e : utilities(inst, b.allocation)) u.push_back(encode_real(e));
      const Json j{{"alloc", to_json(b.allocation)},
                   {"utilities", u},
                   {"nsw", encode_real(nash_welfare(inst, b.allocation))},
                   {"pf", encode_real(b.pf_value)},
                   {"duality_gap", encode_real(b.duality_gap)},
                   {"iterations", b.iterations},
                   {"all_zero", b.all_zero}};
      emit(out, j.dump(2) + "\n");
      return b.pf_value <= 1.0 + 1e-4 ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
