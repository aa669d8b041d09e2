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

// JSON encodings of instances, round streams, allocations and predictions.

#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pgfair/model.hpp"

namespace pgfair {

using Json = nlohmann::json;

class IoError : public Error {
 public:
  using Error::Error;
};

// Doubles with +-inf and NaN spelled as strings; plain JSON has no literal.
inline Json encode_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double decode_real(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw InputError("expected a number, got " + j.dump());
}

namespace detail {

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw InputError(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline int int_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) throw InputError(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

inline std::vector<double> read_matrix(const Json& rows, int n_rows, int n_cols,
                                       const char* what) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != n_rows)
    throw StructuralError(std::string(what) + ": wrong number of rows");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_rows) * n_cols);
  for (const auto& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != n_cols)
      throw StructuralError(std::string(what) + ": wrong number of columns");
    for (const auto& v : row) {
      if (!v.is_number()) throw InputError(std::string(what) + ": non-numeric entry");
      out.push_back(v.get<double>());
    }
  }
  return out;
}

}  // namespace detail

inline Json to_json(const Instance& inst) {
  Json values = Json::array();
  for (int t = 0; t < inst.num_rounds(); ++t) {
    Json round = Json::array();
    for (int i = 0; i < inst.num_agents(); ++i) {
      Json row = Json::array();
      for (int l = 0; l < inst.num_goods(); ++l) row.push_back(inst.value(i, l, t));
      round.push_back(std::move(row));
    }
    values.push_back(std::move(round));
  }
  return Json{{"n", inst.num_agents()},
              {"t", inst.num_rounds()},
              {"l", inst.num_goods()},
              {"b", inst.budget()},
              {"values", std::move(values)}};
}

inline Instance instance_from_json(const Json& j) {
  const int n = detail::int_field(j, "n");
  const int t = detail::int_field(j, "t");
  const int l = detail::int_field(j, "l");
  const Json& b = detail::field(j, "b");
  if (!b.is_number()) throw InputError("field 'b' must be a number");
  if (n < 1 || t < 1 || l < 1) throw ArgumentError("instance: N, L and T must be positive");
  const Json& values = detail::field(j, "values");
  if (!values.is_array() || static_cast<int>(values.size()) != t)
    throw StructuralError("instance: 'values' must have t rounds");
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(n) * l * t);
  for (const auto& round : values) {
    auto block = detail::read_matrix(round, n, l, "instance");
    flat.insert(flat.end(), block.begin(), block.end());
  }
  return Instance(n, l, t, b.get<double>(), std::move(flat));
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline Instance load_instance(const std::string& path) {
  return instance_from_json(read_json_file(path));
}

inline void save_instance(const Instance& inst, const std::string& path) {
  write_text_file(path, to_json(inst).dump() + "\n");
}

// Line-delimited stream: a header object, then one round object per line.
inline std::string to_json_lines(const Instance& inst, bool reveal_horizon = true) {
  Json header{{"n", inst.num_agents()}, {"l", inst.num_goods()}, {"b", inst.budget()}};
  header["t_total"] = reveal_horizon ? Json(inst.num_rounds()) : Json(nullptr);
  std::string out = header.dump() + "\n";
  for (int t = 0; t < inst.num_rounds(); ++t) {
    Json rows = Json::array();
    for (int i = 0; i < inst.num_agents(); ++i) {
      Json row = Json::array();
      for (int l = 0; l < inst.num_goods(); ++l) row.push_back(inst.value(i, l, t));
      rows.push_back(std::move(row));
    }
    out += Json{{"t", t + 1}, {"values", std::move(rows)}}.dump() + "\n";
  }
  return out;
}

class JsonLinesStream final : public RoundStream {
 public:
  explicit JsonLinesStream(std::istream& in) : in_(in) {
    const Json h = next_object();
    if (h.is_null()) throw InputError("stream: missing header line");
    header_.num_agents = detail::int_field(h, "n");
    header_.num_goods = detail::int_field(h, "l");
    const Json& b = detail::field(h, "b");
    if (!b.is_number()) throw InputError("stream: 'b' must be a number");
    header_.budget = b.get<double>();
    if (h.contains("t_total") && !h.at("t_total").is_null())
      header_.horizon = detail::int_field(h, "t_total");
    if (header_.num_agents < 1 || header_.num_goods < 1)
      throw ArgumentError("stream: N and L must be positive");
  }

  const StreamHeader& header() const override { return header_; }

  std::optional<RoundBatch> next() override {
    const Json j = next_object();
    if (j.is_null()) return std::nullopt;
    RoundBatch batch;
    batch.round = detail::int_field(j, "t");
    batch.num_agents = header_.num_agents;
    batch.num_goods = header_.num_goods;
    batch.values = detail::read_matrix(detail::field(j, "values"), header_.num_agents,
                                       header_.num_goods, "stream round");
    return batch;
  }

 private:
  Json next_object() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        return Json::parse(line);
      } catch (const Json::parse_error& e) {
        throw InputError("stream line " + std::to_string(line_no_) + ": " + e.what());
      }
    }
    return nullptr;
  }

  std::istream& in_;
  StreamHeader header_;
  int line_no_ = 0;
};

inline Json to_json(const Allocation& a) {
  auto grid = [&](auto get) {
    Json rows = Json::array();
    for (int t = 0; t < a.num_rounds(); ++t) {
      Json row = Json::array();
      for (int l = 0; l < a.num_goods(); ++l) row.push_back(get(l, t));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  return Json{{"l", a.num_goods()},
              {"t", a.num_rounds()},
              {"set_aside", grid([&](int l, int t) { return a.set_aside(l, t); })},
              {"greedy", grid([&](int l, int t) { return a.greedy(l, t); })},
              {"total", grid([&](int l, int t) { return a.total(l, t); })}};
}

// Accepts either the split form or a bare "total" grid.
inline Allocation allocation_from_json(const Json& j) {
  const int l = detail::int_field(j, "l");
  const int t = detail::int_field(j, "t");
  if (l < 1 || t < 0) throw ArgumentError("allocation: bad dimensions");
  if (j.contains("set_aside") && j.contains("greedy")) {
    auto y = detail::read_matrix(j.at("set_aside"), t, l, "allocation");
    auto z = detail::read_matrix(j.at("greedy"), t, l, "allocation");
    Allocation a(l);
    for (int r = 0; r < t; ++r)
      a.append_round(std::span<const double>(y).subspan(static_cast<std::size_t>(r) * l, l),
                     std::span<const double>(z).subspan(static_cast<std::size_t>(r) * l, l));
    return a;
  }
  return Allocation::from_total(l, t, detail::read_matrix(detail::field(j, "total"), t, l,
                                                          "allocation"));
}

inline Json to_json(const PredictionSet& p) {
  return Json{{"v_tilde", p.v_tilde}, {"c", p.c}, {"d", p.d}};
}

inline PredictionSet predictions_from_json(const Json& j) {
  PredictionSet p;
  auto vec = [&](const char* key) {
    const Json& v = detail::field(j, key);
    if (!v.is_array()) throw InputError(std::string("'") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(decode_real(e));
    return out;
  };
  p.v_tilde = vec("v_tilde");
  p.c = j.contains("c") ? vec("c") : std::vector<double>(p.v_tilde.size(), 1.0);
  p.d = j.contains("d") ? vec("d") : std::vector<double>(p.v_tilde.size(), 1.0);
  if (p.c.size() != p.v_tilde.size() || p.d.size() != p.v_tilde.size())
    throw StructuralError("predictions: v_tilde, c and d differ in length");
  return p;
}

}  // namespace pgfair
