#pragma once

// JSON interchange for instances, strategies, greedy traces and reports.
//
//   instance: {"n_tuples": N, "n_queries": M, "budget": K,
//              "cardinalities": [C_0, ...], "weights": [[query, tuple, w], ...]}
//   strategy: {"betas": [[tuple, beta], ...]}   (omitted tuples have beta 0)
//   trace:    one {"step", "tuple", "op", "gain", "objective"} object per line

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "json.hpp"

#include "daca/evaluate.hpp"
#include "daca/greedy.hpp"
#include "daca/instance.hpp"

namespace daca {

using nlohmann::json;

inline json instance_to_json(const AttackInstance& inst) {
  json weights = json::array();
  for (const auto& t : inst.weights().triples()) weights.push_back({t.query, t.tuple, t.weight});
  return json{{"n_tuples", inst.n_tuples()},
              {"n_queries", inst.n_queries()},
              {"budget", inst.budget()},
              {"cardinalities", std::vector<Count>(inst.cardinalities().begin(), inst.cardinalities().end())},
              {"weights", std::move(weights)}};
}

inline AttackInstance instance_from_json(const json& j) {
  try {
    const auto n = j.at("n_tuples").get<std::size_t>();
    const auto m = j.at("n_queries").get<std::size_t>();
    const auto k = j.at("budget").get<Count>();
    auto card = j.at("cardinalities").get<std::vector<Count>>();
    std::vector<WeightTriple> triples;
    for (const auto& e : j.at("weights")) {
      if (!e.is_array() || e.size() != 3) throw InputError("weight entries must be [query, tuple, w]");
      triples.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<Count>()});
    }
    return AttackInstance(JointWeightMatrix::from_triples(n, m, std::move(triples)), std::move(card), k);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed instance JSON: ") + e.what());
  }
}

inline json strategy_to_json(const AttackStrategy& s) {
  json betas = json::array();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.beta(i) != 0) betas.push_back({i, s.beta(i)});
  }
  return json{{"betas", std::move(betas)}};
}

inline AttackStrategy strategy_from_json(const json& j, std::size_t n_tuples) {
  AttackStrategy s(n_tuples);
  try {
    for (const auto& e : j.at("betas")) {
      if (!e.is_array() || e.size() != 2) throw InputError("beta entries must be [tuple, beta]");
      const auto t = e[0].get<std::size_t>();
      if (t >= n_tuples) throw InputError("strategy references tuple " + std::to_string(t) + " outside the instance");
      s.set_beta(t, e[1].get<std::int64_t>());
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed strategy JSON: ") + e.what());
  }
  return s;
}

inline std::string trace_to_jsonl(const GreedyTrace& trace) {
  std::string out;
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const auto& s = trace.steps[k];
    out += json{{"step", k + 1}, {"tuple", s.tuple.index}, {"op", to_string(s.op)}, {"gain", s.gain},
                {"objective", s.objective}}
               .dump();
    out += '\n';
  }
  return out;
}

inline json report_to_json(const QerrorReport& r) {
  return json{{"per_query", r.per_query},
              {"mean", r.mean},
              {"percentiles", {{"50", r.p50}, {"90", r.p90}, {"95", r.p95}, {"99", r.p99}, {"max", r.max}}}};
}

/// Aligned text table with one row per labelled report.
inline std::string report_table(const std::vector<std::pair<std::string, QerrorReport>>& rows) {
  std::size_t label_width = 8;
  for (const auto& [label, _] : rows) label_width = std::max(label_width, label.size());
  std::ostringstream out;
  auto cell = [&](double v) { out << std::setw(14) << std::setprecision(6) << v; };
  out << std::left << std::setw(static_cast<int>(label_width)) << "setting" << std::right;
  for (const char* h : {"mean", "p50", "p90", "p95", "p99", "max"}) out << std::setw(14) << h;
  out << '\n';
  for (const auto& [label, r] : rows) {
    out << std::left << std::setw(static_cast<int>(label_width)) << label << std::right;
    cell(r.mean);
    cell(r.p50);
    cell(r.p90);
    cell(r.p95);
    cell(r.p99);
    cell(r.max);
    out << '\n';
  }
  return out.str();
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

inline AttackInstance load_instance(const std::string& path) { return instance_from_json(read_json_file(path)); }

inline void save_instance(const std::string& path, const AttackInstance& inst) {
  write_text_file(path, instance_to_json(inst).dump() + "\n");
}

}  // namespace daca
