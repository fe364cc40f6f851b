#pragma once

// JSON / CSV / DOT encodings of the library's result types.

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gft/bound.hpp"
#include "gft/error.hpp"
#include "gft/graph.hpp"
#include "gft/otdist.hpp"
#include "gft/path.hpp"
#include "gft/routing.hpp"
#include "gft/simulate.hpp"
#include "gft/trainer.hpp"

namespace gft {

using nlohmann::json;

inline std::string format_sig(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ---- configs ---------------------------------------------------------------

inline json to_json(const SinkhornConfig& c) {
  return {{"epsilon", c.epsilon},           {"max_iterations", c.max_iterations},
          {"tolerance", c.tolerance},       {"debiased", c.debiased},
          {"ground_norm_p", c.ground_norm_p}, {"label_scale", c.label_scale}};
}

inline json to_json(const BoundParams& p) {
  return {{"L", p.L}, {"R", p.R}, {"B", p.B}, {"delta", p.delta}, {"rseq_exponent", p.rseq_exponent}};
}

inline json to_json(const TrainConfig& c) {
  return {{"loss", to_string(c.loss)}, {"learning_rate", c.learning_rate}, {"epochs", c.epochs},
          {"batch_size", c.batch_size}, {"l2_penalty", c.l2_penalty},      {"seed", c.seed}};
}

// ---- disparity matrix ------------------------------------------------------

inline json to_json(const DisparityMatrix& m) {
  return {{"ids", m.ids}, {"values", m.values.values()}};
}

inline DisparityMatrix disparity_from_json(const json& j) {
  try {
    DisparityMatrix m;
    m.ids = j.at("ids").get<std::vector<std::string>>();
    const auto values = j.at("values").get<std::vector<double>>();
    const std::size_t n = m.ids.size();
    if (values.size() != n * n) throw InputError("disparity JSON: expected " + std::to_string(n * n) + " values");
    m.values = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) m.values(i, k) = values[i * n + k];
    validate(m);
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("disparity JSON: ") + e.what());
  }
}

/// Header row/column of ids, 9 significant digits.
inline void write_disparity_csv(std::ostream& out, const DisparityMatrix& m) {
  out << "domain";
  for (const auto& id : m.ids) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.ids[i];
    for (std::size_t k = 0; k < m.size(); ++k) out << ',' << format_sig(m.values(i, k), 9);
    out << '\n';
  }
}

// ---- graph -----------------------------------------------------------------

inline json to_json(const DisparityGraph& g) {
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({{"u", g.id(e.u)}, {"v", g.id(e.v)}, {"weight", e.weight}});
  json sizes = json::object();
  for (std::size_t i = 0; i < g.num_vertices(); ++i) sizes[g.id(i)] = g.size_of(i);
  return {{"ids", g.ids()},
          {"target", g.id(g.target())},
          {"sizes", sizes},
          {"edges", edges},
          {"tau", g.tau() ? json(*g.tau()) : json(nullptr)}};
}

inline void write_dot(std::ostream& out, const DisparityGraph& g) {
  out << "graph disparity {\n";
  for (std::size_t i = 0; i < g.num_vertices(); ++i) {
    out << "  \"" << g.id(i) << "\" [label=\"" << g.id(i) << "\\nn=" << g.size_of(i) << '"';
    if (i == g.target()) out << ", shape=doublecircle";
    out << "];\n";
  }
  for (const auto& e : g.edges())
    out << "  \"" << g.id(e.u) << "\" -- \"" << g.id(e.v) << "\" [label=\"" << format_sig(e.weight, 4)
        << "\", weight=" << format_sig(e.weight, 9) << "];\n";
  out << "}\n";
}

// ---- paths and bounds ------------------------------------------------------

inline json to_json(const Path& p) {
  return {{"domains", p.domains},
          {"terminal", p.terminal},
          {"weight", p.weight},
          {"magnitude", p.magnitude},
          {"kappa", p.kappa}};
}

inline Path path_from_json(const json& j) {
  try {
    Path p;
    p.domains = j.at("domains").get<std::vector<std::string>>();
    p.terminal = j.at("terminal").get<std::string>();
    p.weight = j.at("weight").get<double>();
    p.magnitude = j.at("magnitude").get<std::size_t>();
    p.kappa = j.at("kappa").get<std::size_t>();
    return p;
  } catch (const json::exception& e) {
    throw InputError(std::string("path JSON: ") + e.what());
  }
}

inline json to_json(const BoundBreakdown& b, const BoundParams& params) {
  return {{"term1", b.term1}, {"term2", b.term2}, {"term3", b.term3}, {"term4", b.term4},
          {"term5", b.term5}, {"term6", b.term6}, {"total", b.total}, {"eps1_used", b.eps1_used},
          {"path", to_json(b.path)}, {"params", to_json(params)}};
}

// ---- models and reports ----------------------------------------------------

inline json to_json(const LinearModel& m) { return {{"weights", m.weights}, {"bias", m.bias}}; }

inline json model_json(const LinearModel& m, const TrainConfig& config, const std::vector<std::string>& stages) {
  json j = to_json(m);
  j["config"] = to_json(config);
  j["stages"] = stages;
  return j;
}

inline LinearModel model_from_json(const json& j) {
  try {
    return {j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()};
  } catch (const json::exception& e) {
    throw InputError(std::string("model JSON: ") + e.what());
  }
}

inline json to_json(const ComparisonReport& r) {
  json methods = json::array();
  for (const auto& m : r.methods)
    methods.push_back({{"method", m.method},
                       {"accuracies", m.accuracies},
                       {"mean", m.mean},
                       {"std", m.stddev},
                       {"median", m.median}});
  return {{"seeds", r.seeds}, {"methods", methods}};
}

/// Long format: method,seed,accuracy
inline void write_comparison_csv(std::ostream& out, const ComparisonReport& r) {
  out << "method,seed,accuracy\n";
  for (const auto& m : r.methods)
    for (std::size_t i = 0; i < r.seeds.size(); ++i)
      out << m.method << ',' << r.seeds[i] << ',' << format_sig(m.accuracies[i], 9) << '\n';
}

inline json to_json(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back({{"kappa", r.kappa}, {"accuracy", r.accuracy}});
  return out;
}

/// Long format: kappa,accuracy
inline void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "kappa,accuracy\n";
  for (const auto& r : rows) out << r.kappa << ',' << format_sig(r.accuracy, 9) << '\n';
}

}  // namespace gft
