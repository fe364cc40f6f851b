#pragma once

// End-to-end commands behind the gft_router CLI: distances, route, train,
// simulate and ablate. Every artifact embeds the fully resolved RunConfig.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gft/bound.hpp"
#include "gft/dataset.hpp"
#include "gft/dataset_io.hpp"
#include "gft/error.hpp"
#include "gft/graph.hpp"
#include "gft/otdist.hpp"
#include "gft/routing.hpp"
#include "gft/serialize.hpp"
#include "gft/simulate.hpp"
#include "gft/trainer.hpp"

namespace gft {

enum class Eps1Mode { trained, zero };

struct RunConfig {
  std::string data;
  DataFormat format = DataFormat::csv;
  std::optional<std::string> target;
  SinkhornConfig sinkhorn;
  std::optional<double> tau;
  std::string strategy = "sp";  // nn | sp | mst | tgft | all
  BoundParams bound;
  TrainConfig train;
  Eps1Mode eps1_mode = Eps1Mode::trained;
  std::optional<std::size_t> subsample_cap = 500;
  std::optional<std::size_t> kappa_cap;
  std::string out = "gft_out";
  std::uint64_t seed = 0;
  bool explain = false;
  std::vector<std::uint64_t> simulate_seeds = {0, 1, 2, 3, 4};

  [[nodiscard]] std::vector<Strategy> strategies() const {
    if (strategy == "all") return {Strategy::nn, Strategy::sp, Strategy::mst, Strategy::tgft};
    return {parse_strategy(strategy)};
  }

  /// Training config with the run seed applied.
  [[nodiscard]] TrainConfig train_config() const {
    TrainConfig t = train;
    t.seed = seed;
    return t;
  }

  void validate() const {
    sinkhorn.validate();
    bound.validate();
    train_config().validate();
    if (strategy != "all") static_cast<void>(parse_strategy(strategy));
    if (subsample_cap && *subsample_cap == 0) throw InputError("subsample cap must be >= 1");
    if (kappa_cap && *kappa_cap == 0) throw InputError("kappa cap must be >= 1");
    if (simulate_seeds.empty()) throw InputError("simulate seeds must be non-empty");
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  json train = to_json(c.train_config());
  return {{"data", c.data},
          {"format", to_string(c.format)},
          {"target", c.target ? json(*c.target) : json(nullptr)},
          {"sinkhorn", to_json(c.sinkhorn)},
          {"tau", c.tau ? json(*c.tau) : json(nullptr)},
          {"strategy", c.strategy},
          {"bound", to_json(c.bound)},
          {"train", train},
          {"eps1", c.eps1_mode == Eps1Mode::trained ? "trained" : "zero"},
          {"subsample", {{"cap", c.subsample_cap ? json(*c.subsample_cap) : json(nullptr)}, {"seed", c.seed}}},
          {"kappa_cap", c.kappa_cap ? json(*c.kappa_cap) : json(nullptr)},
          {"out", c.out},
          {"seed", c.seed},
          {"explain", c.explain},
          {"simulate", {{"seeds", c.simulate_seeds}}}};
}

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, std::optional<T>& dst) {
  if (!j.contains(key)) return;
  if (j[key].is_null()) {
    dst.reset();
    return;
  }
  dst = j[key].get<T>();
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j[key].get<T>();
}

inline void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw InputError("config: unknown key '" + where + k + "'");
}

}  // namespace detail

/// Applies the values present in a JSON config object on top of `cfg`.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  using detail::read;
  using detail::read_opt;
  try {
    if (!j.is_object()) throw InputError("config: top level must be an object");
    detail::reject_unknown(j, {"data", "format", "target", "sinkhorn", "tau", "strategy", "bound", "train", "eps1",
                               "subsample", "kappa_cap", "out", "seed", "explain", "simulate"},
                           "");
    read(j, "data", cfg.data);
    if (j.contains("format")) cfg.format = parse_data_format(j["format"].get<std::string>());
    read_opt(j, "target", cfg.target);
    if (j.contains("sinkhorn")) {
      const auto& s = j["sinkhorn"];
      detail::reject_unknown(s, {"epsilon", "max_iterations", "tolerance", "debiased", "ground_norm_p", "label_scale"},
                             "sinkhorn.");
      read(s, "epsilon", cfg.sinkhorn.epsilon);
      read(s, "max_iterations", cfg.sinkhorn.max_iterations);
      read(s, "tolerance", cfg.sinkhorn.tolerance);
      read(s, "debiased", cfg.sinkhorn.debiased);
      read(s, "ground_norm_p", cfg.sinkhorn.ground_norm_p);
      read(s, "label_scale", cfg.sinkhorn.label_scale);
    }
    read_opt(j, "tau", cfg.tau);
    read(j, "strategy", cfg.strategy);
    if (j.contains("bound")) {
      const auto& b = j["bound"];
      detail::reject_unknown(b, {"L", "R", "B", "delta", "rseq_exponent"}, "bound.");
      read(b, "L", cfg.bound.L);
      read(b, "R", cfg.bound.R);
      read(b, "B", cfg.bound.B);
      read(b, "delta", cfg.bound.delta);
      read(b, "rseq_exponent", cfg.bound.rseq_exponent);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      detail::reject_unknown(t, {"loss", "learning_rate", "epochs", "batch_size", "l2_penalty", "seed"}, "train.");
      if (t.contains("loss")) cfg.train.loss = parse_loss(t["loss"].get<std::string>());
      read(t, "learning_rate", cfg.train.learning_rate);
      read(t, "epochs", cfg.train.epochs);
      read(t, "batch_size", cfg.train.batch_size);
      read(t, "l2_penalty", cfg.train.l2_penalty);
      read(t, "seed", cfg.seed);
    }
    if (j.contains("eps1")) {
      const auto mode = j["eps1"].get<std::string>();
      if (mode != "trained" && mode != "zero") throw InputError("config: eps1 must be 'trained' or 'zero'");
      cfg.eps1_mode = mode == "trained" ? Eps1Mode::trained : Eps1Mode::zero;
    }
    if (j.contains("subsample")) {
      const auto& s = j["subsample"];
      detail::reject_unknown(s, {"cap", "seed"}, "subsample.");
      read_opt(s, "cap", cfg.subsample_cap);
      read(s, "seed", cfg.seed);
    }
    read_opt(j, "kappa_cap", cfg.kappa_cap);
    read(j, "out", cfg.out);
    read(j, "seed", cfg.seed);
    read(j, "explain", cfg.explain);
    if (j.contains("simulate")) {
      detail::reject_unknown(j["simulate"], {"seeds"}, "simulate.");
      read(j["simulate"], "seeds", cfg.simulate_seeds);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("config file '" + path + "': " + e.what());
  }
  apply_config_json(cfg, j);
}

/// 64-bit FNV-1a, hex encoded.
class ContentHash {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
  }
  [[nodiscard]] std::string hex() const {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << state_;
    return os.str();
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

/// Messages go to `log`, warnings to `warn`.
struct Console {
  std::ostream& log = std::cout;
  std::ostream& warn = std::cerr;
};

namespace detail {

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open data file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::filesystem::path ensure_out_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + cfg.out + "': " + ec.message());
  return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write '" + p.string() + "'");
  out << text;
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

/// CSV artifact with the resolved config as a leading comment line.
inline std::string csv_with_config(const RunConfig& cfg, const std::string& body) {
  return "# config: " + to_json(cfg).dump() + "\n" + body;
}

}  // namespace detail

/// Loaded, validated and unit-ball normalized input plus its content hash.
struct PreparedData {
  DomainCollection collection;
  std::string cache_key;
};

inline PreparedData prepare_data(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.data.empty()) throw InputError("no data file given (use --data or the config 'data' key)");
  if (!std::filesystem::exists(cfg.data)) throw InputError("data file '" + cfg.data + "' does not exist");
  const std::string bytes = detail::read_file_bytes(cfg.data);
  std::istringstream in(bytes);
  PreparedData out{normalize_to_unit_ball(read_collection(in, cfg.format, cfg.target)), {}};

  ContentHash h;
  h.update(bytes);
  h.update("\x1f");
  h.update(to_string(cfg.format));
  h.update("\x1f");
  h.update(out.collection.target.domain_id);
  h.update("\x1f");
  h.update(to_json(cfg.sinkhorn).dump());
  h.update("\x1f");
  h.update(to_json(cfg.train_config()).dump());
  h.update("\x1f");
  h.update(cfg.subsample_cap ? std::to_string(*cfg.subsample_cap) : "none");
  out.cache_key = h.hex();
  return out;
}

inline SizeMap source_sizes(const DomainCollection& c) {
  SizeMap m;
  for (const auto& s : c.sources) m[s.domain_id] = s.n();
  m[c.target.domain_id] = c.target.n();
  return m;
}

/// Pseudo-labels the target and computes all pairwise distances.
inline DisparityMatrix compute_disparity(const RunConfig& cfg, const DomainCollection& c, Console console) {
  const auto labels = pseudo_label_target(c, cfg.train_config());
  std::vector<UnconvergedPair> unconverged;
  auto m = pairwise_disparity(c, labels, cfg.sinkhorn, SubsampleSpec{cfg.subsample_cap, cfg.seed}, &unconverged);
  for (const auto& p : unconverged)
    console.warn << "warning: Sinkhorn for (" << p.a << ", " << p.b << ") stopped at the iteration cap ("
                 << cfg.sinkhorn.max_iterations << ")\n";
  return m;
}

inline nlohmann::json disparity_artifact(const RunConfig& cfg, const PreparedData& data, const DisparityMatrix& m) {
  nlohmann::json j = to_json(m);
  j["cache_key"] = data.cache_key;
  j["config"] = to_json(cfg);
  return j;
}

/// Reuses <out>/distances.json when its cache key matches; otherwise computes
/// and writes distances.json + distances.csv.
inline DisparityMatrix obtain_disparity(const RunConfig& cfg, const PreparedData& data, Console console,
                                        bool force_recompute = false) {
  const auto dir = detail::ensure_out_dir(cfg);
  const auto cached = dir / "distances.json";
  if (!force_recompute && std::filesystem::exists(cached)) {
    std::ifstream in(cached);
    nlohmann::json j;
    try {
      in >> j;
      if (j.value("cache_key", "") == data.cache_key) return disparity_from_json(j);
    } catch (const std::exception&) {
    }
  }
  auto m = compute_disparity(cfg, data.collection, console);
  detail::write_json(cached, disparity_artifact(cfg, data, m));
  std::ostringstream csv;
  write_disparity_csv(csv, m);
  detail::write_text(dir / "distances.csv", detail::csv_with_config(cfg, csv.str()));
  return m;
}

inline void cmd_distances(const RunConfig& cfg, Console console = {}) {
  const auto data = prepare_data(cfg);
  const auto m = obtain_disparity(cfg, data, console, true);
  console.log << "wrote " << (std::filesystem::path(cfg.out) / "distances.csv").string() << " ("
              << m.size() << "x" << m.size() << ")\n";
}

struct RouteResult {
  Strategy strategy;
  Path path;
  BoundBreakdown bound;
  std::vector<BoundBreakdown> candidates;  // filled with --explain
};

struct RoutingOutcome {
  DisparityMatrix matrix;
  DisparityGraph graph;
  std::map<std::string, double> eps1;
  std::vector<std::string> dropped;
  std::vector<RouteResult> routes;
};

inline std::map<std::string, double> eps1_map(const RunConfig& cfg, const DomainCollection& c) {
  if (cfg.eps1_mode == Eps1Mode::trained) return first_stage_losses(c, cfg.train_config());
  std::map<std::string, double> zeros;
  for (const auto& s : c.sources) zeros[s.domain_id] = 0.0;
  return zeros;
}

/// Runs the configured strategies. Throws RoutingError when nothing can be routed.
inline RoutingOutcome compute_routes(const RunConfig& cfg, const PreparedData& data, Console console) {
  RoutingOutcome out;
  out.matrix = obtain_disparity(cfg, data, console);
  const auto sizes = source_sizes(data.collection);
  out.graph = build_graph(out.matrix, sizes, cfg.tau);
  out.eps1 = eps1_map(cfg, data.collection);

  const auto reachable = reachable_sources(out.graph);
  for (const auto& s : data.collection.sources)
    if (!reachable.count(s.domain_id)) {
      out.dropped.push_back(s.domain_id);
      console.warn << "warning: source '" << s.domain_id << "' is not connected to the target under tau="
                   << (cfg.tau ? format_sig(*cfg.tau, 9) : "none") << "; dropped from candidates\n";
    }

  const auto strategies = cfg.strategies();
  const bool many = strategies.size() > 1;
  auto score = [&](const Path& p) {
    return gft_bound(p, out.matrix, sizes, cfg.bound, out.eps1.at(p.domains.front()));
  };
  for (const auto strategy : strategies) {
    RouteResult r{strategy, {}, {}, {}};
    try {
      switch (strategy) {
        case Strategy::nn:
          r.path = route_nearest_neighbor(out.graph);
          break;
        case Strategy::sp:
        case Strategy::mst: {
          const auto candidates =
              strategy == Strategy::sp ? route_shortest_paths(out.graph) : route_mst(out.graph);
          if (cfg.explain)
            for (const auto& p : candidates) r.candidates.push_back(score(p));
          r.path = select_optimal(candidates);
          break;
        }
        case Strategy::tgft:
          r.path = route_exhaustive_bound_min(out.graph, cfg.bound, out.eps1, cfg.kappa_cap,
                                              cfg.explain ? &r.candidates : nullptr);
          break;
      }
    } catch (const RoutingError& e) {
      if (!many) throw;
      console.warn << "warning: strategy " << to_string(strategy) << " produced no path: " << e.what() << "\n";
      continue;
    }
    r.bound = score(r.path);
    out.routes.push_back(std::move(r));
  }
  if (out.routes.empty()) throw RoutingError("no strategy produced a path");
  return out;
}

inline std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

inline nlohmann::json routes_artifact(const RunConfig& cfg, const PreparedData& data, const RoutingOutcome& r) {
  using nlohmann::json;
  json routes = json::array();
  for (const auto& route : r.routes) {
    json j = {{"strategy", to_string(route.strategy)},
              {"path", to_json(route.path)},
              {"bound", to_json(route.bound, cfg.bound)}};
    if (cfg.explain) {
      json cands = json::array();
      for (const auto& c : route.candidates) cands.push_back(to_json(c, cfg.bound));
      j["candidates"] = cands;
    }
    routes.push_back(j);
  }
  return {{"routes", routes},
          {"eps1", r.eps1},
          {"dropped_sources", r.dropped},
          {"cache_key", data.cache_key},
          {"config", to_json(cfg)}};
}

inline void write_route_outputs(const RunConfig& cfg, const PreparedData& data, const RoutingOutcome& r,
                                Console console) {
  const auto dir = detail::ensure_out_dir(cfg);
  detail::write_json(dir / "path.json", routes_artifact(cfg, data, r));
  nlohmann::json graph = to_json(r.graph);
  graph["config"] = to_json(cfg);
  detail::write_json(dir / "graph.json", graph);
  std::ostringstream dot;
  dot << "// config: " << to_json(cfg).dump() << "\n";
  write_dot(dot, r.graph);
  detail::write_text(dir / "graph.dot", dot.str());

  console.log << std::left << std::setw(6) << "route" << std::setw(14) << "weight" << std::setw(11) << "magnitude"
              << std::setw(14) << "bound"
              << "path\n";
  for (const auto& route : r.routes)
    console.log << std::setw(6) << to_string(route.strategy) << std::setw(14) << format_sig(route.path.weight, 6)
                << std::setw(11) << route.path.magnitude << std::setw(14) << format_sig(route.bound.total, 6)
                << join(route.path.domains, " -> ") << " -> " << route.path.terminal << "\n";
}

inline RoutingOutcome cmd_route(const RunConfig& cfg, Console console = {}) {
  const auto data = prepare_data(cfg);
  auto r = compute_routes(cfg, data, console);
  write_route_outputs(cfg, data, r, console);
  return r;
}

struct AccuracyRow {
  std::string method;
  double accuracy = 0.0;
  std::vector<std::string> stages;
};

/// GFT along every routed path plus the all-sources and closest-source baselines.
inline std::vector<AccuracyRow> cmd_train(const RunConfig& cfg, Console console = {}) {
  const auto data = prepare_data(cfg);
  const auto& c = data.collection;
  if (!c.target.test_labeled())
    throw EvaluationError("target '" + c.target.domain_id + "' has no labeled test split; cannot evaluate");
  const auto routes = compute_routes(cfg, data, console);
  write_route_outputs(cfg, data, routes, console);
  const auto dir = detail::ensure_out_dir(cfg);
  const auto tc = cfg.train_config();

  std::vector<AccuracyRow> rows;
  auto record = [&](const std::string& method, const LinearModel& m, const std::vector<std::string>& stages) {
    auto j = model_json(m, tc, stages);
    j["method"] = method;
    j["run_config"] = to_json(cfg);
    detail::write_json(dir / ("model_" + method + ".json"), j);
    rows.push_back({method, target_accuracy(m, c), stages});
  };
  for (const auto& route : routes.routes)
    record("gft_" + to_string(route.strategy), gft_train(route.path, c, tc), route.path.domains);

  std::vector<std::string> all_ids;
  for (const auto& s : c.sources) all_ids.push_back(s.domain_id);
  record("all_sources", baseline_all_sources(c, tc), all_ids);
  record("closest", baseline_closest(c, routes.matrix, tc), {closest_source(routes.matrix)});

  nlohmann::json table = nlohmann::json::array();
  std::ostringstream csv;
  csv << "method,accuracy\n";
  for (const auto& r : rows) {
    table.push_back({{"method", r.method}, {"accuracy", r.accuracy}, {"stages", r.stages}});
    csv << r.method << ',' << format_sig(r.accuracy, 9) << '\n';
  }
  detail::write_json(dir / "accuracy.json", {{"target", c.target.domain_id}, {"rows", table}, {"config", to_json(cfg)}});
  detail::write_text(dir / "accuracy.csv", detail::csv_with_config(cfg, csv.str()));
  for (const auto& r : rows) console.log << std::left << std::setw(14) << r.method << format_sig(r.accuracy, 6) << "\n";
  return rows;
}

/// Path-length ablation for every routed path; writes ablation_<strategy>.{json,csv}.
inline std::map<std::string, std::vector<AblationRow>> cmd_ablate(const RunConfig& cfg, Console console = {}) {
  const auto data = prepare_data(cfg);
  const auto& c = data.collection;
  if (!c.target.test_labeled())
    throw EvaluationError("target '" + c.target.domain_id + "' has no labeled test split; cannot evaluate");
  const auto routes = compute_routes(cfg, data, console);
  const auto dir = detail::ensure_out_dir(cfg);
  std::map<std::string, std::vector<AblationRow>> out;
  for (const auto& route : routes.routes) {
    const auto name = to_string(route.strategy);
    auto rows = path_length_ablation(c, route.path, cfg.train_config());
    detail::write_json(dir / ("ablation_" + name + ".json"),
                       {{"strategy", name}, {"path", to_json(route.path)}, {"rows", to_json(rows)}, {"config", to_json(cfg)}});
    std::ostringstream csv;
    write_ablation_csv(csv, rows);
    detail::write_text(dir / ("ablation_" + name + ".csv"), detail::csv_with_config(cfg, csv.str()));
    for (const auto& r : rows)
      console.log << name << " kappa=" << r.kappa << " accuracy=" << format_sig(r.accuracy, 6) << "\n";
    out[name] = std::move(rows);
  }
  return out;
}

/// Two-source comparison over cfg.simulate_seeds; also writes the scenario
/// drawn with cfg.seed as scenario.csv so it can be fed to the other commands.
inline ComparisonReport cmd_simulate(const RunConfig& cfg, Console console = {}) {
  cfg.validate();
  auto spec = two_source_spec();
  spec.seeds = cfg.simulate_seeds;
  const auto report = run_scenario_comparison(spec, cfg.train_config());
  const auto dir = detail::ensure_out_dir(cfg);

  auto j = to_json(report);
  j["config"] = to_json(cfg);
  detail::write_json(dir / "simulation.json", j);
  std::ostringstream csv;
  write_comparison_csv(csv, report);
  detail::write_text(dir / "simulation.csv", detail::csv_with_config(cfg, csv.str()));
  std::ostringstream scenario;
  write_collection(scenario, generate(spec, cfg.seed), DataFormat::csv);
  detail::write_text(dir / "scenario.csv", detail::csv_with_config(cfg, scenario.str()));

  for (const auto& m : report.methods)
    console.log << std::left << std::setw(7) << m.method << "mean " << format_sig(m.mean, 4) << " +- "
                << format_sig(m.stddev, 3) << "  median " << format_sig(m.median, 4) << "\n";
  return report;
}

}  // namespace gft
