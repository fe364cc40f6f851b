#pragma once

// Synthetic scenarios: the two-source "small and near vs large and far"
// experiment, the method comparison harness and the path-length ablation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gft/dataset.hpp"
#include "gft/error.hpp"
#include "gft/path.hpp"
#include "gft/trainer.hpp"

namespace gft {

struct DomainGenerator {
  std::string id;
  GaussianDomainSpec spec;
};

/// Generator parameters for K sources plus a target, and the experiment seeds.
struct ScenarioSpec {
  std::vector<DomainGenerator> sources;
  DomainGenerator target;                 // drawn twice: unlabeled train + labeled test
  std::size_t target_test_per_class = 100;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
};

/// Draws every domain for one seed. Each domain gets its own generator stream.
inline DomainCollection generate(const ScenarioSpec& spec, std::uint64_t seed) {
  if (spec.sources.empty()) throw InputError("scenario needs at least one source");
  if (spec.target_test_per_class == 0) throw InputError("scenario target test split must be non-empty");
  std::vector<Dataset> sources;
  std::uint64_t stream = 0;
  auto next_seed = [&] { return seed * 1000003ULL + 7919ULL * ++stream; };
  for (const auto& g : spec.sources) sources.push_back(make_gaussian_domain(g.id, g.spec, next_seed()));
  Dataset target = make_gaussian_domain(spec.target.id, spec.target.spec, next_seed());
  GaussianDomainSpec test_spec = spec.target.spec;
  test_spec.n_pos = spec.target_test_per_class;
  test_spec.n_neg = spec.target_test_per_class;
  target.test = make_gaussian_domain(spec.target.id, test_spec, next_seed()).train;
  return make_collection(std::move(sources), std::move(target));
}

/// Geometry of the two-source scenario. Class centers are mean +- offset.
struct TwoSourceParams {
  std::size_t n_source1 = 20;
  std::size_t n_source2 = 1000;
  std::size_t n_target_train = 200;
  std::size_t n_target_test = 200;
  std::vector<double> target_mean = {0.0, 0.0};
  std::vector<double> source1_mean = {0.0, 0.3};
  std::vector<double> source2_mean = {3.0, 0.0};
  std::vector<double> class_offset = {1.0, 0.0};
  // Shared covariance: tight along the class axis, wide along the nuisance axis.
  Matrix covariance = {{0.3, 0.0}, {0.0, 25.0}};
};

inline ScenarioSpec two_source_spec(const TwoSourceParams& p = {}) {
  auto domain = [&p](std::string id, const std::vector<double>& mean, std::size_t n) {
    return DomainGenerator{std::move(id), {mean, p.covariance, (n + 1) / 2, n / 2, p.class_offset}};
  };
  if (p.n_source1 < 2 || p.n_source2 < 2 || p.n_target_train < 2 || p.n_target_test < 2)
    throw InputError("two-source scenario sizes must be >= 2");
  ScenarioSpec spec;
  spec.sources = {domain("S1", p.source1_mean, p.n_source1), domain("S2", p.source2_mean, p.n_source2)};
  spec.target = domain("T", p.target_mean, p.n_target_train);
  spec.target_test_per_class = p.n_target_test / 2;
  return spec;
}

/// Source 1 near the target but small; Source 2 large but displaced.
inline DomainCollection two_source_scenario(std::uint64_t seed, const TwoSourceParams& p = {}) {
  return generate(two_source_spec(p), seed);
}

struct MethodResult {
  std::string method;
  std::vector<double> accuracies;  // one per seed, in seed order
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (0 for a single seed)
  double median = 0.0;

  friend bool operator==(const MethodResult&, const MethodResult&) = default;
};

struct ComparisonReport {
  std::vector<std::uint64_t> seeds;
  std::vector<MethodResult> methods;

  [[nodiscard]] const MethodResult& method(const std::string& name) const {
    for (const auto& m : methods)
      if (m.method == name) return m;
    throw InputError("no method '" + name + "' in report");
  }

  friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

inline void summarize(MethodResult& r) {
  const double n = static_cast<double>(r.accuracies.size());
  if (r.accuracies.empty()) return;
  double sum = 0.0;
  for (double a : r.accuracies) sum += a;
  r.mean = sum / n;
  double ss = 0.0;
  for (double a : r.accuracies) ss += (a - r.mean) * (a - r.mean);
  r.stddev = r.accuracies.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  r.median = median_of(r.accuracies);
}

inline const std::vector<std::string>& comparison_methods() {
  static const std::vector<std::string> names = {"S1", "S2", "union", "gft"};
  return names;
}

namespace detail {

/// Target accuracies of fit-on-S1, fit-on-S2, fit-on-union and GFT [S2, S1].
inline std::vector<double> compare_once(const DomainCollection& c, const TrainConfig& config) {
  if (c.sources.size() != 2) throw InputError("comparison needs exactly two sources");
  const auto& s1 = c.sources[0];
  const auto& s2 = c.sources[1];
  const auto zero = LinearModel::zero(c.dim());
  Path gft_path;
  gft_path.domains = {s2.domain_id, s1.domain_id};
  gft_path.terminal = c.target.domain_id;
  gft_path.kappa = 2;
  return {target_accuracy(fit(zero, s1.train, config), c),
          target_accuracy(fit(zero, s2.train, config), c),
          target_accuracy(baseline_all_sources(c, config), c),
          target_accuracy(gft_train(gft_path, c, config), c)};
}

inline ComparisonReport assemble_report(const std::vector<std::uint64_t>& seeds,
                                        const std::vector<std::vector<double>>& per_seed) {
  ComparisonReport report;
  report.seeds = seeds;
  for (std::size_t m = 0; m < comparison_methods().size(); ++m) {
    MethodResult r;
    r.method = comparison_methods()[m];
    for (const auto& row : per_seed) r.accuracies.push_back(row[m]);
    summarize(r);
    report.methods.push_back(std::move(r));
  }
  return report;
}

}  // namespace detail

/// Fixed collection, training seed varied: accuracies of S1, S2, union and GFT [S2, S1].
inline ComparisonReport run_comparison(const DomainCollection& c, const TrainConfig& config,
                                       const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw InputError("run_comparison: no seeds");
  std::vector<std::vector<double>> per_seed(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    TrainConfig cfg = config;
    cfg.seed = seeds[i];
    per_seed[i] = detail::compare_once(c, cfg);
  });
  return detail::assemble_report(seeds, per_seed);
}

/// Regenerates the scenario per seed (data and training seed both vary).
/// When `normalize` is set each draw is mapped into the unit ball first.
inline ComparisonReport run_scenario_comparison(const ScenarioSpec& spec, const TrainConfig& config,
                                                bool normalize = true) {
  if (spec.seeds.empty()) throw InputError("scenario has no seeds");
  std::vector<std::vector<double>> per_seed(spec.seeds.size());
  parallel_for(spec.seeds.size(), [&](std::size_t i) {
    auto c = generate(spec, spec.seeds[i]);
    if (normalize) c = normalize_to_unit_ball(std::move(c));
    TrainConfig cfg = config;
    cfg.seed = spec.seeds[i];
    per_seed[i] = detail::compare_once(c, cfg);
  });
  return detail::assemble_report(spec.seeds, per_seed);
}

struct AblationRow {
  std::size_t kappa = 0;
  double accuracy = 0.0;
};

/// Trains on the last k domains of `full_path` for k = 1..kappa (the furthest
/// domains are dropped first) and records target test accuracy.
inline std::vector<AblationRow> path_length_ablation(const DomainCollection& c, const Path& full_path,
                                                     const TrainConfig& config) {
  if (full_path.domains.empty()) throw InputError("ablation: empty path");
  for (const auto& id : full_path.domains) static_cast<void>(c.find(id));
  const std::size_t kappa = full_path.domains.size();
  std::vector<AblationRow> rows(kappa);
  parallel_for(kappa, [&](std::size_t i) {
    const std::size_t k = i + 1;
    Path suffix;
    suffix.domains.assign(full_path.domains.end() - static_cast<std::ptrdiff_t>(k), full_path.domains.end());
    suffix.terminal = full_path.terminal;
    suffix.kappa = k;
    rows[i] = {k, target_accuracy(gft_train(suffix, c, config), c)};
  });
  return rows;
}

}  // namespace gft
