#pragma once

// Per-domain labeled datasets, the unit-ball normalization every distance
// relies on, a seeded Gaussian generator and a seeded train/test splitter.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gft/error.hpp"
#include "gft/matrix.hpp"

namespace gft {

/// Label value used for samples whose label is absent (target train rows).
inline constexpr int kNoLabel = 0;

struct Sample {
  std::vector<double> features;
  int label = kNoLabel;  // -1, +1, or kNoLabel

  [[nodiscard]] bool labeled() const noexcept { return label == -1 || label == 1; }
  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::string domain_id;
  std::vector<Sample> train;
  std::vector<Sample> test;

  [[nodiscard]] std::size_t n() const noexcept { return train.size(); }

  [[nodiscard]] std::size_t dim() const noexcept {
    if (!train.empty()) return train.front().features.size();
    if (!test.empty()) return test.front().features.size();
    return 0;
  }

  [[nodiscard]] bool train_labeled() const noexcept {
    return !train.empty() &&
           std::all_of(train.begin(), train.end(), [](const Sample& s) { return s.labeled(); });
  }

  [[nodiscard]] bool test_labeled() const noexcept {
    return !test.empty() &&
           std::all_of(test.begin(), test.end(), [](const Sample& s) { return s.labeled(); });
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// K labeled sources plus one target whose train labels are always absent.
struct DomainCollection {
  std::vector<Dataset> sources;
  Dataset target;

  [[nodiscard]] std::size_t num_sources() const noexcept { return sources.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return target.dim(); }

  [[nodiscard]] const Dataset& find(const std::string& id) const {
    if (target.domain_id == id) return target;
    for (const auto& s : sources)
      if (s.domain_id == id) return s;
    throw InputError("unknown domain '" + id + "'");
  }

  friend bool operator==(const DomainCollection&, const DomainCollection&) = default;
};

/// Throws InputError if any DomainCollection invariant is violated.
inline void validate(const DomainCollection& c) {
  if (c.sources.empty()) throw InputError("collection has no source domains");
  std::set<std::string> ids;
  std::size_t d = 0;
  bool have_dim = false;
  auto check_dataset = [&](const Dataset& ds, bool is_target) {
    if (ds.domain_id.empty()) throw InputError("empty domain id");
    if (!ids.insert(ds.domain_id).second)
      throw InputError("duplicate domain id '" + ds.domain_id + "'");
    if (ds.train.empty())
      throw InputError("domain '" + ds.domain_id + "' has no train samples");
    auto check_sample = [&](const Sample& s, bool label_required) {
      if (!have_dim) {
        d = s.features.size();
        have_dim = true;
        if (d == 0) throw InputError("domain '" + ds.domain_id + "' has zero-dimensional features");
      }
      if (s.features.size() != d)
        throw InputError("dimension mismatch in domain '" + ds.domain_id + "': expected " +
                         std::to_string(d) + ", got " + std::to_string(s.features.size()));
      for (double v : s.features)
        if (!std::isfinite(v)) throw InputError("non-finite feature in domain '" + ds.domain_id + "'");
      if (label_required && !s.labeled())
        throw InputError("domain '" + ds.domain_id + "' has a sample with label outside {-1,+1}");
      if (!label_required && s.label != kNoLabel)
        throw InputError("target '" + ds.domain_id + "' train labels must be absent");
    };
    for (const auto& s : ds.train) check_sample(s, !is_target);
    for (const auto& s : ds.test) check_sample(s, true);
  };
  for (const auto& s : c.sources) check_dataset(s, false);
  check_dataset(c.target, true);
}

/// Drops target train labels, then validates.
inline DomainCollection make_collection(std::vector<Dataset> sources, Dataset target) {
  for (auto& s : target.train) s.label = kNoLabel;
  DomainCollection c{std::move(sources), std::move(target)};
  validate(c);
  return c;
}

inline double l2_norm(std::span<const double> v) noexcept {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

/// Largest feature norm across every split of every domain.
inline double max_feature_norm(const DomainCollection& c) noexcept {
  double m = 0.0;
  auto scan = [&m](const Dataset& ds) {
    for (const auto* split : {&ds.train, &ds.test})
      for (const auto& s : *split) m = std::max(m, l2_norm(s.features));
  };
  for (const auto& s : c.sources) scan(s);
  scan(c.target);
  return m;
}

/// Scales every feature vector by one global factor 1/max(1, max norm).
inline DomainCollection normalize_to_unit_ball(DomainCollection c) {
  const double divisor = std::max(1.0, max_feature_norm(c));
  if (divisor == 1.0) return c;
  auto scale = [divisor](Dataset& ds) {
    for (auto* split : {&ds.train, &ds.test})
      for (auto& s : *split)
        for (double& v : s.features) v /= divisor;
  };
  for (auto& s : c.sources) scale(s);
  scale(c.target);
  return c;
}

/// Lower Cholesky factor; throws InputError unless `cov` is symmetric positive definite.
inline Matrix cholesky(const Matrix& cov) {
  const std::size_t d = cov.rows();
  if (d == 0 || cov.cols() != d) throw InputError("covariance must be square and non-empty");
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double scale = std::max({1.0, std::abs(cov(i, j)), std::abs(cov(j, i))});
      if (std::abs(cov(i, j) - cov(j, i)) > 1e-12 * scale)
        throw InputError("covariance is not symmetric");
    }
  Matrix l(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    double diag = cov(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) throw InputError("covariance is not positive definite");
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < d; ++i) {
      double v = cov(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / l(j, j);
    }
  }
  return l;
}

struct GaussianDomainSpec {
  std::vector<double> mean;
  Matrix covariance;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::vector<double> class_offset;
};

/// Positive class ~ N(mean + offset, cov), negative ~ N(mean - offset, cov).
/// All samples land in `train`, positives first.
inline Dataset make_gaussian_domain(std::string id, const GaussianDomainSpec& spec,
                                    std::uint64_t seed) {
  const std::size_t d = spec.mean.size();
  if (spec.class_offset.size() != d || spec.covariance.rows() != d)
    throw InputError("gaussian domain: mean, offset and covariance dimensions differ");
  if (spec.n_pos == 0 || spec.n_neg == 0) throw InputError("gaussian domain: class counts must be >= 1");
  const Matrix chol = cholesky(spec.covariance);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(d);

  Dataset ds;
  ds.domain_id = std::move(id);
  ds.train.reserve(spec.n_pos + spec.n_neg);
  auto draw = [&](int label, std::size_t count) {
    const double sign = label > 0 ? 1.0 : -1.0;
    for (std::size_t k = 0; k < count; ++k) {
      for (auto& v : z) v = normal(rng);
      Sample s{std::vector<double>(d), label};
      for (std::size_t i = 0; i < d; ++i) {
        double v = spec.mean[i] + sign * spec.class_offset[i];
        for (std::size_t j = 0; j <= i; ++j) v += chol(i, j) * z[j];
        s.features[i] = v;
      }
      ds.train.push_back(std::move(s));
    }
  };
  draw(+1, spec.n_pos);
  draw(-1, spec.n_neg);
  return ds;
}

/// Seeded Fisher-Yates permutation of [0, n).
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

/// Pools train and test, shuffles, and re-splits. Each side keeps at least one sample.
inline Dataset split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InputError("test fraction must lie in (0,1)");
  std::vector<Sample> pool = ds.train;
  pool.insert(pool.end(), ds.test.begin(), ds.test.end());
  const std::size_t total = pool.size();
  if (total < 2) throw InputError("split needs at least 2 samples");

  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(total)));
  n_test = std::clamp<std::size_t>(n_test, 1, total - 1);

  const auto perm = seeded_permutation(total, seed);
  Dataset out;
  out.domain_id = ds.domain_id;
  out.train.reserve(total - n_test);
  out.test.reserve(n_test);
  for (std::size_t k = 0; k < total; ++k) {
    auto& dst = k < total - n_test ? out.train : out.test;
    dst.push_back(pool[perm[k]]);
  }
  return out;
}

}  // namespace gft
