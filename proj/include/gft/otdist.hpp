#pragma once

// Wasserstein estimates between empirical joint (feature, label) clouds.
//
// The transport cost is the l_p distance itself (order-1 transport with an
// l_p ground metric), estimated with log-domain Sinkhorn iterations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gft/dataset.hpp"
#include "gft/error.hpp"
#include "gft/matrix.hpp"
#include "gft/parallel.hpp"

namespace gft {

struct SinkhornConfig {
  double epsilon = 0.05;
  std::size_t max_iterations = 1000;
  double tolerance = 1e-6;
  bool debiased = true;
  double ground_norm_p = 1.0;
  double label_scale = 1.0;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("sinkhorn: epsilon must be > 0");
    if (max_iterations < 1) throw InputError("sinkhorn: max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw InputError("sinkhorn: tolerance must be > 0");
    if (!(ground_norm_p >= 1.0)) throw InputError("sinkhorn: ground_norm_p must be >= 1");
    if (!(label_scale >= 0.0) || !std::isfinite(label_scale))
      throw InputError("sinkhorn: label_scale must be >= 0");
  }
};

/// Rows are points.
using PointCloud = Matrix;

/// (x_0, ..., x_{d-1}, label_scale * y) per sample, order preserved.
inline PointCloud joint_embed(std::span<const Sample> samples, double label_scale) {
  if (samples.empty()) throw InputError("joint_embed: no samples");
  const std::size_t d = samples.front().features.size();
  PointCloud out(samples.size(), d + 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.features.size() != d) throw InputError("joint_embed: ragged feature dimensions");
    if (!s.labeled()) throw InputError("joint_embed: sample without a label");
    auto row = out.row(i);
    std::copy(s.features.begin(), s.features.end(), row.begin());
    row[d] = label_scale * static_cast<double>(s.label);
  }
  return out;
}

/// Same as above but with labels supplied separately (pseudo-labels).
inline PointCloud joint_embed(std::span<const Sample> samples, std::span<const int> labels,
                              double label_scale) {
  if (labels.size() != samples.size()) throw InputError("joint_embed: label count mismatch");
  std::vector<Sample> relabeled(samples.begin(), samples.end());
  for (std::size_t i = 0; i < labels.size(); ++i) relabeled[i].label = labels[i];
  return joint_embed(relabeled, label_scale);
}

inline double lp_distance(std::span<const double> a, std::span<const double> b, double p) {
  if (p == 1.0) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
    return acc;
  }
  if (p == 2.0) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double diff = a[k] - b[k];
      acc += diff * diff;
    }
    return std::sqrt(acc);
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::pow(std::abs(a[k] - b[k]), p);
  return std::pow(acc, 1.0 / p);
}

/// C[i][j] = ||A_i - B_j||_p.
inline Matrix ground_cost_matrix(const PointCloud& a, const PointCloud& b, double p) {
  if (a.cols() != b.cols()) throw InputError("ground_cost_matrix: dimension mismatch");
  if (!(p >= 1.0)) throw InputError("ground_cost_matrix: p must be >= 1");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = lp_distance(a.row(i), b.row(j), p);
  return c;
}

inline std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

struct SinkhornResult {
  double value = 0.0;
  std::size_t iterations = 0;  // iterations at the target epsilon (max over sub-problems)
  bool converged = true;
};

namespace detail {

inline void check_weights(std::span<const double> w, std::size_t n, const char* name) {
  if (w.size() != n) throw InputError(std::string("sinkhorn: ") + name + " size mismatch");
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError(std::string("sinkhorn: ") + name + " has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError(std::string("sinkhorn: ") + name + " does not sum to 1");
}

inline std::vector<double> log_weights(std::span<const double> w) {
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    out[i] = w[i] > 0.0 ? std::log(w[i]) : -std::numeric_limits<double>::infinity();
  return out;
}

inline bool is_symmetric(const Matrix& c) {
  if (c.rows() != c.cols()) return false;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (c(i, j) != c(j, i)) return false;
  return true;
}

/// Total order on clouds (shape, then values) used to fix argument order.
inline bool cloud_less(const PointCloud& a, const PointCloud& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  if (a.cols() != b.cols()) return a.cols() < b.cols();
  return a.values() < b.values();
}

/// out_i = -eps * log sum_j exp(log_w_j + (pot_j - C(i,j)) / eps), for rows of C
/// (transposed = false) or columns (transposed = true).
inline void softmin(const Matrix& cost, bool transposed, std::span<const double> log_w,
                    std::span<const double> pot, double eps, std::span<double> out) {
  const std::size_t n_out = transposed ? cost.cols() : cost.rows();
  const std::size_t n_in = log_w.size();
  std::vector<double> terms(n_in);
  for (std::size_t i = 0; i < n_out; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_in; ++j) {
      const double c = transposed ? cost(j, i) : cost(i, j);
      terms[j] = log_w[j] + (pot[j] - c) / eps;
      mx = std::max(mx, terms[j]);
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < n_in; ++j) acc += std::exp(terms[j] - mx);
    out[i] = -eps * (mx + std::log(acc));
  }
}

/// Entropic transport cost <pi, C> for one pair of marginals.
///
/// Epsilon is annealed
/// geometrically from the cost diameter down to the requested value; the
/// convergence test and the iteration cap apply at the requested value.
inline SinkhornResult entropic_cost(const Matrix& cost, std::span<const double> wa,
                                    std::span<const double> wb, const SinkhornConfig& cfg) {
  const std::size_t m = cost.rows(), n = cost.cols();
  const auto log_a = log_weights(wa);
  const auto log_b = log_weights(wb);
  std::vector<double> f(m, 0.0), g(n, 0.0), ft(m), gt(n);

  double diameter = 0.0;
  for (double v : cost.values()) diameter = std::max(diameter, v);

  // Self problems (identical marginals and cost) keep f == g, where the
  // averaged update converges in a handful of steps. Cross problems use
  // alternating updates.
  const bool self_problem = m == n && std::equal(wa.begin(), wa.end(), wb.begin()) &&
                            is_symmetric(cost);
  auto step = [&](double eps) {
    double change = 0.0;
    if (self_problem) {
      softmin(cost, false, log_b, g, eps, ft);
      for (std::size_t i = 0; i < m; ++i) {
        const double nf = 0.5 * (f[i] + ft[i]);
        change = std::max(change, std::abs(nf - f[i]));
        f[i] = nf;
      }
      std::copy(f.begin(), f.end(), g.begin());
      return change;
    }
    softmin(cost, false, log_b, g, eps, ft);
    for (std::size_t i = 0; i < m; ++i) change = std::max(change, std::abs(ft[i] - f[i]));
    std::swap(f, ft);
    softmin(cost, true, log_a, f, eps, gt);
    for (std::size_t j = 0; j < n; ++j) change = std::max(change, std::abs(gt[j] - g[j]));
    std::swap(g, gt);
    return change;
  };

  for (double eps = diameter; eps > cfg.epsilon; eps *= 0.5) step(eps);

  SinkhornResult res;
  res.converged = false;
  for (res.iterations = 1; res.iterations <= cfg.max_iterations; ++res.iterations) {
    if (step(cfg.epsilon) < cfg.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.iterations = std::min(res.iterations, cfg.max_iterations);

  double value = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (wa[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (wb[j] == 0.0) continue;
      const double log_pi = log_a[i] + log_b[j] + (f[i] + g[j] - cost(i, j)) / cfg.epsilon;
      value += std::exp(log_pi) * cost(i, j);
    }
  }
  res.value = value;
  return res;
}

inline void check_cost(const Matrix& c) {
  for (double v : c.values())
    if (!std::isfinite(v)) throw NumericError("sinkhorn: non-finite ground cost");
}

}  // namespace detail

/// Entropic OT cost between two weighted clouds; with `debiased` set, returns
/// the Sinkhorn divergence OT(a,b) - OT(a,a)/2 - OT(b,b)/2 clamped at 0.
inline SinkhornResult sinkhorn_distance(const PointCloud& a, const PointCloud& b,
                                        std::span<const double> weights_a,
                                        std::span<const double> weights_b,
                                        const SinkhornConfig& cfg) {
  cfg.validate();
  if (a.rows() == 0 || b.rows() == 0) throw InputError("sinkhorn: empty point cloud");
  detail::check_weights(weights_a, a.rows(), "weights_a");
  detail::check_weights(weights_b, b.rows(), "weights_b");
  // Solve in a canonical argument order so the result is exactly symmetric.
  const bool swap = detail::cloud_less(b, a) ||
                    (!detail::cloud_less(a, b) &&
                     std::lexicographical_compare(weights_b.begin(), weights_b.end(),
                                                  weights_a.begin(), weights_a.end()));
  const Matrix cab = swap ? ground_cost_matrix(b, a, cfg.ground_norm_p)
                          : ground_cost_matrix(a, b, cfg.ground_norm_p);
  detail::check_cost(cab);
  SinkhornResult ab = swap ? detail::entropic_cost(cab, weights_b, weights_a, cfg)
                           : detail::entropic_cost(cab, weights_a, weights_b, cfg);
  if (!cfg.debiased) return ab;

  const Matrix caa = ground_cost_matrix(a, a, cfg.ground_norm_p);
  const Matrix cbb = ground_cost_matrix(b, b, cfg.ground_norm_p);
  detail::check_cost(caa);
  detail::check_cost(cbb);
  const auto aa = detail::entropic_cost(caa, weights_a, weights_a, cfg);
  const auto bb = detail::entropic_cost(cbb, weights_b, weights_b, cfg);
  SinkhornResult out;
  out.value = std::max(0.0, ab.value - 0.5 * aa.value - 0.5 * bb.value);
  out.iterations = std::max({ab.iterations, aa.iterations, bb.iterations});
  out.converged = ab.converged && aa.converged && bb.converged;
  return out;
}

inline SinkhornResult sinkhorn_distance(const PointCloud& a, const PointCloud& b,
                                        const SinkhornConfig& cfg) {
  const auto wa = uniform_weights(a.rows());
  const auto wb = uniform_weights(b.rows());
  return sinkhorn_distance(a, b, wa, wb, cfg);
}

inline constexpr std::size_t kExactOtMaxPoints = 8;

/// Exact transport cost for equal-size uniform clouds: (1/n) min over permutations.
/// Refuses n > 8.
inline double exact_ot_small(const PointCloud& a, const PointCloud& b, double p) {
  if (a.rows() != b.rows()) throw InputError("exact_ot_small: clouds must have equal sizes");
  const std::size_t n = a.rows();
  if (n == 0) throw InputError("exact_ot_small: empty clouds");
  if (n > kExactOtMaxPoints)
    throw InputError("exact_ot_small: refusing n=" + std::to_string(n) + " > 8 (factorial enumeration)");
  const Matrix c = ground_cost_matrix(a, b, p);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += c(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

/// (K+1)x(K+1) symmetric distances; ids[K] is the target.
struct DisparityMatrix {
  std::vector<std::string> ids;
  Matrix values;

  [[nodiscard]] std::size_t size() const noexcept { return ids.size(); }

  [[nodiscard]] std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return i;
    throw InputError("domain '" + id + "' not in disparity matrix");
  }

  [[nodiscard]] double at(const std::string& a, const std::string& b) const {
    return values(index_of(a), index_of(b));
  }

  [[nodiscard]] const std::string& target_id() const { return ids.back(); }

  friend bool operator==(const DisparityMatrix&, const DisparityMatrix&) = default;
};

/// Throws InputError unless the matrix is square, symmetric, zero-diagonal and nonnegative.
inline void validate(const DisparityMatrix& m) {
  const std::size_t n = m.ids.size();
  if (n < 2) throw InputError("disparity matrix needs at least one source and the target");
  if (m.values.rows() != n || m.values.cols() != n) throw InputError("disparity matrix shape mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (m.values(i, i) != 0.0) throw InputError("disparity matrix diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = m.values(i, j);
      if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("disparity matrix entries must be finite and >= 0");
      if (v != m.values(j, i)) throw InputError("disparity matrix must be symmetric");
    }
  }
}

struct SubsampleSpec {
  std::optional<std::size_t> cap = 500;
  std::uint64_t seed = 0;
};

/// Pair of ids whose Sinkhorn run hit the iteration cap.
struct UnconvergedPair {
  std::string a;
  std::string b;
};

/// Deterministic subset of at most `cap` rows (original order kept).
inline PointCloud subsample_cloud(const PointCloud& cloud, std::optional<std::size_t> cap,
                                  std::uint64_t seed) {
  if (!cap || cloud.rows() <= *cap) return cloud;
  if (*cap == 0) throw InputError("subsample cap must be >= 1");
  auto perm = seeded_permutation(cloud.rows(), seed);
  perm.resize(*cap);
  std::sort(perm.begin(), perm.end());
  PointCloud out(*cap, cloud.cols());
  for (std::size_t k = 0; k < *cap; ++k) {
    const auto src = cloud.row(perm[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

/// Distances between every pair of domains (train splits, uniform weights).
/// Sources use their labels, the target uses `target_pseudo_labels`.
inline DisparityMatrix pairwise_disparity(const DomainCollection& collection,
                                          std::span<const int> target_pseudo_labels,
                                          const SinkhornConfig& cfg,
                                          const SubsampleSpec& subsample = {},
                                          std::vector<UnconvergedPair>* unconverged = nullptr) {
  cfg.validate();
  if (target_pseudo_labels.size() != collection.target.train.size())
    throw InputError("pseudo-label count does not match target train size");
  const std::size_t k = collection.sources.size();
  const std::size_t n = k + 1;

  DisparityMatrix out;
  out.values = Matrix(n, n);
  std::vector<PointCloud> clouds;
  clouds.reserve(n);
  for (std::size_t i = 0; i < k; ++i) {
    out.ids.push_back(collection.sources[i].domain_id);
    clouds.push_back(joint_embed(collection.sources[i].train, cfg.label_scale));
  }
  out.ids.push_back(collection.target.domain_id);
  clouds.push_back(joint_embed(collection.target.train, target_pseudo_labels, cfg.label_scale));
  for (std::size_t i = 0; i < n; ++i)
    clouds[i] = subsample_cloud(clouds[i], subsample.cap,
                                subsample.seed + 0x9E3779B97F4A7C15ULL * (i + 1));

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<SinkhornResult> results(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t t) {
    results[t] = sinkhorn_distance(clouds[pairs[t].first], clouds[pairs[t].second], cfg);
  });

  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto [i, j] = pairs[t];
    out.values(i, j) = results[t].value;
    out.values(j, i) = results[t].value;
    if (unconverged && !results[t].converged) unconverged->push_back({out.ids[i], out.ids[j]});
  }
  return out;
}

}  // namespace gft
