#pragma once

// Generalization bounds for gradual fine-tuning and the two single-shot
// baselines (all sources pooled, closest source only).

#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <string>

#include "gft/error.hpp"
#include "gft/graph.hpp"
#include "gft/otdist.hpp"
#include "gft/path.hpp"

namespace gft {

struct BoundParams {
  double L = 1.0;      // loss Lipschitz constant
  double R = 1.0;      // classifier Lipschitz constant
  double B = 1.0;      // Rademacher scale: R_n(H) <= B / sqrt(n)
  double delta = 0.1;  // confidence
  // Sequential Rademacher complexity is modeled as B / (sum n_t)^rseq_exponent.
  double rseq_exponent = 1.0;

  void validate() const {
    if (!std::isfinite(L) || L < 0.0) throw InputError("bound: L must be finite and >= 0");
    if (!std::isfinite(R) || R < 0.0) throw InputError("bound: R must be finite and >= 0");
    if (!std::isfinite(B) || !(B > 0.0)) throw InputError("bound: B must be finite and > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw InputError("bound: delta must lie in (0,1)");
    if (rseq_exponent != 1.0 && rseq_exponent != 0.5)
      throw InputError("bound: rseq_exponent must be 1 or 0.5");
  }

  /// L * sqrt(R^2 + 1), the factor converting a distance into a loss gap.
  [[nodiscard]] double transfer_factor() const noexcept { return L * std::sqrt(R * R + 1.0); }
  [[nodiscard]] double log_inv_delta() const noexcept { return std::log(1.0 / delta); }
};

struct BoundBreakdown {
  double term1 = 0.0;  // distance from the last path domain to the target
  double term2 = 0.0;  // empirical loss of the first-stage model
  double term3 = 0.0;  // accumulated consecutive distances
  double term4 = 0.0;  // per-stage sample terms
  double term5 = 0.0;  // sequential Rademacher term
  double term6 = 0.0;  // discrepancy-weight term
  double total = 0.0;
  Path path;
  double eps1_used = 0.0;
};

/// |e_D1(h) - e_D2(h)| <= L sqrt(R^2+1) W(D1, D2).
inline double transfer_gap(double w1, const BoundParams& params) {
  if (!(w1 >= 0.0)) throw InputError("transfer_gap: distance must be >= 0");
  return params.transfer_factor() * w1;
}

/// Error increase between consecutive fine-tuning stages.
inline double consecutive_step_bound(std::size_t n_next, double w, const BoundParams& params) {
  if (n_next < 1) throw InputError("consecutive_step_bound: n_next must be >= 1");
  const double n = static_cast<double>(n_next);
  return 4.0 * params.B * std::sqrt(2.0) * params.L / std::sqrt(n) +
         4.0 * params.B * std::sqrt(params.log_inv_delta() / (2.0 * n)) +
         params.transfer_factor() * w;
}

namespace detail {

inline std::size_t size_for(const SizeMap& sizes, const std::string& id) {
  const auto it = sizes.find(id);
  if (it == sizes.end()) throw InputError("no size given for domain '" + id + "'");
  if (it->second == 0) throw InputError("domain '" + id + "' has size 0");
  return it->second;
}

}  // namespace detail

/// Six-term bound on the target error of the model trained along `path`.
/// Distances are read from `matrix`; `eps1` is the first stage's empirical loss.
inline BoundBreakdown gft_bound(const Path& path, const DisparityMatrix& matrix, const SizeMap& sizes,
                                const BoundParams& params, double eps1) {
  params.validate();
  if (!(eps1 >= 0.0) || !std::isfinite(eps1)) throw InputError("gft_bound: eps1 must be finite and >= 0");
  if (path.domains.empty()) throw InputError("gft_bound: empty path");
  if (path.terminal != matrix.target_id())
    throw InputError("gft_bound: path terminal '" + path.terminal + "' is not the matrix target");

  const std::size_t kappa = path.domains.size();
  const double k = static_cast<double>(kappa);
  const double tf = params.transfer_factor();
  const double log_inv_delta = params.log_inv_delta();
  const double B = params.B;

  double sum_delta = 0.0;
  for (std::size_t t = 0; t + 1 < kappa; ++t) sum_delta += matrix.at(path.domains[t], path.domains[t + 1]);

  double sum_n = 0.0, sum_inv_sqrt_n = 0.0, sum_inv_n = 0.0;
  for (const auto& id : path.domains) {
    const double n = static_cast<double>(detail::size_for(sizes, id));
    sum_n += n;
    sum_inv_sqrt_n += 1.0 / std::sqrt(n);
    sum_inv_n += 1.0 / n;
  }
  if (sum_n < 2.0) throw InputError("gft_bound: total path size must be >= 2 (log term undefined)");

  BoundBreakdown out;
  out.path = path;
  out.eps1_used = eps1;
  out.term1 = tf * matrix.at(matrix.target_id(), path.domains.back());
  out.term2 = eps1;
  out.term3 = (1.0 + 1.0 / k) * tf * sum_delta;
  out.term4 = (4.0 * std::sqrt(2.0) * params.L * B + 2.0 * std::sqrt(2.0) * B * std::sqrt(log_inv_delta)) *
              ((k - 1.0) / k) * sum_inv_sqrt_n;
  const double rseq = B / std::pow(sum_n, params.rseq_exponent);
  out.term5 = 6.0 * B * std::sqrt(4.0 * std::numbers::pi * std::log(sum_n)) * rseq;
  out.term6 = ((B * std::sqrt(8.0 * log_inv_delta) + 1.0) / k) * std::sqrt(sum_inv_n);
  out.total = out.term1 + out.term2 + out.term3 + out.term4 + out.term5 + out.term6;
  return out;
}

/// Bound for one model trained on all sources pooled.
inline double all_sources_bound(const DisparityMatrix& matrix, const SizeMap& sizes,
                                const BoundParams& params, const std::map<std::string, double>& eps_hat) {
  params.validate();
  const std::size_t k = matrix.size() - 1;
  double n_total = 0.0;
  for (std::size_t t = 0; t < k; ++t) n_total += static_cast<double>(detail::size_for(sizes, matrix.ids[t]));

  const double tf = params.transfer_factor();
  const double log_inv_delta = params.log_inv_delta();
  double distance = 0.0, empirical = 0.0, complexity = 0.0, confidence = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    const auto& id = matrix.ids[t];
    const double n = static_cast<double>(detail::size_for(sizes, id));
    const auto eps = eps_hat.find(id);
    if (eps == eps_hat.end()) throw InputError("no empirical loss given for source '" + id + "'");
    distance += (n / n_total) * matrix.values(t, k);
    empirical += (n / n_total) * eps->second;
    complexity += std::sqrt(n) * params.B / n_total;
    confidence += log_inv_delta * std::sqrt(n) / n_total;
  }
  return tf * distance + empirical + complexity + confidence;
}

/// Bound for a model trained on the closest source only.
inline double closest_source_bound(double w_ct, std::size_t n_c, double eps_hat_c, const BoundParams& params) {
  params.validate();
  if (n_c < 1) throw InputError("closest_source_bound: n_c must be >= 1");
  const double root_n = std::sqrt(static_cast<double>(n_c));
  return params.transfer_factor() * w_ct + eps_hat_c + params.B / root_n + params.log_inv_delta() / root_n;
}

}  // namespace gft
