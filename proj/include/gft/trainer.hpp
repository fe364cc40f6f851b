#pragma once

// From-scratch linear classifier trained by mini-batch (sub)gradient descent,
// sequential fine-tuning along a path, pseudo-labeling and baselines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gft/dataset.hpp"
#include "gft/error.hpp"
#include "gft/otdist.hpp"
#include "gft/parallel.hpp"
#include "gft/path.hpp"

namespace gft {

enum class Loss { hinge, logistic };

inline std::string to_string(Loss l) { return l == Loss::hinge ? "hinge" : "logistic"; }

inline Loss parse_loss(const std::string& s) {
  if (s == "hinge") return Loss::hinge;
  if (s == "logistic") return Loss::logistic;
  throw InputError("unknown loss '" + s + "' (expected hinge or logistic)");
}

struct TrainConfig {
  Loss loss = Loss::hinge;
  double learning_rate = 1.0;
  std::size_t epochs = 20;
  std::size_t batch_size = 10;
  double l2_penalty = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!std::isfinite(learning_rate) || learning_rate < 0.0)
      throw InputError("train: learning_rate must be finite and >= 0");
    if (epochs < 1) throw InputError("train: epochs must be >= 1");
    if (batch_size < 1) throw InputError("train: batch_size must be >= 1");
    if (!std::isfinite(l2_penalty) || l2_penalty < 0.0) throw InputError("train: l2_penalty must be >= 0");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;

  static LinearModel zero(std::size_t dim) { return {std::vector<double>(dim, 0.0), 0.0}; }

  [[nodiscard]] double score(std::span<const double> x) const {
    double s = bias;
    for (std::size_t k = 0; k < weights.size(); ++k) s += weights[k] * x[k];
    return s;
  }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// Loss of a single margin m = y * score.
inline double loss_value(Loss loss, double margin) {
  if (loss == Loss::hinge) return margin < 1.0 ? 1.0 - margin : 0.0;
  return margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

/// d loss / d margin. The hinge subgradient at margin == 1 is taken as 0.
inline double loss_slope(Loss loss, double margin) {
  if (loss == Loss::hinge) return margin < 1.0 ? -1.0 : 0.0;
  return -1.0 / (1.0 + std::exp(margin));
}

/// Gradient of the single-sample loss with respect to (weights, bias).
struct LossGradient {
  double loss = 0.0;
  std::vector<double> d_weights;
  double d_bias = 0.0;
};

inline LossGradient loss_and_gradient(const LinearModel& model, const Sample& s, Loss loss) {
  const double y = static_cast<double>(s.label);
  const double margin = y * model.score(s.features);
  const double slope = loss_slope(loss, margin);
  LossGradient g;
  g.loss = loss_value(loss, margin);
  g.d_weights.resize(model.weights.size());
  for (std::size_t k = 0; k < model.weights.size(); ++k) g.d_weights[k] = slope * y * s.features[k];
  g.d_bias = slope * y;
  return g;
}

/// Mean loss over labeled samples (no penalty term).
inline double mean_loss(const LinearModel& model, std::span<const Sample> data, Loss loss) {
  if (data.empty()) throw InputError("mean_loss: no samples");
  double acc = 0.0;
  for (const auto& s : data) acc += loss_value(loss, static_cast<double>(s.label) * model.score(s.features));
  return acc / static_cast<double>(data.size());
}

namespace detail {

inline void check_training_data(const LinearModel& init, std::span<const Sample> data) {
  if (data.empty()) throw InputError("fit: no training samples");
  for (const auto& s : data) {
    if (!s.labeled()) throw InputError("fit: training data contains an unlabeled sample");
    if (s.features.size() != init.weights.size())
      throw InputError("fit: feature dimension " + std::to_string(s.features.size()) +
                       " does not match model dimension " + std::to_string(init.weights.size()));
  }
}

}  // namespace detail

/// Mini-batch gradient descent on mean loss + l2_penalty * ||w||^2 / 2,
/// starting from `init`. Samples are reshuffled each epoch from a generator
/// seeded with config.seed.
inline LinearModel fit(const LinearModel& init, std::span<const Sample> data, const TrainConfig& config) {
  config.validate();
  detail::check_training_data(init, data);
  const std::size_t n = data.size();
  const std::size_t d = init.weights.size();

  LinearModel model = init;
  std::mt19937_64 rng(config.seed);
  std::vector<double> grad_w(d);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = seeded_permutation(n, rng());
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      double grad_b = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const Sample& s = data[order[k]];
        const double y = static_cast<double>(s.label);
        const double slope = loss_slope(config.loss, y * model.score(s.features));
        if (slope == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) grad_w[j] += slope * y * s.features[j];
        grad_b += slope * y;
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t j = 0; j < d; ++j)
        model.weights[j] -= config.learning_rate * (grad_w[j] * inv + config.l2_penalty * model.weights[j]);
      model.bias -= config.learning_rate * grad_b * inv;
    }
    const double epoch_loss = mean_loss(model, data, config.loss);
    const bool finite_params = std::isfinite(model.bias) &&
                               std::all_of(model.weights.begin(), model.weights.end(),
                                           [](double w) { return std::isfinite(w); });
    if (!std::isfinite(epoch_loss) || !finite_params)
      throw NumericError("fit: non-finite loss or parameters at epoch " + std::to_string(epoch));
  }
  return model;
}

/// sign(w.x + b), with an exact zero score mapped to +1.
inline int predict_one(const LinearModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size()) throw InputError("predict: dimension mismatch");
  return model.score(x) >= 0.0 ? 1 : -1;
}

inline std::vector<int> predict(const LinearModel& model, std::span<const Sample> samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(predict_one(model, s.features));
  return out;
}

inline std::vector<int> predict(const LinearModel& model, const std::vector<std::vector<double>>& features) {
  std::vector<int> out;
  out.reserve(features.size());
  for (const auto& x : features) out.push_back(predict_one(model, x));
  return out;
}

/// Fraction of labeled samples predicted correctly.
inline double accuracy(const LinearModel& model, std::span<const Sample> data) {
  if (data.empty()) throw EvaluationError("accuracy: no samples");
  std::size_t correct = 0;
  for (const auto& s : data) {
    if (!s.labeled()) throw EvaluationError("accuracy: unlabeled sample");
    if (predict_one(model, s.features) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

/// Target test accuracy; throws EvaluationError when the target has no labeled test split.
inline double target_accuracy(const LinearModel& model, const DomainCollection& c) {
  if (!c.target.test_labeled())
    throw EvaluationError("target '" + c.target.domain_id + "' has no labeled test split");
  return accuracy(model, c.target.test);
}

inline std::vector<Sample> concatenate_sources(const DomainCollection& c) {
  std::vector<Sample> all;
  for (const auto& s : c.sources) all.insert(all.end(), s.train.begin(), s.train.end());
  return all;
}

/// Labels for the target train split from a model fit on all source train data.
inline std::vector<int> pseudo_label_target(const DomainCollection& c, const TrainConfig& config) {
  if (c.sources.empty()) throw InputError("pseudo-labeling needs at least one source");
  const auto model = fit(LinearModel::zero(c.dim()), concatenate_sources(c), config);
  return predict(model, c.target.train);
}

/// Zero init, then fit on each path domain in order, warm-starting every stage.
/// `stage_overrides` replaces the shared config for the named domains.
inline LinearModel gft_train(const Path& path, const DomainCollection& c, const TrainConfig& config,
                             const std::map<std::string, TrainConfig>& stage_overrides = {}) {
  if (path.domains.empty()) throw InputError("gft_train: empty path");
  LinearModel model = LinearModel::zero(c.dim());
  for (const auto& id : path.domains) {
    const Dataset& ds = c.find(id);
    if (&ds == &c.target) throw InputError("gft_train: the target cannot be a training stage");
    const auto it = stage_overrides.find(id);
    model = fit(model, ds.train, it == stage_overrides.end() ? config : it->second);
  }
  return model;
}

/// Memo of first-stage losses keyed by (domain id, training config).
class FirstStageLossCache {
 public:
  std::optional<double> get(const std::string& id, const TrainConfig& config) const {
    std::lock_guard lock(mutex_);
    for (const auto& e : entries_)
      if (e.id == id && e.config == config) return e.loss;
    return std::nullopt;
  }

  void put(const std::string& id, const TrainConfig& config, double loss) {
    std::lock_guard lock(mutex_);
    entries_.push_back({id, config, loss});
  }

 private:
  struct Entry {
    std::string id;
    TrainConfig config;
    double loss;
  };
  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
};

/// Final mean training loss of a zero-init model fit on each source alone.
inline std::map<std::string, double> first_stage_losses(const DomainCollection& c, const TrainConfig& config,
                                                        FirstStageLossCache* cache = nullptr) {
  std::vector<double> losses(c.sources.size());
  parallel_for(c.sources.size(), [&](std::size_t i) {
    const auto& ds = c.sources[i];
    if (cache)
      if (auto hit = cache->get(ds.domain_id, config)) {
        losses[i] = *hit;
        return;
      }
    const auto model = fit(LinearModel::zero(c.dim()), ds.train, config);
    losses[i] = mean_loss(model, ds.train, config.loss);
    if (cache) cache->put(ds.domain_id, config, losses[i]);
  });
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < c.sources.size(); ++i) out[c.sources[i].domain_id] = losses[i];
  return out;
}

inline LinearModel baseline_all_sources(const DomainCollection& c, const TrainConfig& config) {
  return fit(LinearModel::zero(c.dim()), concatenate_sources(c), config);
}

/// Source with the smallest distance to the target (ties: smallest id).
inline std::string closest_source(const DisparityMatrix& matrix) {
  validate(matrix);
  const std::size_t t = matrix.size() - 1;
  std::size_t best = 0;
  for (std::size_t i = 1; i < t; ++i) {
    const double v = matrix.values(i, t), b = matrix.values(best, t);
    if (v < b || (v == b && matrix.ids[i] < matrix.ids[best])) best = i;
  }
  return matrix.ids[best];
}

inline LinearModel baseline_closest(const DomainCollection& c, const DisparityMatrix& matrix,
                                    const TrainConfig& config) {
  for (const auto& s : c.sources) static_cast<void>(matrix.index_of(s.domain_id));
  return fit(LinearModel::zero(c.dim()), c.find(closest_source(matrix)).train, config);
}

}  // namespace gft
