#pragma once

// Disparity graph over K sources + target, optionally pruned by a strict
// threshold on the distance.

#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "gft/error.hpp"
#include "gft/matrix.hpp"
#include "gft/otdist.hpp"

namespace gft {

using SizeMap = std::map<std::string, std::size_t>;

struct Edge {
  std::size_t u = 0;  // u < v
  std::size_t v = 0;
  double weight = 0.0;
};

/// Vertices follow the matrix order; the target is the last vertex.
class DisparityGraph {
 public:
  DisparityGraph() = default;

  [[nodiscard]] std::size_t num_vertices() const noexcept { return ids_.size(); }
  [[nodiscard]] std::size_t num_sources() const noexcept { return ids_.size() - 1; }
  [[nodiscard]] std::size_t target() const noexcept { return ids_.size() - 1; }

  [[nodiscard]] const std::vector<std::string>& ids() const noexcept { return ids_; }
  [[nodiscard]] const std::string& id(std::size_t v) const { return ids_.at(v); }
  [[nodiscard]] std::size_t size_of(std::size_t v) const { return sizes_.at(v); }
  [[nodiscard]] const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  [[nodiscard]] const std::optional<double>& tau() const noexcept { return tau_; }
  [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }

  [[nodiscard]] std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids_.size(); ++i)
      if (ids_[i] == id) return i;
    throw InputError("domain '" + id + "' not in graph");
  }

  [[nodiscard]] bool has_edge(std::size_t a, std::size_t b) const noexcept {
    return adjacency_(a, b) >= 0.0;
  }

  /// Edge weight; negative when the edge is absent.
  [[nodiscard]] double weight(std::size_t a, std::size_t b) const noexcept { return adjacency_(a, b); }

  [[nodiscard]] std::vector<std::size_t> neighbors(std::size_t v) const {
    std::vector<std::size_t> out;
    for (std::size_t u = 0; u < ids_.size(); ++u)
      if (has_edge(v, u)) out.push_back(u);
    return out;
  }

  [[nodiscard]] bool is_complete() const noexcept {
    const std::size_t n = ids_.size();
    return edges_.size() == n * (n - 1) / 2;
  }

  /// The matrix the graph was built from (all pairs, including pruned ones).
  [[nodiscard]] const DisparityMatrix& matrix() const noexcept { return matrix_; }

  [[nodiscard]] SizeMap size_map() const {
    SizeMap m;
    for (std::size_t i = 0; i < ids_.size(); ++i) m[ids_[i]] = sizes_[i];
    return m;
  }

  friend DisparityGraph build_graph(const DisparityMatrix&, const SizeMap&, std::optional<double>);

 private:
  std::vector<std::string> ids_;
  std::vector<std::size_t> sizes_;
  std::optional<double> tau_;
  DisparityMatrix matrix_;
  std::vector<Edge> edges_;
  Matrix adjacency_;  // -1 marks a missing edge
};

/// Complete graph when `tau` is absent, otherwise keeps edges with weight < tau.
/// `sizes` must cover every source; a missing target size is recorded as 0.
inline DisparityGraph build_graph(const DisparityMatrix& matrix, const SizeMap& sizes,
                                  std::optional<double> tau = std::nullopt) {
  validate(matrix);
  DisparityGraph g;
  const std::size_t n = matrix.size();
  g.ids_ = matrix.ids;
  g.tau_ = tau;
  g.matrix_ = matrix;
  g.sizes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = sizes.find(matrix.ids[i]);
    if (it == sizes.end()) {
      if (i + 1 == n) continue;
      throw InputError("no size given for source '" + matrix.ids[i] + "'");
    }
    g.sizes_[i] = it->second;
  }
  g.adjacency_ = Matrix(n, n, -1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = matrix.values(i, j);
      if (tau && !(w < *tau)) continue;
      g.edges_.push_back({i, j, w});
      g.adjacency_(i, j) = w;
      g.adjacency_(j, i) = w;
    }
  return g;
}

/// Sources connected to the target (breadth-first search from the target).
inline std::set<std::string> reachable_sources(const DisparityGraph& g) {
  std::vector<bool> seen(g.num_vertices(), false);
  std::queue<std::size_t> frontier;
  frontier.push(g.target());
  seen[g.target()] = true;
  std::set<std::string> out;
  while (!frontier.empty()) {
    const auto v = frontier.front();
    frontier.pop();
    for (auto u : g.neighbors(v)) {
      if (seen[u]) continue;
      seen[u] = true;
      out.insert(g.id(u));
      frontier.push(u);
    }
  }
  return out;
}

}  // namespace gft
