#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gft/error.hpp"
#include "gft/graph.hpp"

namespace gft {

/// A GFT training order: `domains` are trained first to last, then the model
/// is evaluated on `terminal` (the target).
struct Path {
  std::vector<std::string> domains;
  std::string terminal;
  double weight = 0.0;         // sum of edge weights along (domains..., terminal)
  std::size_t magnitude = 0;   // sum of n_t over domains
  std::size_t kappa = 0;       // number of domains

  friend bool operator==(const Path&, const Path&) = default;
};

/// Builds a Path from source vertex indices (training order) on `g`.
/// Throws RoutingError if a hop is not an edge or a vertex repeats.
inline Path make_path(const DisparityGraph& g, const std::vector<std::size_t>& vertices) {
  if (vertices.empty()) throw RoutingError("empty path");
  Path p;
  p.terminal = g.id(g.target());
  std::vector<bool> used(g.num_vertices(), false);
  for (std::size_t k = 0; k < vertices.size(); ++k) {
    const auto v = vertices[k];
    if (v >= g.num_sources()) throw RoutingError("path may only contain source domains");
    if (used[v]) throw RoutingError("path repeats domain '" + g.id(v) + "'");
    used[v] = true;
    const auto next = k + 1 < vertices.size() ? vertices[k + 1] : g.target();
    if (!g.has_edge(v, next))
      throw RoutingError("no edge between '" + g.id(v) + "' and '" + g.id(next) + "'");
    p.domains.push_back(g.id(v));
    p.weight += g.weight(v, next);
    p.magnitude += g.size_of(v);
  }
  p.kappa = p.domains.size();
  return p;
}

inline Path make_path(const DisparityGraph& g, const std::vector<std::string>& ids) {
  std::vector<std::size_t> vertices;
  vertices.reserve(ids.size());
  for (const auto& id : ids) vertices.push_back(g.index_of(id));
  return make_path(g, vertices);
}

/// Ordering used for every deterministic tie-break between candidate paths:
/// larger magnitude, then smaller weight, then fewer hops, then lexicographic ids.
inline bool preferred_by_magnitude(const Path& a, const Path& b) {
  if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
  if (a.weight != b.weight) return a.weight < b.weight;
  if (a.kappa != b.kappa) return a.kappa < b.kappa;
  return a.domains < b.domains;
}

}  // namespace gft
