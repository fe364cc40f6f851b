#pragma once

// Training-path routing on the disparity graph: nearest neighbor, per-source
// shortest paths, minimum spanning tree paths, the magnitude-based selection
// over minimum-weight candidates, and exhaustive bound minimization.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "gft/bound.hpp"
#include "gft/error.hpp"
#include "gft/graph.hpp"
#include "gft/path.hpp"

namespace gft {

enum class Strategy { nn, sp, mst, tgft };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::nn: return "nn";
    case Strategy::sp: return "sp";
    case Strategy::mst: return "mst";
    case Strategy::tgft: return "tgft";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "nn") return Strategy::nn;
  if (s == "sp") return Strategy::sp;
  if (s == "mst") return Strategy::mst;
  if (s == "tgft") return Strategy::tgft;
  throw InputError("unknown strategy '" + s + "'");
}

/// Greedy walk from the target to the closest unvisited vertex until every
/// source is visited; the training path is the visitation order reversed.
/// Ties go to the lexicographically smallest id. Throws RoutingError on a
/// dead end, which can only happen on a pruned graph.
inline Path route_nearest_neighbor(const DisparityGraph& g) {
  const std::size_t k = g.num_sources();
  std::vector<bool> visited(g.num_vertices(), false);
  visited[g.target()] = true;
  std::vector<std::size_t> order;
  std::size_t current = g.target();
  while (order.size() < k) {
    std::optional<std::size_t> best;
    for (std::size_t u = 0; u < k; ++u) {
      if (visited[u] || !g.has_edge(current, u)) continue;
      if (!best) {
        best = u;
        continue;
      }
      const double wu = g.weight(current, u), wb = g.weight(current, *best);
      if (wu < wb || (wu == wb && g.id(u) < g.id(*best))) best = u;
    }
    if (!best)
      throw RoutingError("nearest-neighbor routing hit a dead end at '" + g.id(current) +
                         "'; this strategy assumes the complete (unpruned) graph");
    visited[*best] = true;
    order.push_back(*best);
    current = *best;
  }
  std::reverse(order.begin(), order.end());
  return make_path(g, order);
}

/// Minimum-weight simple path from `source` to the target, or nullopt when
/// unreachable. Ties: fewer hops, then lexicographically smallest id sequence.
/// Distances accumulate from the source end, so the result equals the path's
/// weight summed in training order.
inline std::optional<Path> shortest_path_to_target(const DisparityGraph& g, std::size_t source) {
  struct Label {
    double dist = std::numeric_limits<double>::infinity();
    std::size_t hops = 0;
    std::vector<std::string> ids;
    std::vector<std::size_t> vertices;
  };
  auto better = [](const Label& a, const Label& b) {
    return std::tie(a.dist, a.hops, a.ids) < std::tie(b.dist, b.hops, b.ids);
  };

  const std::size_t n = g.num_vertices();
  std::vector<Label> label(n);
  std::vector<bool> settled(n, false);
  label[source].dist = 0.0;
  label[source].ids = {g.id(source)};
  label[source].vertices = {source};

  while (true) {
    std::optional<std::size_t> u;
    for (std::size_t v = 0; v < n; ++v)
      if (!settled[v] && std::isfinite(label[v].dist) && (!u || better(label[v], label[*u]))) u = v;
    if (!u) return std::nullopt;
    settled[*u] = true;
    if (*u == g.target()) break;
    for (auto v : g.neighbors(*u)) {
      if (settled[v]) continue;
      Label cand;
      cand.dist = label[*u].dist + g.weight(*u, v);
      cand.hops = label[*u].hops + 1;
      cand.ids = label[*u].ids;
      cand.ids.push_back(g.id(v));
      cand.vertices = label[*u].vertices;
      cand.vertices.push_back(v);
      if (better(cand, label[v])) label[v] = std::move(cand);
    }
  }
  auto vertices = label[g.target()].vertices;
  vertices.pop_back();
  return make_path(g, vertices);
}

/// One shortest path per source reachable from the target, in source order.
inline std::vector<Path> route_shortest_paths(const DisparityGraph& g) {
  std::vector<Path> out;
  for (std::size_t s = 0; s < g.num_sources(); ++s)
    if (auto p = shortest_path_to_target(g, s)) out.push_back(std::move(*p));
  return out;
}

/// Kruskal minimum spanning forest. Equal weights are processed in
/// lexicographic (id, id) order of the edge endpoints.
inline std::vector<Edge> kruskal_mst(const DisparityGraph& g) {
  auto key = [&g](const Edge& e) {
    const auto& a = g.id(e.u);
    const auto& b = g.id(e.v);
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  };
  std::vector<Edge> edges = g.edges();
  std::sort(edges.begin(), edges.end(), [&](const Edge& x, const Edge& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    return key(x) < key(y);
  });

  std::vector<std::size_t> parent(g.num_vertices());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<Edge> tree;
  for (const auto& e : edges) {
    const auto ru = find(e.u), rv = find(e.v);
    if (ru == rv) continue;
    parent[ru] = rv;
    tree.push_back(e);
  }
  return tree;
}

/// For each source in the target's tree component, the unique MST path to the target.
inline std::vector<Path> route_mst(const DisparityGraph& g) {
  const auto tree = kruskal_mst(g);
  const std::size_t n = g.num_vertices();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : tree) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  constexpr auto kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> toward_target(n, kNone);
  std::vector<std::size_t> stack{g.target()};
  toward_target[g.target()] = g.target();
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto u : adj[v])
      if (toward_target[u] == kNone) {
        toward_target[u] = v;
        stack.push_back(u);
      }
  }
  std::vector<Path> out;
  for (std::size_t s = 0; s < g.num_sources(); ++s) {
    if (toward_target[s] == kNone) continue;
    std::vector<std::size_t> vertices;
    for (auto v = s; v != g.target(); v = toward_target[v]) vertices.push_back(v);
    out.push_back(make_path(g, vertices));
  }
  return out;
}

/// Largest magnitude among the candidates; ties by smaller weight, fewer hops,
/// then lexicographic id sequence.
inline Path select_optimal(const std::vector<Path>& candidates) {
  if (candidates.empty()) throw RoutingError("no candidate paths to select from");
  return *std::min_element(candidates.begin(), candidates.end(), preferred_by_magnitude);
}

inline constexpr std::size_t kMaxUncappedSources = 10;

/// Enumerates every simple path ending at the target (at most `kappa_cap`
/// domains when set), scores each with gft_bound using eps1[first domain], and
/// returns the minimum. Equal bounds fall back to the select_optimal order.
/// When `candidates` is non-null every scored breakdown is appended to it.
inline Path route_exhaustive_bound_min(const DisparityGraph& g, const BoundParams& params,
                                       const std::map<std::string, double>& eps1,
                                       std::optional<std::size_t> kappa_cap = std::nullopt,
                                       std::vector<BoundBreakdown>* candidates = nullptr) {
  params.validate();
  const std::size_t k = g.num_sources();
  if (!kappa_cap && k > kMaxUncappedSources)
    throw InputError("exhaustive routing refuses K=" + std::to_string(k) +
                     " > 10 without a path-length cap");
  if (kappa_cap && *kappa_cap == 0) throw InputError("kappa cap must be >= 1");
  const std::size_t depth_limit = kappa_cap ? std::min(*kappa_cap, k) : k;
  const auto sizes = g.size_map();

  std::optional<BoundBreakdown> best;
  std::vector<std::size_t> reversed;  // target-adjacent domain first
  std::vector<bool> used(g.num_vertices(), false);

  auto consider = [&] {
    std::vector<std::size_t> order(reversed.rbegin(), reversed.rend());
    Path p = make_path(g, order);
    const auto it = eps1.find(p.domains.front());
    if (it == eps1.end()) throw InputError("no first-stage loss for domain '" + p.domains.front() + "'");
    auto b = gft_bound(p, g.matrix(), sizes, params, it->second);
    if (!best || b.total < best->total ||
        (b.total == best->total && preferred_by_magnitude(b.path, best->path)))
      best = b;
    if (candidates) candidates->push_back(std::move(b));
  };

  auto extend = [&](auto&& self, std::size_t end) -> void {
    if (reversed.size() == depth_limit) return;
    for (std::size_t u = 0; u < k; ++u) {
      if (used[u] || !g.has_edge(end, u)) continue;
      used[u] = true;
      reversed.push_back(u);
      consider();
      self(self, u);
      reversed.pop_back();
      used[u] = false;
    }
  };
  extend(extend, g.target());

  if (!best) throw RoutingError("no source is connected to the target");
  return best->path;
}

}  // namespace gft
