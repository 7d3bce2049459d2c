#pragma once

// Node-level centrality and clustering measures over the oriented graph, and
// their per-entity-kind aggregation into graph-level features.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "provex/graph.hpp"

namespace provex {

// Degree counts every event incident on the node, parallel events included,
// normalized by n-1. Multi-edges can therefore push a node above 1.
inline std::vector<double> degree_centrality(const DirectedAdjacency& adj) {
  const std::size_t n = adj.node_count();
  std::vector<double> out(n, 0.0);
  if (n <= 1) return out;
  const double scale = 1.0 / static_cast<double>(n - 1);
  for (std::size_t v = 0; v < n; ++v)
    out[v] = static_cast<double>(adj.in(v).size() + adj.out(v).size()) * scale;
  return out;
}

// Incoming closeness with reachability scaling: if r nodes can reach v with
// total distance S, closeness(v) = (r / (n-1)) * (r / S).
inline std::vector<double> closeness_centrality(const DirectedAdjacency& adj) {
  const std::size_t n = adj.node_count();
  std::vector<double> out(n, 0.0);
  if (n <= 1) return out;
  constexpr std::size_t kUnseen = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(n);
  std::deque<std::size_t> queue;
  for (std::size_t v = 0; v < n; ++v) {
    std::fill(dist.begin(), dist.end(), kUnseen);
    dist[v] = 0;
    queue.assign(1, v);
    std::size_t reached = 0;
    std::size_t total = 0;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t w : adj.in(u)) {
        if (dist[w] != kUnseen) continue;
        dist[w] = dist[u] + 1;
        ++reached;
        total += dist[w];
        queue.push_back(w);
      }
    }
    if (reached == 0) continue;
    const double r = static_cast<double>(reached);
    out[v] = (r / static_cast<double>(n - 1)) * (r / static_cast<double>(total));
  }
  return out;
}

// Brandes' algorithm on the simple directed graph (parallel arcs collapsed),
// normalized by (n-1)(n-2).
inline std::vector<double> betweenness_centrality(const DirectedAdjacency& adj) {
  const std::size_t n = adj.node_count();
  std::vector<double> cb(n, 0.0);
  if (n <= 2) return cb;
  const auto succ = adj.simple_out();

  std::vector<std::size_t> order;
  std::vector<std::vector<std::size_t>> preds(n);
  std::vector<double> sigma(n);
  std::vector<long> dist(n);
  std::vector<double> delta(n);
  std::deque<std::size_t> queue;
  order.reserve(n);

  for (std::size_t s = 0; s < n; ++s) {
    order.clear();
    for (auto& p : preds) p.clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(delta.begin(), delta.end(), 0.0);
    sigma[s] = 1.0;
    dist[s] = 0;
    queue.assign(1, s);
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      order.push_back(v);
      for (std::size_t w : succ[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const std::size_t w = *it;
      for (std::size_t v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  const double scale = 1.0 / (static_cast<double>(n - 1) * static_cast<double>(n - 2));
  for (double& x : cb) x *= scale;
  return cb;
}

// Kahn's algorithm on the simple directed graph.
inline bool is_acyclic(const DirectedAdjacency& adj) {
  const std::size_t n = adj.node_count();
  const auto succ = adj.simple_out();
  std::vector<std::size_t> indeg(n, 0);
  for (const auto& s : succ)
    for (std::size_t w : s) ++indeg[w];
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  std::size_t removed = 0;
  while (!ready.empty()) {
    const std::size_t v = ready.back();
    ready.pop_back();
    ++removed;
    for (std::size_t w : succ[v])
      if (--indeg[w] == 0) ready.push_back(w);
  }
  return removed == n;
}

struct EigenvectorOptions {
  int max_iterations = 200;
  double tolerance = 1e-8;
};

struct EigenvectorResult {
  std::vector<double> values;
  bool acyclic = false;
  bool converged = true;  // false => values are all zero as a fallback
  int iterations = 0;
};

// Power iteration with x <- x + A^T x on the simple directed graph (a node
// inherits importance from its in-neighbors). The identity shift keeps
// periodic graphs from oscillating without moving the eigenvector. Acyclic
// graphs have no dominant eigenvector and are reported as all zeros.
inline EigenvectorResult eigenvector_centrality(const DirectedAdjacency& adj,
                                                const EigenvectorOptions& opts = {}) {
  const std::size_t n = adj.node_count();
  EigenvectorResult res;
  res.values.assign(n, 0.0);
  if (n == 0 || is_acyclic(adj)) {
    res.acyclic = true;
    return res;
  }
  const auto succ = adj.simple_out();
  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  bool converged = false;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    next = x;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v : succ[u]) next[v] += x[u];
    double norm = 0.0;
    for (double a : next) norm += a * a;
    norm = std::sqrt(norm);
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      next[v] /= norm;
      change += std::abs(next[v] - x[v]);
    }
    x.swap(next);
    res.iterations = it;
    if (change < static_cast<double>(n) * opts.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    res.converged = false;
    return res;
  }
  const double peak = *std::max_element(x.begin(), x.end());
  for (std::size_t v = 0; v < n; ++v) res.values[v] = x[v] / peak;
  return res;
}

struct ClusteringResult {
  std::vector<std::size_t> triangles;
  std::vector<double> coefficient;
};

inline ClusteringResult clustering(const UndirectedAdjacency& u) {
  const std::size_t n = u.node_count();
  ClusteringResult res{std::vector<std::size_t>(n, 0), std::vector<double>(n, 0.0)};
  for (std::size_t v = 0; v < n; ++v) {
    const auto& nb = u.neighbors[v];
    std::size_t t = 0;
    for (std::size_t i = 0; i < nb.size(); ++i)
      for (std::size_t j = i + 1; j < nb.size(); ++j)
        if (u.adjacent(nb[i], nb[j])) ++t;
    res.triangles[v] = t;
    const double k = static_cast<double>(nb.size());
    if (nb.size() >= 2) res.coefficient[v] = 2.0 * static_cast<double>(t) / (k * (k - 1.0));
  }
  return res;
}

// ---------------------------------------------------------------------------

enum class NodeFeature : std::size_t {
  DegreeCentrality,
  ClosenessCentrality,
  BetweennessCentrality,
  EigenvectorCentrality,
  ClusteringTriangles,
  ClusteringCoefficient,
};
inline constexpr std::size_t kNodeFeatureCount = 6;

inline constexpr std::array<const char*, kNodeFeatureCount> kNodeFeatureNames = {
    "degree_centrality",    "closeness_centrality",  "betweenness_centrality",
    "eigenvector_centrality", "clustering_triangles", "clustering_coefficient"};

struct NodeFeatureTable {
  std::vector<double> degree_centrality;
  std::vector<double> closeness_centrality;
  std::vector<double> betweenness_centrality;
  std::vector<double> eigenvector_centrality;
  std::vector<std::size_t> triangles;
  std::vector<double> clustering_coefficient;
  bool eigenvector_converged = true;

  std::size_t size() const { return degree_centrality.size(); }

  double value(NodeFeature f, std::size_t v) const {
    switch (f) {
      case NodeFeature::DegreeCentrality: return degree_centrality[v];
      case NodeFeature::ClosenessCentrality: return closeness_centrality[v];
      case NodeFeature::BetweennessCentrality: return betweenness_centrality[v];
      case NodeFeature::EigenvectorCentrality: return eigenvector_centrality[v];
      case NodeFeature::ClusteringTriangles: return static_cast<double>(triangles[v]);
      case NodeFeature::ClusteringCoefficient: return clustering_coefficient[v];
    }
    return 0.0;
  }
};

inline NodeFeatureTable node_features(const ProvGraph& g) {
  const auto adj = orient_edges(g);
  auto eig = eigenvector_centrality(adj);
  auto cl = clustering(undirected_projection(g));
  NodeFeatureTable t;
  t.degree_centrality = degree_centrality(adj);
  t.closeness_centrality = closeness_centrality(adj);
  t.betweenness_centrality = betweenness_centrality(adj);
  t.eigenvector_centrality = std::move(eig.values);
  t.eigenvector_converged = eig.converged;
  t.triangles = std::move(cl.triangles);
  t.clustering_coefficient = std::move(cl.coefficient);
  return t;
}

enum class Aggregation { Mean, Max };

struct NamedValue {
  std::string name;
  double value = 0.0;
};

// One value per node feature over all nodes; 0 for an empty graph.
inline std::vector<NamedValue> aggregate_all(const NodeFeatureTable& t, std::string_view prefix,
                                             Aggregation agg = Aggregation::Mean) {
  std::vector<NamedValue> out;
  const std::size_t n = t.size();
  for (std::size_t f = 0; f < kNodeFeatureCount; ++f) {
    double acc = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      const double x = t.value(static_cast<NodeFeature>(f), v);
      acc = agg == Aggregation::Mean ? acc + x : std::max(acc, x);
    }
    if (agg == Aggregation::Mean && n > 0) acc /= static_cast<double>(n);
    out.push_back({std::string(prefix) + kNodeFeatureNames[f], acc});
  }
  return out;
}

// For each (kind, feature): the mean (or max) over nodes of that kind, 0 when
// the graph has no node of that kind. Output order is kind-major:
// process_*, file_*, socket_*.
inline std::vector<NamedValue> aggregate_by_kind(const NodeFeatureTable& t, const ProvGraph& g,
                                                 Aggregation agg = Aggregation::Mean) {
  std::vector<NamedValue> out;
  out.reserve(kNodeKindCount * kNodeFeatureCount);
  for (NodeKind kind : kAllKinds) {
    const std::string prefix = std::string(to_string(kind)) + "_";
    for (std::size_t f = 0; f < kNodeFeatureCount; ++f) {
      double acc = 0.0;
      std::size_t count = 0;
      for (std::size_t v = 0; v < g.node_count(); ++v) {
        if (g.kind(v) != kind) continue;
        const double x = t.value(static_cast<NodeFeature>(f), v);
        acc = agg == Aggregation::Mean ? acc + x : std::max(acc, x);
        ++count;
      }
      if (agg == Aggregation::Mean && count > 0) acc /= static_cast<double>(count);
      out.push_back({prefix + kNodeFeatureNames[f], acc});
    }
  }
  return out;
}

}  // namespace provex
