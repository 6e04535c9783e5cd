#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "probflow/ftree.hpp"
#include "probflow/graph.hpp"

namespace probflow::testing {

inline std::vector<std::string> labels_for(std::size_t n) {
  std::vector<std::string> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::to_string(i);
  return out;
}

inline ProbabilisticGraph make_graph(std::size_t n, std::vector<EdgeSpec> edges, std::vector<double> weights = {}) {
  if (weights.empty()) weights.assign(n, 1.0);
  return ProbabilisticGraph(labels_for(n), std::move(weights), std::move(edges));
}

inline double draw_probability(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.05, 0.95)(rng);
}

inline std::vector<double> draw_weights(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> w(n);
  for (auto& x : w) x = static_cast<double>(std::uniform_int_distribution<int>(0, 10)(rng));
  return w;
}

/// Random tree on n vertices: vertex i > 0 hangs from a random earlier vertex.
inline ProbabilisticGraph random_tree(std::size_t n, std::mt19937_64& rng) {
  std::vector<EdgeSpec> edges;
  for (VertexId v = 1; v < n; ++v) {
    const auto parent = static_cast<VertexId>(std::uniform_int_distribution<std::size_t>(0, v - 1)(rng));
    edges.push_back({parent, v, draw_probability(rng)});
  }
  return make_graph(n, std::move(edges), draw_weights(n, rng));
}

/// Connected random graph with n vertices and m >= n-1 edges.
inline ProbabilisticGraph random_connected(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  std::set<std::pair<VertexId, VertexId>> pairs;
  for (VertexId v = 1; v < n; ++v) {
    const auto parent = static_cast<VertexId>(std::uniform_int_distribution<std::size_t>(0, v - 1)(rng));
    pairs.emplace(parent, v);
  }
  const std::size_t max_edges = n * (n - 1) / 2;
  m = std::min(m, max_edges);
  std::uniform_int_distribution<VertexId> pick(0, static_cast<VertexId>(n - 1));
  while (pairs.size() < m) {
    auto a = pick(rng), b = pick(rng);
    if (a == b) continue;
    pairs.emplace(std::min(a, b), std::max(a, b));
  }
  std::vector<EdgeSpec> edges;
  for (const auto& [a, b] : pairs) edges.push_back({a, b, draw_probability(rng)});
  return make_graph(n, std::move(edges), draw_weights(n, rng));
}

/// Random order of `edges` in which every edge touches a vertex already
/// connected to q by earlier edges. Edges never reachable are dropped.
inline std::vector<EdgeId> connected_order(const ProbabilisticGraph& g, VertexId q, std::vector<EdgeId> edges,
                                           std::mt19937_64& rng) {
  std::set<VertexId> attached{q};
  std::vector<EdgeId> order;
  while (!edges.empty()) {
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = g.edge(edges[i]);
      if (attached.count(e.u) || attached.count(e.v)) ready.push_back(i);
    }
    if (ready.empty()) break;
    const auto pick = ready[std::uniform_int_distribution<std::size_t>(0, ready.size() - 1)(rng)];
    const auto& e = g.edge(edges[pick]);
    attached.insert(e.u);
    attached.insert(e.v);
    order.push_back(edges[pick]);
    edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return order;
}

inline std::vector<EdgeId> all_edges(const ProbabilisticGraph& g) {
  std::vector<EdgeId> out(g.edge_count());
  for (EdgeId e = 0; e < out.size(); ++e) out[e] = e;
  return out;
}

inline EdgeId edge_of(const ProbabilisticGraph& g, VertexId a, VertexId b) {
  auto e = g.find_edge(a, b);
  if (!e) throw std::logic_error("missing test edge");
  return *e;
}

/// Vertex ids of a graph built by make_graph coincide with numeric labels.
inline EdgeId edge_of(const ProbabilisticGraph& g, const std::string& a, const std::string& b) {
  return edge_of(g, *g.find_vertex(a), *g.find_vertex(b));
}

}  // namespace probflow::testing
