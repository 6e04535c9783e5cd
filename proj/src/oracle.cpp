#include "probflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "probflow/detail/disjoint_sets.hpp"

namespace probflow::oracle {

namespace {

struct LocalEdge {
  std::uint32_t a, b;
  double p;
};

// Probability of each local vertex being connected to local vertex 0,
// summed over all worlds in world-index order.
std::vector<double> enumerate_reach(std::size_t n, std::span<const LocalEdge> edges, std::size_t limit) {
  std::vector<LocalEdge> certain;
  std::vector<LocalEdge> uncertain;
  for (const auto& e : edges) (e.p >= 1.0 ? certain : uncertain).push_back(e);
  if (uncertain.size() > limit) {
    throw LimitError("exact enumeration over " + std::to_string(uncertain.size()) + " uncertain edges exceeds the " +
                     std::to_string(limit) + "-edge limit");
  }
  detail::DisjointSets base(n);
  for (const auto& e : certain) base.unite(e.a, e.b);

  std::vector<double> reach(n, 0.0);
  detail::DisjointSets dsu;
  const std::uint64_t worlds = std::uint64_t{1} << uncertain.size();
  for (std::uint64_t mask = 0; mask < worlds; ++mask) {
    double pr = 1.0;
    dsu = base;
    for (std::size_t i = 0; i < uncertain.size(); ++i) {
      if (mask >> i & 1) {
        pr *= uncertain[i].p;
        dsu.unite(uncertain[i].a, uncertain[i].b);
      } else {
        pr *= 1.0 - uncertain[i].p;
      }
    }
    const auto root = dsu.find(0);
    for (std::uint32_t v = 0; v < n; ++v) {
      if (dsu.find(v) == root) reach[v] += pr;
    }
  }
  reach[0] = 1.0;
  return reach;
}

}  // namespace

std::vector<double> exact_reach_all(const ProbabilisticGraph& graph, VertexId q, std::span<const EdgeId> edges,
                                    const OracleLimits& limits) {
  if (q >= graph.vertex_count()) throw ValidationError("query vertex is not in the graph");
  // Local index 0 is q; other vertices keep their order.
  const auto n = graph.vertex_count();
  auto local = [&](VertexId v) -> std::uint32_t {
    if (v == q) return 0;
    return v < q ? v + 1 : v;
  };
  std::vector<LocalEdge> le;
  le.reserve(edges.size());
  for (EdgeId e : edges) {
    const auto& ed = graph.edge(e);
    le.push_back({local(ed.u), local(ed.v), ed.probability});
  }
  const auto r = enumerate_reach(n, le, limits.max_edges_enumeration);
  std::vector<double> out(n);
  for (VertexId v = 0; v < n; ++v) out[v] = r[local(v)];
  return out;
}

double exact_reachability(const ProbabilisticGraph& graph, VertexId source, VertexId target,
                          const OracleLimits& limits) {
  if (target >= graph.vertex_count()) throw ValidationError("target vertex is not in the graph");
  std::vector<EdgeId> all(graph.edge_count());
  std::iota(all.begin(), all.end(), EdgeId{0});
  return exact_reach_all(graph, source, all, limits)[target];
}

double exact_expected_flow(const ProbabilisticGraph& graph, VertexId q, const OracleLimits& limits) {
  std::vector<EdgeId> all(graph.edge_count());
  std::iota(all.begin(), all.end(), EdgeId{0});
  return exact_expected_flow(graph, q, all, limits);
}

double exact_expected_flow(const ProbabilisticGraph& graph, VertexId q, std::span<const EdgeId> edges,
                           const OracleLimits& limits) {
  const auto reach = exact_reach_all(graph, q, edges, limits);
  double flow = 0.0;
  for (VertexId v = 0; v < graph.vertex_count(); ++v) flow += reach[v] * graph.weight(v);
  return flow;
}

Selection exhaustive_maxflow(const ProbabilisticGraph& graph, VertexId q, std::size_t k, const OracleLimits& limits) {
  const std::size_t m = graph.edge_count();
  if (m > limits.max_edges_selection) {
    throw LimitError("exhaustive selection over " + std::to_string(m) + " edges exceeds the " +
                     std::to_string(limits.max_edges_selection) + "-edge limit");
  }
  Selection best{{}, exact_expected_flow(graph, q, std::span<const EdgeId>{}, limits)};
  std::vector<EdgeId> subset;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << m); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) > k) continue;
    subset.clear();
    for (EdgeId e = 0; e < m; ++e) {
      if (mask >> e & 1) subset.push_back(e);
    }
    const double f = exact_expected_flow(graph, q, subset, limits);
    const double tol = 1e-12 * std::max(1.0, std::abs(best.flow));
    if (f > best.flow + tol ||
        (std::abs(f - best.flow) <= tol &&
         std::lexicographical_compare(subset.begin(), subset.end(), best.edges.begin(), best.edges.end()))) {
      best.edges = subset;
      best.flow = f;
    }
  }
  return best;
}

std::vector<double> exact_component_reach(const ComponentGraph& cg, const OracleLimits& limits) {
  std::vector<LocalEdge> le;
  le.reserve(cg.edges.size());
  for (const auto& e : cg.edges) le.push_back({e.a, e.b, e.p});
  auto r = enumerate_reach(cg.vertices.size(), le, limits.max_edges_enumeration);
  return std::vector<double>(r.begin() + 1, r.end());
}

}  // namespace probflow::oracle
