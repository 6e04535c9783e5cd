#pragma once

#include <span>
#include <vector>

#include "probflow/graph.hpp"
#include "probflow/sampler.hpp"

// Exponential-time reference computations over all possible worlds. Only
// edges with probability below one are enumerated; certain edges are fixed
// present. These are the ground truth the estimators are tested against.
namespace probflow::oracle {

struct OracleLimits {
  std::size_t max_edges_enumeration = 20;
  std::size_t max_edges_selection = 12;
};

double exact_reachability(const ProbabilisticGraph& graph, VertexId source, VertexId target,
                          const OracleLimits& limits = {});

/// Probability of every vertex being connected to q, using only `edges`.
std::vector<double> exact_reach_all(const ProbabilisticGraph& graph, VertexId q, std::span<const EdgeId> edges,
                                    const OracleLimits& limits = {});

/// sum_v P(q ~ v) * W(v); q contributes W(q).
double exact_expected_flow(const ProbabilisticGraph& graph, VertexId q, const OracleLimits& limits = {});
double exact_expected_flow(const ProbabilisticGraph& graph, VertexId q, std::span<const EdgeId> edges,
                           const OracleLimits& limits = {});

struct Selection {
  std::vector<EdgeId> edges;  // ascending
  double flow = 0.0;
};

/// Best subset of at most k edges. Ties (within 1e-12 relative) go to the
/// lexicographically smallest sorted edge list.
Selection exhaustive_maxflow(const ProbabilisticGraph& graph, VertexId q, std::size_t k,
                             const OracleLimits& limits = {});

/// Exact member-to-articulation probabilities of a component, in member order.
std::vector<double> exact_component_reach(const ComponentGraph& cg, const OracleLimits& limits = {});

}  // namespace probflow::oracle
