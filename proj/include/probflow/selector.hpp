#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "probflow/ftree.hpp"
#include "probflow/graph.hpp"
#include "probflow/sampler.hpp"

namespace probflow {

enum class Variant { naive, dijkstra, ft, ft_m, ft_m_ci, ft_m_ds, ft_m_ci_ds };

std::string to_string(Variant v);
/// Throws ValidationError for unknown names.
Variant parse_variant(const std::string& name);
const std::vector<Variant>& all_variants();

bool uses_memo(Variant v);
bool uses_ci(Variant v);
bool uses_ds(Variant v);

struct StrategyConfig {
  Variant variant = Variant::ft;
  std::size_t k = 1;
  SamplerConfig sampler;
  double ds_c = 2.0;
  std::size_t memo_capacity = 4096;

  void validate() const;
};

struct CandidateState {
  EdgeId edge = 0;
  std::uint64_t delay_remaining = 0;
  std::optional<FlowEstimate> last_estimate;
};

struct TraceRecord {
  std::size_t iteration = 0;
  EdgeId edge = 0;
  FlowEstimate estimate;
  std::uint64_t edges_sampled = 0;
  std::size_t probes = 0;
  std::size_t pruned = 0;
  std::size_t delayed = 0;
  double elapsed_ms = 0.0;
};

struct Solution {
  std::vector<EdgeId> selected;
  std::vector<TraceRecord> trace;

  /// Estimate after the last iteration, or W(Q) alone when nothing was selected.
  FlowEstimate final_estimate(const ProbabilisticGraph& graph, VertexId q) const;
};

/// Edges with at least one endpoint in `attached` that are not selected,
/// ascending by id.
std::vector<EdgeId> candidate_edges(const ProbabilisticGraph& graph, const std::set<VertexId>& attached,
                                    const std::set<EdgeId>& selected);

/// Candidates whose upper bound lies below the best lower bound of another
/// candidate; only estimates with at least `min_samples` worlds take part.
/// Returns the surviving edges, ascending.
std::vector<EdgeId> ci_prune(const std::vector<std::pair<EdgeId, FlowEstimate>>& candidates,
                             std::uint64_t min_samples);

/// max(0, floor(log_c(cost / pot))); zero when cost is zero.
std::uint64_t ds_delay(double pot, std::uint64_t cost, double c);

Solution greedy_select(const ProbabilisticGraph& graph, VertexId q, const StrategyConfig& cfg);
Solution naive_select(const ProbabilisticGraph& graph, VertexId q, const StrategyConfig& cfg);
Solution dijkstra_select(const ProbabilisticGraph& graph, VertexId q, std::size_t k);

/// Dispatches on cfg.variant.
Solution select_edges(const ProbabilisticGraph& graph, VertexId q, const StrategyConfig& cfg);

/// Worker count: PROBFLOW_THREADS if set and positive, else hardware
/// concurrency (at least one).
std::size_t worker_count();

/// Runs fn(0..n-1) on up to worker_count() threads. The first exception
/// thrown by any call is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace probflow
