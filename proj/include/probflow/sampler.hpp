#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "probflow/graph.hpp"
#include "probflow/random.hpp"

namespace probflow {

struct SamplerConfig {
  std::uint64_t samples = 1000;
  double alpha = 0.01;
  std::uint64_t master_seed = 0;
  std::uint64_t min_samples_for_ci = 30;
  // Granularity at which interval pruning re-checks candidates.
  std::uint64_t ci_batch = 100;

  void validate() const;
};

/// Expected flow with a confidence band. `std_error` is the estimated
/// standard error of `mean`; it is zero when the value is exact.
struct FlowEstimate {
  double mean = 0.0;
  double lb = 0.0;
  double ub = 0.0;
  std::uint64_t samples_used = 1;
  double std_error = 0.0;
  bool exact = false;
};

/// Standard normal quantile, |error| < 1e-12 on (0,1).
double normal_quantile(double p);

/// z such that P(|Z| <= z) = 1 - alpha.
double two_sided_z(double alpha);

/// Wald interval p +- z * sqrt(p(1-p)/samples), clamped to [0,1].
std::pair<double, double> confidence_interval(std::uint64_t successes, std::uint64_t samples, double alpha);

DeterministicWorld sample_world(const ProbabilisticGraph& graph, RandomStream& stream);

/// Vertices connected to q in the world, ascending; always contains q.
std::vector<VertexId> reachable_set(const DeterministicWorld& world, VertexId q);

/// Whole-graph Monte-Carlo estimate of the expected flow to q.
FlowEstimate mc_expected_flow(const ProbabilisticGraph& graph, VertexId q, const SamplerConfig& cfg);

/// Same estimator restricted to the subgraph formed by `edges`. The stream
/// is derived from the master seed and the sorted edge set, so equal edge
/// sets always produce equal estimates.
FlowEstimate mc_expected_flow(const ProbabilisticGraph& graph, VertexId q, std::span<const EdgeId> edges,
                              const SamplerConfig& cfg);

/// Compact local view of one component: vertex 0 is the articulation,
/// vertices 1.. are the members in ascending global id.
struct ComponentGraph {
  struct LocalEdge {
    std::uint32_t a;
    std::uint32_t b;
    double p;
  };
  std::vector<VertexId> vertices;
  std::vector<LocalEdge> edges;

  std::size_t member_count() const { return vertices.empty() ? 0 : vertices.size() - 1; }
};

/// Estimated probability of each member of a component reaching its
/// articulation vertex, with the per-world outcomes retained for variance
/// estimation.
class ReachTable {
 public:
  ReachTable() = default;
  ReachTable(VertexId articulation, std::vector<VertexId> members);

  /// Table holding known probabilities, no sampling involved.
  static ReachTable exact(VertexId articulation, std::vector<VertexId> members, std::vector<double> probs,
                          std::uint64_t nominal_samples);

  VertexId articulation() const { return articulation_; }
  std::span<const VertexId> members() const { return members_; }
  std::uint64_t sample_count() const { return samples_; }
  bool is_exact() const { return exact_; }

  /// Index of v in members(), or -1.
  std::ptrdiff_t index_of(VertexId v) const;
  double prob(VertexId v) const { return prob_at(checked_index(v)); }
  double prob_at(std::size_t i) const;
  std::uint64_t successes_at(std::size_t i) const { return successes_[i]; }
  std::pair<double, double> bounds_at(std::size_t i, double alpha) const;

  /// Sample variance of sum_i hit_i(g) * coeff[i] over the recorded worlds.
  double weighted_variance(std::span<const double> coeff) const;

  /// Draws worlds [sample_count(), target) of the stream seeded by `seed`.
  /// World i always consumes the same random numbers, so extending in
  /// several steps gives the same table as one call.
  void extend(const ComponentGraph& cg, std::uint64_t seed, std::uint64_t target);

 private:
  std::size_t checked_index(VertexId v) const;

  VertexId articulation_ = 0;
  std::vector<VertexId> members_;
  std::vector<std::uint64_t> successes_;
  std::vector<double> exact_probs_;
  std::vector<std::uint64_t> world_bits_;
  std::size_t words_per_world_ = 0;
  std::uint64_t samples_ = 0;
  bool exact_ = false;
};

ReachTable mc_component_reach(const ComponentGraph& cg, std::uint64_t seed, std::uint64_t samples);

/// Reach table of every non-articulation vertex of `component` towards
/// `articulation`, sampling all of the component's edges.
ReachTable mc_component_reach(const ProbabilisticGraph& component, VertexId articulation, const SamplerConfig& cfg);

}  // namespace probflow
