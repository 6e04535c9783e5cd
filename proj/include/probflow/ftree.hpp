#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "probflow/graph.hpp"
#include "probflow/sampler.hpp"

namespace probflow {

using ComponentId = std::uint32_t;

enum class ComponentKind { mono, bi };

/// Edge from a mono-connected member one step towards its articulation.
struct ParentLink {
  VertexId parent;
  EdgeId edge;
  double probability;
};

/// A component of the flow tree.
///
/// Mono components are trees hanging from `articulation`: every member has a
/// single ParentLink and the links lead to the articulation without cycles.
/// Bi components are blocks: `internal_edges` over members plus the
/// articulation form a graph with no cut vertex, and `reach` holds the
/// sampled member-to-articulation probabilities.
struct Component {
  ComponentId id = 0;
  ComponentKind kind = ComponentKind::mono;
  VertexId articulation = 0;
  std::vector<VertexId> members;  // ascending
  std::map<VertexId, ParentLink> links;
  std::vector<EdgeId> internal_edges;  // ascending
  std::shared_ptr<const ReachTable> reach;
  bool dirty = false;

  bool is_mono() const { return kind == ComponentKind::mono; }
  bool contains(VertexId v) const;
  std::size_t edge_count() const { return is_mono() ? links.size() : internal_edges.size(); }
};

/// Canonical identity of a bi component: members, articulation and edges.
std::vector<std::uint64_t> component_signature(const Component& c);

/// Bounded LRU cache of fully sampled reach tables, keyed by component
/// signature. Safe for concurrent use.
class MemoStore {
 public:
  explicit MemoStore(std::size_t capacity = 4096) : capacity_(capacity) {}

  std::shared_ptr<const ReachTable> lookup(const std::vector<std::uint64_t>& signature);
  void store(const std::vector<std::uint64_t>& signature, std::shared_ptr<const ReachTable> table);

  std::size_t size() const;
  std::uint64_t hits() const { return hits_.load(); }
  std::uint64_t misses() const { return misses_.load(); }

 private:
  using Key = std::string;
  static Key key_of(const std::vector<std::uint64_t>& signature);

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<Key> order_;
  std::unordered_map<Key, std::pair<std::shared_ptr<const ReachTable>, std::list<Key>::iterator>> entries_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

/// How bi components get their reach tables during insertion.
struct SamplingContext {
  SamplerConfig sampler;
  MemoStore* memo = nullptr;
  // Leave changed components unsampled; FTree::refine() samples them.
  bool defer_sampling = false;
  // Replaces sampling by a caller-supplied member probability vector
  // (tests use exact enumeration here).
  std::function<std::vector<double>(const ComponentGraph&)> reach_override;
};

enum class InsertCase { IIa, IIb, IIIa, IIIb, IVa, IVb, IVc_composite };

std::string to_string(InsertCase c);
/// "II", "III" or "IV".
std::string case_family(InsertCase c);

struct InsertReport {
  InsertCase case_taken = InsertCase::IIa;
  std::vector<InsertCase> subcases;  // Case IV only: one entry per adjusted component
  std::vector<ComponentId> components_resampled;
  // Edges of the components whose reach had to be (re)computed; zero when
  // the insertion stayed analytic.
  std::uint64_t edges_sampled_count = 0;
  // Edge samples actually drawn: worlds times component edges.
  std::uint64_t edge_draws = 0;
  bool memo_hit = false;
};

/// Flow tree rooted at the query vertex.
///
/// The root is a mono component with articulation Q that persists even when
/// it has no members, so every other component has a parent.
class FTree {
 public:
  explicit FTree(VertexId query);

  VertexId query() const { return query_; }
  ComponentId root() const { return root_; }

  bool is_attached(VertexId v) const { return v == query_ || owner_.count(v) != 0; }
  std::size_t attached_count() const { return owner_.size() + 1; }
  /// Owning component; the root for Q; nullopt when unattached.
  std::optional<ComponentId> component_of(VertexId v) const;
  const Component& component(ComponentId id) const { return components_.at(id); }
  std::vector<ComponentId> component_ids() const;
  std::optional<ComponentId> parent(ComponentId id) const;
  std::vector<ComponentId> children(ComponentId id) const;
  const std::set<EdgeId>& selected_edges() const { return selected_; }
  bool has_dirty() const;
  /// Smallest sample count over bi components; nullopt if there are none.
  std::optional<std::uint64_t> min_samples() const;

  /// Adds `edge` to the selected subgraph and restructures the tree.
  /// Throws ValidationError if the edge is already selected or neither
  /// endpoint is attached.
  InsertReport insert_edge(const ProbabilisticGraph& graph, EdgeId edge, const SamplingContext& ctx);

  /// Handles an edge closing a cycle inside mono component `mc`: the cycle
  /// becomes a bi component hanging at the first vertex shared by the two
  /// tree paths, and the members cut off by it are regrouped.
  InsertReport split_tree(const ProbabilisticGraph& graph, ComponentId mc, VertexId v_src, VertexId v_dest,
                          EdgeId edge, const SamplingContext& ctx);

  /// Samples every unfinished bi component up to min(target, ctx samples).
  /// Returns the number of edge draws performed.
  std::uint64_t refine(const ProbabilisticGraph& graph, const SamplingContext& ctx, std::uint64_t target);

  ComponentId lowest_common_ancestor(ComponentId a, ComponentId b) const;

  double reach_to_root(VertexId v) const;

  /// Throws std::logic_error if a component still awaits sampling.
  FlowEstimate expected_flow(const ProbabilisticGraph& graph, const SamplerConfig& cfg) const;

  /// Structural invariant violations; empty when the tree is well formed.
  std::vector<std::string> validate(const ProbabilisticGraph& graph) const;

  /// One line per component: `<id> <MONO|BI> AV=<v> V={..} children=[..]`.
  std::string dump(const ProbabilisticGraph& graph) const;

 private:
  Component& mutable_component(ComponentId id) { return components_.at(id); }
  ComponentId add_component(ComponentKind kind, VertexId articulation);
  VertexId up(VertexId v) const;
  std::optional<ComponentId> same_component(VertexId a, VertexId b) const;
  InsertReport close_cycle(const ProbabilisticGraph& graph, VertexId a, VertexId b, EdgeId edge,
                           const SamplingContext& ctx, bool within_mono);
  void resample(const ProbabilisticGraph& graph, Component& c, const SamplingContext& ctx, InsertReport& report);
  // Attached vertices other than Q, every vertex after the vertex it hangs from.
  std::vector<VertexId> topological_vertices() const;

  VertexId query_;
  ComponentId root_ = 0;
  ComponentId next_id_ = 0;
  std::map<ComponentId, Component> components_;
  std::unordered_map<VertexId, ComponentId> owner_;
  std::set<EdgeId> selected_;
};

ComponentGraph make_component_graph(const ProbabilisticGraph& graph, const Component& c);

/// Flow after hypothetically inserting `edge`; `tree` is left untouched and
/// the probed copy is returned for reuse.
struct ProbeResult {
  FlowEstimate estimate;
  InsertReport report;
  FTree tree;
};

ProbeResult probe_edge(const FTree& tree, const ProbabilisticGraph& graph, EdgeId edge, const SamplingContext& ctx);

}  // namespace probflow
