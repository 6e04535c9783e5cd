#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace probflow {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Input that violates a graph or configuration invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation refused because it would exceed a configured size limit.
class LimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Undirected edge stored canonically with u < v.
struct Edge {
  VertexId u = 0;
  VertexId v = 0;
  double probability = 1.0;

  VertexId other(VertexId x) const { return x == u ? v : u; }
};

struct Incidence {
  VertexId neighbor;
  EdgeId edge;
};

/// Edge given by endpoint ids in arbitrary order, before canonicalisation.
struct EdgeSpec {
  VertexId a;
  VertexId b;
  double probability;
};

using Point = std::array<double, 2>;

/// Undirected vertex-weighted graph with independent edge existence
/// probabilities. Immutable after construction.
///
/// Vertex ids are dense in [0, vertex_count()). Edge ids are dense in
/// [0, edge_count()) and ordered by the (u, v) endpoint pair, so comparing
/// edge ids is the same as comparing canonical endpoint pairs.
class ProbabilisticGraph {
 public:
  ProbabilisticGraph() = default;

  /// Throws ValidationError on self-loops, duplicate edges, unknown
  /// endpoints, probabilities outside (0,1] or negative weights.
  ProbabilisticGraph(std::vector<std::string> labels, std::vector<double> weights,
                     std::vector<EdgeSpec> edges);

  std::size_t vertex_count() const { return labels_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  std::span<const Edge> edges() const { return edges_; }
  double probability(EdgeId e) const { return edges_[e].probability; }
  double weight(VertexId v) const { return weights_.at(v); }
  std::span<const double> weights() const { return weights_; }
  double total_weight() const;
  const std::string& label(VertexId v) const { return labels_.at(v); }
  std::span<const Incidence> incident(VertexId v) const { return adjacency_.at(v); }

  std::optional<VertexId> find_vertex(std::string_view label) const;
  std::optional<EdgeId> find_edge(VertexId a, VertexId b) const;

  bool has_coordinates() const { return !coords_.empty(); }
  const Point& coordinates(VertexId v) const { return coords_.at(v); }
  /// Attaches one coordinate per vertex.
  void set_coordinates(std::vector<Point> coords);

  /// Copy of this graph with every edge probability replaced.
  ProbabilisticGraph with_probabilities(std::span<const double> probs) const;
  ProbabilisticGraph with_weights(std::vector<double> weights) const;

  friend bool operator==(const ProbabilisticGraph& a, const ProbabilisticGraph& b);

 private:
  void build_index();

  std::vector<std::string> labels_;
  std::vector<double> weights_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adjacency_;
  std::unordered_map<std::uint64_t, EdgeId> edge_index_;
  std::unordered_map<std::string, VertexId> label_index_;
  std::vector<Point> coords_;
};

/// One realisation of the edge random variables of a graph.
struct DeterministicWorld {
  const ProbabilisticGraph* parent = nullptr;
  std::vector<std::uint8_t> present;  // indexed by EdgeId

  bool has(EdgeId e) const { return present[e] != 0; }
};

DeterministicWorld make_world(const ProbabilisticGraph& graph, std::span<const EdgeId> present_edges);

/// Pr(g) = prod_{present} P(e) * prod_{absent} (1 - P(e)).
double world_probability(const ProbabilisticGraph& graph, const DeterministicWorld& world);

/// Restriction to the given vertices and edges. Vertices keep their labels
/// and are re-indexed in ascending original id order.
ProbabilisticGraph induced_subgraph(const ProbabilisticGraph& graph,
                                    std::span<const VertexId> keep_vertices,
                                    std::span<const EdgeId> keep_edges);

/// Parses the whitespace separated edge list `<u> <v> <p>` (and optionally
/// the `<v> <w>` weights list). Lines starting with '#' and blank lines are
/// skipped. Vertices without a weight line get weight 1.0.
///
/// Labels that are all non-negative integers receive ids in numeric order;
/// any other labels sort after them lexicographically.
ProbabilisticGraph load_graph(std::istream& edge_list, std::istream* weights = nullptr,
                              std::istream* coords = nullptr);
ProbabilisticGraph load_graph_files(const std::string& edge_path, const std::string& weights_path = {},
                                    const std::string& coords_path = {});

void save_edges(const ProbabilisticGraph& graph, std::ostream& out);
void save_weights(const ProbabilisticGraph& graph, std::ostream& out);
void save_coordinates(const ProbabilisticGraph& graph, std::ostream& out);

/// Shortest decimal text that reads back to exactly the same double.
std::string format_double(double x);

/// Reads `<u> <v>` pairs (a third probability column is ignored) and maps
/// them to edge ids of `graph`, preserving file order.
std::vector<EdgeId> load_edge_selection(const ProbabilisticGraph& graph, std::istream& in);

}  // namespace probflow
