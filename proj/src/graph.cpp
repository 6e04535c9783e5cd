#include "probflow/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace probflow {

namespace {

std::uint64_t pair_key(VertexId a, VertexId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool skip_line(const std::vector<std::string_view>& tokens) {
  return tokens.empty() || tokens.front().front() == '#';
}

std::optional<double> parse_double(std::string_view s) {
  double x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return x;
}

std::optional<std::uint64_t> parse_index(std::string_view s) {
  if (s.empty() || s.size() > 18) return std::nullopt;
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return x;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& what) {
  std::ostringstream os;
  os << source << ':' << line << ": " << what;
  throw ValidationError(os.str());
}

struct RawEdge {
  std::string a, b;
  double p;
  std::size_t line;
};

// Numeric labels first in numeric order, then the rest lexicographically.
bool label_less(const std::string& x, const std::string& y) {
  auto nx = parse_index(x);
  auto ny = parse_index(y);
  if (nx && ny) return *nx != *ny ? *nx < *ny : x < y;
  if (nx != ny) return nx.has_value();
  return x < y;
}

}  // namespace

ProbabilisticGraph::ProbabilisticGraph(std::vector<std::string> labels, std::vector<double> weights,
                                       std::vector<EdgeSpec> edges)
    : labels_(std::move(labels)), weights_(std::move(weights)) {
  if (weights_.size() != labels_.size()) throw ValidationError("weight count differs from vertex count");
  for (std::size_t v = 0; v < weights_.size(); ++v) {
    if (!(weights_[v] >= 0.0)) throw ValidationError("negative weight on vertex " + labels_[v]);
  }
  const auto n = static_cast<VertexId>(labels_.size());
  edges_.reserve(edges.size());
  for (const auto& s : edges) {
    if (s.a >= n || s.b >= n) throw ValidationError("edge endpoint is not a vertex");
    if (s.a == s.b) throw ValidationError("self-loop on vertex " + labels_[s.a]);
    if (!(s.probability > 0.0 && s.probability <= 1.0)) {
      throw ValidationError("probability out of range (0,1]: " + format_double(s.probability));
    }
    edges_.push_back({std::min(s.a, s.b), std::max(s.a, s.b), s.probability});
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& x, const Edge& y) { return std::tie(x.u, x.v) < std::tie(y.u, y.v); });
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i].u == edges_[i - 1].u && edges_[i].v == edges_[i - 1].v) {
      throw ValidationError("duplicate edge " + labels_[edges_[i].u] + " " + labels_[edges_[i].v]);
    }
  }
  build_index();
}

void ProbabilisticGraph::build_index() {
  adjacency_.assign(labels_.size(), {});
  edge_index_.clear();
  label_index_.clear();
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    const auto& ed = edges_[e];
    adjacency_[ed.u].push_back({ed.v, e});
    adjacency_[ed.v].push_back({ed.u, e});
    edge_index_.emplace(pair_key(ed.u, ed.v), e);
  }
  for (VertexId v = 0; v < labels_.size(); ++v) {
    if (!label_index_.emplace(labels_[v], v).second) throw ValidationError("duplicate vertex label " + labels_[v]);
  }
}

double ProbabilisticGraph::total_weight() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

std::optional<VertexId> ProbabilisticGraph::find_vertex(std::string_view label) const {
  auto it = label_index_.find(std::string(label));
  if (it == label_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeId> ProbabilisticGraph::find_edge(VertexId a, VertexId b) const {
  auto it = edge_index_.find(pair_key(a, b));
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

void ProbabilisticGraph::set_coordinates(std::vector<Point> coords) {
  if (!coords.empty() && coords.size() != labels_.size()) {
    throw ValidationError("coordinate count differs from vertex count");
  }
  coords_ = std::move(coords);
}

ProbabilisticGraph ProbabilisticGraph::with_probabilities(std::span<const double> probs) const {
  if (probs.size() != edges_.size()) throw ValidationError("probability count differs from edge count");
  std::vector<EdgeSpec> specs;
  specs.reserve(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) specs.push_back({edges_[e].u, edges_[e].v, probs[e]});
  ProbabilisticGraph g(labels_, weights_, std::move(specs));
  g.coords_ = coords_;
  return g;
}

ProbabilisticGraph ProbabilisticGraph::with_weights(std::vector<double> weights) const {
  std::vector<EdgeSpec> specs;
  specs.reserve(edges_.size());
  for (const auto& e : edges_) specs.push_back({e.u, e.v, e.probability});
  ProbabilisticGraph g(labels_, std::move(weights), std::move(specs));
  g.coords_ = coords_;
  return g;
}

bool operator==(const ProbabilisticGraph& a, const ProbabilisticGraph& b) {
  if (a.labels_ != b.labels_ || a.weights_ != b.weights_ || a.coords_ != b.coords_) return false;
  if (a.edges_.size() != b.edges_.size()) return false;
  for (std::size_t i = 0; i < a.edges_.size(); ++i) {
    const auto& x = a.edges_[i];
    const auto& y = b.edges_[i];
    if (x.u != y.u || x.v != y.v || x.probability != y.probability) return false;
  }
  return true;
}

DeterministicWorld make_world(const ProbabilisticGraph& graph, std::span<const EdgeId> present_edges) {
  DeterministicWorld w{&graph, std::vector<std::uint8_t>(graph.edge_count(), 0)};
  for (EdgeId e : present_edges) {
    if (e >= graph.edge_count()) throw ValidationError("world edge is not in the graph");
    w.present[e] = 1;
  }
  return w;
}

double world_probability(const ProbabilisticGraph& graph, const DeterministicWorld& world) {
  if (world.parent != &graph || world.present.size() != graph.edge_count()) {
    throw ValidationError("world does not belong to this graph");
  }
  double pr = 1.0;
  for (EdgeId e = 0; e < graph.edge_count(); ++e) {
    const double p = graph.probability(e);
    pr *= world.has(e) ? p : 1.0 - p;
  }
  return pr;
}

ProbabilisticGraph induced_subgraph(const ProbabilisticGraph& graph, std::span<const VertexId> keep_vertices,
                                    std::span<const EdgeId> keep_edges) {
  std::vector<VertexId> kept(keep_vertices.begin(), keep_vertices.end());
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  std::unordered_map<VertexId, VertexId> remap;
  std::vector<std::string> labels;
  std::vector<double> weights;
  std::vector<Point> coords;
  for (VertexId v : kept) {
    if (v >= graph.vertex_count()) throw ValidationError("kept vertex is not in the graph");
    remap.emplace(v, static_cast<VertexId>(labels.size()));
    labels.push_back(graph.label(v));
    weights.push_back(graph.weight(v));
    if (graph.has_coordinates()) coords.push_back(graph.coordinates(v));
  }
  std::vector<EdgeSpec> specs;
  for (EdgeId e : keep_edges) {
    const auto& ed = graph.edge(e);
    auto a = remap.find(ed.u);
    auto b = remap.find(ed.v);
    if (a == remap.end() || b == remap.end()) {
      throw ValidationError("kept edge " + graph.label(ed.u) + " " + graph.label(ed.v) +
                            " has an endpoint outside the kept vertices");
    }
    specs.push_back({a->second, b->second, ed.probability});
  }
  ProbabilisticGraph sub(std::move(labels), std::move(weights), std::move(specs));
  if (!coords.empty()) sub.set_coordinates(std::move(coords));
  return sub;
}

ProbabilisticGraph load_graph(std::istream& edge_list, std::istream* weights, std::istream* coords) {
  std::vector<RawEdge> raw;
  std::map<std::string, double> weight_of;
  std::map<std::string, Point> coord_of;
  std::string line;

  for (std::size_t n = 1; std::getline(edge_list, line); ++n) {
    auto t = split_ws(line);
    if (skip_line(t)) continue;
    if (t.size() != 3) fail("edges", n, "expected `<u> <v> <p>`");
    auto p = parse_double(t[2]);
    if (!p) fail("edges", n, "malformed probability '" + std::string(t[2]) + "'");
    if (!(*p > 0.0 && *p <= 1.0)) fail("edges", n, "probability out of range (0,1]: " + std::string(t[2]));
    if (t[0] == t[1]) fail("edges", n, "self-loop on " + std::string(t[0]));
    raw.push_back({std::string(t[0]), std::string(t[1]), *p, n});
  }
  if (weights != nullptr) {
    for (std::size_t n = 1; std::getline(*weights, line); ++n) {
      auto t = split_ws(line);
      if (skip_line(t)) continue;
      if (t.size() != 2) fail("weights", n, "expected `<v> <w>`");
      auto w = parse_double(t[1]);
      if (!w) fail("weights", n, "malformed weight '" + std::string(t[1]) + "'");
      if (!(*w >= 0.0)) fail("weights", n, "negative weight " + std::string(t[1]));
      if (!weight_of.emplace(std::string(t[0]), *w).second) fail("weights", n, "duplicate vertex");
    }
  }
  if (coords != nullptr) {
    for (std::size_t n = 1; std::getline(*coords, line); ++n) {
      auto t = split_ws(line);
      if (skip_line(t)) continue;
      if (t.size() != 3) fail("coords", n, "expected `<v> <x> <y>`");
      auto x = parse_double(t[1]);
      auto y = parse_double(t[2]);
      if (!x || !y) fail("coords", n, "malformed coordinate");
      if (!coord_of.emplace(std::string(t[0]), Point{*x, *y}).second) fail("coords", n, "duplicate vertex");
    }
  }

  std::vector<std::string> labels;
  for (const auto& r : raw) {
    labels.push_back(r.a);
    labels.push_back(r.b);
  }
  for (const auto& [l, w] : weight_of) labels.push_back(l);
  for (const auto& [l, c] : coord_of) labels.push_back(l);
  std::sort(labels.begin(), labels.end(), label_less);
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());

  std::unordered_map<std::string, VertexId> id_of;
  for (VertexId v = 0; v < labels.size(); ++v) id_of.emplace(labels[v], v);

  std::vector<double> w(labels.size(), 1.0);
  for (const auto& [l, x] : weight_of) w[id_of.at(l)] = x;

  std::unordered_map<std::uint64_t, std::size_t> seen;
  std::vector<EdgeSpec> specs;
  specs.reserve(raw.size());
  for (const auto& r : raw) {
    const VertexId a = id_of.at(r.a);
    const VertexId b = id_of.at(r.b);
    auto [it, fresh] = seen.emplace(pair_key(a, b), r.line);
    if (!fresh) {
      fail("edges", r.line, "duplicate edge " + r.a + " " + r.b + " (first on line " + std::to_string(it->second) + ")");
    }
    specs.push_back({a, b, r.p});
  }
  ProbabilisticGraph g(std::move(labels), std::move(w), std::move(specs));
  if (!coord_of.empty()) {
    if (coord_of.size() != g.vertex_count()) throw ValidationError("coordinates missing for some vertices");
    std::vector<Point> c(g.vertex_count());
    for (const auto& [l, p] : coord_of) c[*g.find_vertex(l)] = p;
    g.set_coordinates(std::move(c));
  }
  return g;
}

ProbabilisticGraph load_graph_files(const std::string& edge_path, const std::string& weights_path,
                                    const std::string& coords_path) {
  std::ifstream edges(edge_path);
  if (!edges) throw ValidationError("cannot open edge list " + edge_path);
  std::ifstream weights;
  std::ifstream coords;
  if (!weights_path.empty()) {
    weights.open(weights_path);
    if (!weights) throw ValidationError("cannot open weights " + weights_path);
  }
  if (!coords_path.empty()) {
    coords.open(coords_path);
    if (!coords) throw ValidationError("cannot open coordinates " + coords_path);
  }
  return load_graph(edges, weights_path.empty() ? nullptr : &weights, coords_path.empty() ? nullptr : &coords);
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

void save_edges(const ProbabilisticGraph& graph, std::ostream& out) {
  for (const auto& e : graph.edges()) {
    out << graph.label(e.u) << ' ' << graph.label(e.v) << ' ' << format_double(e.probability) << '\n';
  }
}

void save_weights(const ProbabilisticGraph& graph, std::ostream& out) {
  for (VertexId v = 0; v < graph.vertex_count(); ++v) {
    out << graph.label(v) << ' ' << format_double(graph.weight(v)) << '\n';
  }
}

void save_coordinates(const ProbabilisticGraph& graph, std::ostream& out) {
  if (!graph.has_coordinates()) return;
  for (VertexId v = 0; v < graph.vertex_count(); ++v) {
    const auto& c = graph.coordinates(v);
    out << graph.label(v) << ' ' << format_double(c[0]) << ' ' << format_double(c[1]) << '\n';
  }
}

std::vector<EdgeId> load_edge_selection(const ProbabilisticGraph& graph, std::istream& in) {
  std::vector<EdgeId> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    auto t = split_ws(line);
    if (skip_line(t)) continue;
    if (t.size() < 2 || t.size() > 3) fail("selection", n, "expected `<u> <v>`");
    auto a = graph.find_vertex(t[0]);
    auto b = graph.find_vertex(t[1]);
    if (!a || !b) fail("selection", n, "unknown vertex");
    auto e = graph.find_edge(*a, *b);
    if (!e) fail("selection", n, "edge not in graph");
    out.push_back(*e);
  }
  return out;
}

}  // namespace probflow
