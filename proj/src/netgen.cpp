#include "probflow/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <set>

#include "probflow/random.hpp"

namespace probflow {

namespace {

enum Stream : std::uint64_t { structure = 1, probabilities = 2, weights = 3, friends = 4 };

RandomStream stream(std::uint64_t seed, Family family, Stream s) {
  return RandomStream(
      derive_seed(seed, StreamPurpose::generator, hash_combine(static_cast<std::uint64_t>(family) + 1, s)));
}

std::vector<std::string> numeric_labels(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
  return labels;
}

std::vector<double> draw_weights(std::size_t n, WeightRange range, RandomStream rng) {
  if (range.min < 0 || range.max < range.min) throw ValidationError("invalid weight range");
  const double span = static_cast<double>(range.max - range.min + 1);
  std::vector<double> w(n);
  for (auto& x : w) x = range.min + std::floor(uniform01(rng) * span);
  return w;
}

ProbabilisticGraph assemble(Family family, std::size_t n, std::vector<std::pair<VertexId, VertexId>> pairs,
                            std::uint64_t seed, WeightRange weights) {
  std::sort(pairs.begin(), pairs.end());
  auto prng = stream(seed, family, probabilities);
  std::vector<EdgeSpec> edges;
  edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) edges.push_back({a, b, uniform_open01(prng)});
  return ProbabilisticGraph(numeric_labels(n), draw_weights(n, weights, stream(seed, family, Stream::weights)),
                            std::move(edges));
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::erdos: return "erdos";
    case Family::partitioned: return "partitioned";
    case Family::wsn: return "wsn";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  for (Family f : {Family::erdos, Family::partitioned, Family::wsn}) {
    if (to_string(f) == name) return f;
  }
  throw ValidationError("unknown graph family '" + name + "'");
}

void GenSpec::validate() const {
  if (n == 0) throw ValidationError("vertex count must be positive");
  switch (family) {
    case Family::erdos:
      if (n < 2) throw ValidationError("erdos needs at least two vertices");
      if (n * degree / 2 > n * (n - 1) / 2) throw ValidationError("requested edges exceed the number of vertex pairs");
      break;
    case Family::partitioned: {
      if (degree < 2 || degree % 2 != 0) throw ValidationError("partitioned degree must be even and at least 2");
      const std::size_t part = degree / 2;
      if (n % part != 0) throw ValidationError("partition size d/2 must divide n");
      const std::size_t parts = n / part;
      if (parts < (wrap ? 3u : 2u)) {
        throw ValidationError("partitioned graph needs at least " + std::to_string(wrap ? 3 : 2) + " partitions");
      }
      break;
    }
    case Family::wsn:
      if (!(epsilon > 0.0) || epsilon > std::sqrt(2.0)) throw ValidationError("epsilon must lie in (0, sqrt 2]");
      break;
  }
  if (weights.min < 0 || weights.max < weights.min) throw ValidationError("invalid weight range");
}

ProbabilisticGraph gen_erdos(std::size_t n, std::size_t d, std::uint64_t seed, WeightRange weights) {
  GenSpec{Family::erdos, n, d, 0.1, seed, true, weights}.validate();
  const std::size_t m = n * d / 2;
  auto rng = stream(seed, Family::erdos, structure);
  std::set<std::pair<VertexId, VertexId>> chosen;
  const double nn = static_cast<double>(n);
  while (chosen.size() < m) {
    auto a = static_cast<VertexId>(uniform01(rng) * nn);
    auto b = static_cast<VertexId>(uniform01(rng) * nn);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    chosen.emplace(a, b);
  }
  return assemble(Family::erdos, n, {chosen.begin(), chosen.end()}, seed, weights);
}

ProbabilisticGraph gen_partitioned(std::size_t n, std::size_t d, std::uint64_t seed, bool wrap, WeightRange weights) {
  GenSpec{Family::partitioned, n, d, 0.1, seed, wrap, weights}.validate();
  const std::size_t part = d / 2;
  const std::size_t parts = n / part;
  std::vector<std::pair<VertexId, VertexId>> pairs;
  for (std::size_t p = 0; p < parts; ++p) {
    if (!wrap && p + 1 == parts) break;
    const std::size_t q = (p + 1) % parts;
    for (std::size_t i = 0; i < part; ++i) {
      for (std::size_t j = 0; j < part; ++j) {
        auto a = static_cast<VertexId>(p * part + i);
        auto b = static_cast<VertexId>(q * part + j);
        pairs.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
  }
  return assemble(Family::partitioned, n, std::move(pairs), seed, weights);
}

ProbabilisticGraph gen_wsn(std::size_t n, double epsilon, std::uint64_t seed, WeightRange weights) {
  GenSpec{Family::wsn, n, 0, epsilon, seed, true, weights}.validate();
  auto rng = stream(seed, Family::wsn, structure);
  std::vector<Point> pts(n);
  for (auto& p : pts) {
    p[0] = uniform01(rng);
    p[1] = uniform01(rng);
  }
  const double eps2 = epsilon * epsilon;
  std::vector<std::pair<VertexId, VertexId>> pairs;
  for (VertexId a = 0; a < n; ++a) {
    for (VertexId b = a + 1; b < n; ++b) {
      const double dx = pts[a][0] - pts[b][0];
      const double dy = pts[a][1] - pts[b][1];
      if (dx * dx + dy * dy <= eps2) pairs.emplace_back(a, b);
    }
  }
  auto g = assemble(Family::wsn, n, std::move(pairs), seed, weights);
  g.set_coordinates(std::move(pts));
  return g;
}

ProbabilisticGraph generate(const GenSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::erdos: return gen_erdos(spec.n, spec.degree, spec.seed, spec.weights);
    case Family::partitioned: return gen_partitioned(spec.n, spec.degree, spec.seed, spec.wrap, spec.weights);
    case Family::wsn: return gen_wsn(spec.n, spec.epsilon, spec.seed, spec.weights);
  }
  throw ValidationError("unknown graph family");
}

ProbabilisticGraph assign_distance_decay(const ProbabilisticGraph& graph, double lambda, double world_size_m) {
  if (!graph.has_coordinates()) throw ValidationError("distance decay needs vertex coordinates");
  if (!(lambda >= 0.0) || !(world_size_m > 0.0)) throw ValidationError("invalid decay parameters");
  std::vector<double> probs(graph.edge_count());
  for (EdgeId e = 0; e < graph.edge_count(); ++e) {
    const auto& a = graph.coordinates(graph.edge(e).u);
    const auto& b = graph.coordinates(graph.edge(e).v);
    const double meters = std::hypot(a[0] - b[0], a[1] - b[1]) * world_size_m;
    // Probabilities must stay positive for very long edges.
    probs[e] = std::max(std::exp(-lambda * meters), std::numeric_limits<double>::min());
  }
  return graph.with_probabilities(probs);
}

ProbabilisticGraph assign_close_friends(const ProbabilisticGraph& graph, std::size_t f, std::uint64_t seed) {
  RandomStream rng(derive_seed(seed, StreamPurpose::probabilities, friends));
  std::vector<std::uint8_t> close(graph.edge_count(), 0);
  std::vector<EdgeId> inc;
  for (VertexId v = 0; v < graph.vertex_count(); ++v) {
    inc.clear();
    for (const auto& i : graph.incident(v)) inc.push_back(i.edge);
    std::sort(inc.begin(), inc.end());
    // Partial Fisher-Yates: the first f entries become the close edges.
    const std::size_t take = std::min(f, inc.size());
    for (std::size_t i = 0; i < take; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(inc.size() - i));
      std::swap(inc[i], inc[j]);
      close[inc[i]] = 1;
    }
  }
  std::vector<double> probs(graph.edge_count());
  for (EdgeId e = 0; e < graph.edge_count(); ++e) {
    probs[e] = close[e] ? 1.0 - 0.5 * uniform01(rng) : 0.5 * (1.0 - uniform01(rng));
  }
  return graph.with_probabilities(probs);
}

}  // namespace probflow
