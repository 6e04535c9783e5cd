#include "probflow/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "probflow/detail/disjoint_sets.hpp"

namespace probflow {

void SamplerConfig::validate() const {
  if (samples < 1) throw ValidationError("samples must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
  if (ci_batch < 1) throw ValidationError("ci batch must be at least 1");
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -HUGE_VAL;
    if (p == 1.0) return HUGE_VAL;
    throw ValidationError("quantile level must lie in [0,1]");
  }
  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

double two_sided_z(double alpha) {
  return normal_quantile(1.0 - 0.5 * alpha);
}

std::pair<double, double> confidence_interval(std::uint64_t successes, std::uint64_t samples, double alpha) {
  if (samples < 1 || successes > samples) throw ValidationError("confidence interval needs 0 <= s <= S, S >= 1");
  const double p = static_cast<double>(successes) / static_cast<double>(samples);
  const double half = two_sided_z(alpha) * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  return {std::max(0.0, p - half), std::min(1.0, p + half)};
}

DeterministicWorld sample_world(const ProbabilisticGraph& graph, RandomStream& stream) {
  DeterministicWorld w{&graph, std::vector<std::uint8_t>(graph.edge_count(), 0)};
  for (EdgeId e = 0; e < graph.edge_count(); ++e) {
    const double p = graph.probability(e);
    w.present[e] = (p >= 1.0 || uniform01(stream) < p) ? 1 : 0;
  }
  return w;
}

std::vector<VertexId> reachable_set(const DeterministicWorld& world, VertexId q) {
  const auto& g = *world.parent;
  std::vector<std::uint8_t> seen(g.vertex_count(), 0);
  std::vector<VertexId> stack{q};
  std::vector<VertexId> out;
  seen[q] = 1;
  while (!stack.empty()) {
    const VertexId x = stack.back();
    stack.pop_back();
    out.push_back(x);
    for (const auto& inc : g.incident(x)) {
      if (world.has(inc.edge) && !seen[inc.neighbor]) {
        seen[inc.neighbor] = 1;
        stack.push_back(inc.neighbor);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

FlowEstimate mc_expected_flow(const ProbabilisticGraph& graph, VertexId q, const SamplerConfig& cfg) {
  std::vector<EdgeId> all(graph.edge_count());
  for (EdgeId e = 0; e < all.size(); ++e) all[e] = e;
  return mc_expected_flow(graph, q, all, cfg);
}

FlowEstimate mc_expected_flow(const ProbabilisticGraph& graph, VertexId q, std::span<const EdgeId> edges,
                              const SamplerConfig& cfg) {
  cfg.validate();
  if (q >= graph.vertex_count()) throw ValidationError("query vertex is not in the graph");
  std::vector<EdgeId> sorted(edges.begin(), edges.end());
  std::sort(sorted.begin(), sorted.end());

  // Local numbering: q is 0, then the endpoints in ascending global id.
  std::vector<VertexId> locals{q};
  for (EdgeId e : sorted) {
    locals.push_back(graph.edge(e).u);
    locals.push_back(graph.edge(e).v);
  }
  std::sort(locals.begin() + 1, locals.end());
  locals.erase(std::unique(locals.begin() + 1, locals.end()), locals.end());
  locals.erase(std::remove(locals.begin() + 1, locals.end(), q), locals.end());
  std::unordered_map<VertexId, std::uint32_t> local_of;
  for (std::uint32_t i = 0; i < locals.size(); ++i) local_of.emplace(locals[i], i);

  struct Local {
    std::uint32_t a, b;
    double p;
  };
  std::vector<Local> local_edges;
  local_edges.reserve(sorted.size());
  std::vector<std::uint64_t> words;
  words.reserve(sorted.size());
  for (EdgeId e : sorted) {
    const auto& ed = graph.edge(e);
    local_edges.push_back({local_of.at(ed.u), local_of.at(ed.v), ed.probability});
    words.push_back(e);
  }

  const std::uint64_t s_total = cfg.samples;
  RandomStream rng(derive_seed(cfg.master_seed, StreamPurpose::whole_graph, hash_words(words)));
  detail::DisjointSets dsu(locals.size());
  std::vector<std::uint64_t> hits(locals.size(), 0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t s = 0; s < s_total; ++s) {
    dsu.reset(locals.size());
    for (const auto& le : local_edges) {
      if (le.p >= 1.0 || uniform01(rng) < le.p) dsu.unite(le.a, le.b);
    }
    const auto root = dsu.find(0);
    double flow = 0.0;
    for (std::uint32_t i = 0; i < locals.size(); ++i) {
      if (dsu.find(i) == root) {
        ++hits[i];
        flow += graph.weight(locals[i]);
      }
    }
    sum += flow;
    sum_sq += flow * flow;
  }

  const double n = static_cast<double>(s_total);
  FlowEstimate est;
  est.samples_used = s_total;
  est.mean = sum / n;
  const double var = s_total > 1 ? std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0)) : 0.0;
  est.std_error = std::sqrt(var / n);
  for (std::uint32_t i = 0; i < locals.size(); ++i) {
    const auto [lo, hi] = confidence_interval(hits[i], s_total, cfg.alpha);
    est.lb += lo * graph.weight(locals[i]);
    est.ub += hi * graph.weight(locals[i]);
  }
  // Keep lb <= mean <= ub despite rounding in the two summation orders.
  est.lb = std::min(est.lb, est.mean);
  est.ub = std::max(est.ub, est.mean);
  est.exact = std::all_of(local_edges.begin(), local_edges.end(), [](const Local& le) { return le.p >= 1.0; });
  return est;
}

ReachTable::ReachTable(VertexId articulation, std::vector<VertexId> members)
    : articulation_(articulation), members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  successes_.assign(members_.size(), 0);
  words_per_world_ = (members_.size() + 63) / 64;
}

ReachTable ReachTable::exact(VertexId articulation, std::vector<VertexId> members, std::vector<double> probs,
                             std::uint64_t nominal_samples) {
  if (members.size() != probs.size()) throw ValidationError("probability count differs from member count");
  std::vector<std::size_t> order(members.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return members[x] < members[y]; });
  std::vector<VertexId> m;
  std::vector<double> p;
  for (auto i : order) {
    m.push_back(members[i]);
    p.push_back(probs[i]);
  }
  ReachTable t(articulation, std::move(m));
  t.exact_probs_ = std::move(p);
  t.exact_ = true;
  t.samples_ = std::max<std::uint64_t>(1, nominal_samples);
  return t;
}

std::ptrdiff_t ReachTable::index_of(VertexId v) const {
  auto it = std::lower_bound(members_.begin(), members_.end(), v);
  if (it == members_.end() || *it != v) return -1;
  return it - members_.begin();
}

std::size_t ReachTable::checked_index(VertexId v) const {
  const auto i = index_of(v);
  if (i < 0) throw ValidationError("vertex is not a member of this reach table");
  return static_cast<std::size_t>(i);
}

double ReachTable::prob_at(std::size_t i) const {
  if (exact_) return exact_probs_[i];
  if (samples_ == 0) return 0.0;
  return static_cast<double>(successes_[i]) / static_cast<double>(samples_);
}

std::pair<double, double> ReachTable::bounds_at(std::size_t i, double alpha) const {
  if (exact_) return {exact_probs_[i], exact_probs_[i]};
  if (samples_ == 0) return {0.0, 1.0};
  return confidence_interval(successes_[i], samples_, alpha);
}

double ReachTable::weighted_variance(std::span<const double> coeff) const {
  if (exact_ || samples_ < 2) return 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t s = 0; s < samples_; ++s) {
    const std::uint64_t* row = world_bits_.data() + s * words_per_world_;
    double y = 0.0;
    for (std::size_t w = 0; w < words_per_world_; ++w) {
      std::uint64_t bits = row[w];
      while (bits != 0) {
        const int b = __builtin_ctzll(bits);
        y += coeff[w * 64 + static_cast<std::size_t>(b)];
        bits &= bits - 1;
      }
    }
    sum += y;
    sum_sq += y * y;
  }
  const double n = static_cast<double>(samples_);
  return std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
}

void ReachTable::extend(const ComponentGraph& cg, std::uint64_t seed, std::uint64_t target) {
  if (exact_ || target <= samples_) return;
  if (cg.member_count() != members_.size()) throw ValidationError("component does not match reach table");
  std::uint64_t draws_per_world = 0;
  for (const auto& le : cg.edges) draws_per_world += le.p < 1.0 ? 1 : 0;

  RandomStream rng(seed);
  rng.discard(samples_ * draws_per_world);
  const std::size_t n = cg.vertices.size();
  detail::DisjointSets dsu(n);
  world_bits_.resize(target * words_per_world_, 0);
  for (std::uint64_t s = samples_; s < target; ++s) {
    dsu.reset(n);
    for (const auto& le : cg.edges) {
      if (le.p >= 1.0 || uniform01(rng) < le.p) dsu.unite(le.a, le.b);
    }
    const auto root = dsu.find(0);
    std::uint64_t* row = world_bits_.data() + s * words_per_world_;
    for (std::size_t i = 1; i < n; ++i) {
      if (dsu.find(static_cast<std::uint32_t>(i)) == root) {
        ++successes_[i - 1];
        row[(i - 1) / 64] |= std::uint64_t{1} << ((i - 1) % 64);
      }
    }
  }
  samples_ = target;
}

ReachTable mc_component_reach(const ComponentGraph& cg, std::uint64_t seed, std::uint64_t samples) {
  ReachTable t(cg.vertices.at(0), std::vector<VertexId>(cg.vertices.begin() + 1, cg.vertices.end()));
  t.extend(cg, seed, samples);
  return t;
}

ReachTable mc_component_reach(const ProbabilisticGraph& component, VertexId articulation, const SamplerConfig& cfg) {
  cfg.validate();
  if (articulation >= component.vertex_count()) throw ValidationError("articulation is not in the component");
  ComponentGraph cg;
  cg.vertices.push_back(articulation);
  std::vector<std::uint32_t> local(component.vertex_count());
  for (VertexId v = 0; v < component.vertex_count(); ++v) {
    if (v == articulation) {
      local[v] = 0;
      continue;
    }
    local[v] = static_cast<std::uint32_t>(cg.vertices.size());
    cg.vertices.push_back(v);
  }
  std::vector<std::uint64_t> words;
  for (EdgeId e = 0; e < component.edge_count(); ++e) {
    const auto& ed = component.edge(e);
    cg.edges.push_back({local[ed.u], local[ed.v], ed.probability});
    words.push_back(ed.u);
    words.push_back(ed.v);
  }
  words.push_back(articulation);
  return mc_component_reach(cg, derive_seed(cfg.master_seed, StreamPurpose::component_reach, hash_words(words)),
                            cfg.samples);
}

}  // namespace probflow
