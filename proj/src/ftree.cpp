#include "probflow/ftree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "probflow/random.hpp"

namespace probflow {

namespace {

constexpr std::uint64_t kSeparator = ~std::uint64_t{0};

void insert_sorted(std::vector<VertexId>& v, VertexId x) {
  v.insert(std::lower_bound(v.begin(), v.end(), x), x);
}

// Cut vertices of the graph on `vertices` formed by `edges`, plus whether it
// is connected.
struct BlockCheck {
  bool connected = true;
  std::vector<VertexId> cut_vertices;
};

BlockCheck check_block(const ProbabilisticGraph& graph, const std::vector<VertexId>& vertices,
                       const std::vector<EdgeId>& edges) {
  const std::size_t n = vertices.size();
  std::unordered_map<VertexId, std::uint32_t> idx;
  for (std::uint32_t i = 0; i < n; ++i) idx.emplace(vertices[i], i);
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (EdgeId e : edges) {
    const auto& ed = graph.edge(e);
    auto a = idx.find(ed.u);
    auto b = idx.find(ed.v);
    if (a == idx.end() || b == idx.end()) continue;
    adj[a->second].push_back(b->second);
    adj[b->second].push_back(a->second);
  }
  BlockCheck out;
  if (n == 0) return out;
  std::vector<int> disc(n, -1), low(n, 0);
  std::vector<std::uint8_t> is_cut(n, 0);
  int timer = 0;
  // Iterative Tarjan from vertex 0.
  struct Frame {
    std::uint32_t v, parent;
    std::size_t next;
    int children;
  };
  std::vector<Frame> stack{{0, UINT32_MAX, 0, 0}};
  disc[0] = low[0] = timer++;
  while (!stack.empty()) {
    auto& f = stack.back();
    if (f.next < adj[f.v].size()) {
      const auto w = adj[f.v][f.next++];
      if (w == f.parent) continue;
      if (disc[w] >= 0) {
        low[f.v] = std::min(low[f.v], disc[w]);
      } else {
        disc[w] = low[w] = timer++;
        ++f.children;
        stack.push_back({w, f.v, 0, 0});
      }
      continue;
    }
    const Frame done = f;
    stack.pop_back();
    if (!stack.empty()) {
      auto& p = stack.back();
      low[p.v] = std::min(low[p.v], low[done.v]);
      if (p.parent != UINT32_MAX && low[done.v] >= disc[p.v]) is_cut[p.v] = 1;
    } else if (done.children > 1) {
      is_cut[done.v] = 1;
    }
  }
  out.connected = std::all_of(disc.begin(), disc.end(), [](int d) { return d >= 0; });
  for (std::uint32_t i = 0; i < n; ++i) {
    if (is_cut[i]) out.cut_vertices.push_back(vertices[i]);
  }
  return out;
}

}  // namespace

bool Component::contains(VertexId v) const {
  return std::binary_search(members.begin(), members.end(), v);
}

std::vector<std::uint64_t> component_signature(const Component& c) {
  std::vector<std::uint64_t> sig;
  sig.reserve(c.members.size() + c.internal_edges.size() + 3);
  sig.insert(sig.end(), c.members.begin(), c.members.end());
  sig.push_back(kSeparator);
  sig.push_back(c.articulation);
  sig.push_back(kSeparator);
  sig.insert(sig.end(), c.internal_edges.begin(), c.internal_edges.end());
  return sig;
}

MemoStore::Key MemoStore::key_of(const std::vector<std::uint64_t>& signature) {
  return Key(reinterpret_cast<const char*>(signature.data()), signature.size() * sizeof(std::uint64_t));
}

std::shared_ptr<const ReachTable> MemoStore::lookup(const std::vector<std::uint64_t>& signature) {
  const auto key = key_of(signature);
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    ++misses_;
    return nullptr;
  }
  order_.splice(order_.begin(), order_, it->second.second);
  ++hits_;
  return it->second.first;
}

void MemoStore::store(const std::vector<std::uint64_t>& signature, std::shared_ptr<const ReachTable> table) {
  if (capacity_ == 0) return;
  auto key = key_of(signature);
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    it->second.first = std::move(table);
    order_.splice(order_.begin(), order_, it->second.second);
    return;
  }
  order_.push_front(key);
  entries_.emplace(std::move(key), std::make_pair(std::move(table), order_.begin()));
  while (entries_.size() > capacity_) {
    entries_.erase(order_.back());
    order_.pop_back();
  }
}

std::size_t MemoStore::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::string to_string(InsertCase c) {
  switch (c) {
    case InsertCase::IIa: return "IIa";
    case InsertCase::IIb: return "IIb";
    case InsertCase::IIIa: return "IIIa";
    case InsertCase::IIIb: return "IIIb";
    case InsertCase::IVa: return "IVa";
    case InsertCase::IVb: return "IVb";
    case InsertCase::IVc_composite: return "IVc-composite";
  }
  return "?";
}

std::string case_family(InsertCase c) {
  switch (c) {
    case InsertCase::IIa:
    case InsertCase::IIb: return "II";
    case InsertCase::IIIa:
    case InsertCase::IIIb: return "III";
    default: return "IV";
  }
}

ComponentGraph make_component_graph(const ProbabilisticGraph& graph, const Component& c) {
  ComponentGraph cg;
  cg.vertices.reserve(c.members.size() + 1);
  cg.vertices.push_back(c.articulation);
  cg.vertices.insert(cg.vertices.end(), c.members.begin(), c.members.end());
  auto local = [&](VertexId v) -> std::uint32_t {
    if (v == c.articulation) return 0;
    auto it = std::lower_bound(c.members.begin(), c.members.end(), v);
    if (it == c.members.end() || *it != v) throw std::logic_error("component edge leaves the component");
    return static_cast<std::uint32_t>(it - c.members.begin()) + 1;
  };
  for (EdgeId e : c.internal_edges) {
    const auto& ed = graph.edge(e);
    cg.edges.push_back({local(ed.u), local(ed.v), ed.probability});
  }
  return cg;
}

FTree::FTree(VertexId query) : query_(query) {
  root_ = add_component(ComponentKind::mono, query);
}

ComponentId FTree::add_component(ComponentKind kind, VertexId articulation) {
  const ComponentId id = next_id_++;
  Component c;
  c.id = id;
  c.kind = kind;
  c.articulation = articulation;
  components_.emplace(id, std::move(c));
  return id;
}

std::optional<ComponentId> FTree::component_of(VertexId v) const {
  if (v == query_) return root_;
  auto it = owner_.find(v);
  if (it == owner_.end()) return std::nullopt;
  return it->second;
}

std::vector<ComponentId> FTree::component_ids() const {
  std::vector<ComponentId> ids;
  ids.reserve(components_.size());
  for (const auto& [id, c] : components_) ids.push_back(id);
  return ids;
}

std::optional<ComponentId> FTree::parent(ComponentId id) const {
  if (id == root_) return std::nullopt;
  return component_of(component(id).articulation);
}

std::vector<ComponentId> FTree::children(ComponentId id) const {
  std::vector<ComponentId> out;
  for (const auto& [cid, c] : components_) {
    if (cid != root_ && parent(cid) == id) out.push_back(cid);
  }
  return out;
}

bool FTree::has_dirty() const {
  return std::any_of(components_.begin(), components_.end(), [](const auto& kv) { return kv.second.dirty; });
}

std::optional<std::uint64_t> FTree::min_samples() const {
  std::optional<std::uint64_t> out;
  for (const auto& [id, c] : components_) {
    if (c.is_mono()) continue;
    const std::uint64_t s = c.reach ? c.reach->sample_count() : 0;
    out = out ? std::min(*out, s) : s;
  }
  return out;
}

VertexId FTree::up(VertexId v) const {
  const auto& c = component(owner_.at(v));
  return c.is_mono() ? c.links.at(v).parent : c.articulation;
}

std::optional<ComponentId> FTree::same_component(VertexId a, VertexId b) const {
  const auto ca = *component_of(a);
  const auto cb = *component_of(b);
  if (ca == cb) return ca;
  if (component(ca).articulation == b && ca != root_) return ca;
  if (component(cb).articulation == a && cb != root_) return cb;
  return std::nullopt;
}

InsertReport FTree::insert_edge(const ProbabilisticGraph& graph, EdgeId edge, const SamplingContext& ctx) {
  if (edge >= graph.edge_count()) throw ValidationError("edge id is not in the graph");
  if (selected_.count(edge) != 0) throw ValidationError("edge is already selected");
  const auto& ed = graph.edge(edge);
  const bool au = is_attached(ed.u);
  const bool av = is_attached(ed.v);
  if (!au && !av) {
    throw ValidationError("neither endpoint of edge " + graph.label(ed.u) + " " + graph.label(ed.v) +
                          " is connected to the query vertex");
  }

  InsertReport report;
  if (au != av) {
    const VertexId src = au ? ed.u : ed.v;
    const VertexId dst = au ? ed.v : ed.u;
    const ComponentId cs = *component_of(src);
    if (component(cs).is_mono()) {
      report.case_taken = InsertCase::IIa;
      auto& c = mutable_component(cs);
      insert_sorted(c.members, dst);
      c.links.emplace(dst, ParentLink{src, edge, ed.probability});
      owner_.emplace(dst, cs);
    } else {
      report.case_taken = InsertCase::IIb;
      const ComponentId id = add_component(ComponentKind::mono, src);
      auto& c = mutable_component(id);
      c.members.push_back(dst);
      c.links.emplace(dst, ParentLink{src, edge, ed.probability});
      owner_.emplace(dst, id);
    }
    selected_.insert(edge);
    return report;
  }

  if (auto same = same_component(ed.u, ed.v)) {
    auto& c = mutable_component(*same);
    if (!c.is_mono()) {
      report.case_taken = InsertCase::IIIa;
      c.internal_edges.insert(std::lower_bound(c.internal_edges.begin(), c.internal_edges.end(), edge), edge);
      c.dirty = true;
      c.reach.reset();
      selected_.insert(edge);
      resample(graph, c, ctx, report);
      return report;
    }
    return split_tree(graph, *same, ed.u, ed.v, edge, ctx);
  }
  return close_cycle(graph, ed.u, ed.v, edge, ctx, false);
}

InsertReport FTree::split_tree(const ProbabilisticGraph& graph, ComponentId mc, VertexId v_src, VertexId v_dest,
                               EdgeId edge, const SamplingContext& ctx) {
  const auto& c = component(mc);
  auto inside = [&](VertexId x) { return x == c.articulation || c.contains(x); };
  if (!c.is_mono() || !inside(v_src) || !inside(v_dest) || v_src == v_dest) {
    throw ValidationError("split_tree needs two distinct vertices of one mono component");
  }
  const auto& ed = graph.edge(edge);
  if (!((ed.u == v_src && ed.v == v_dest) || (ed.u == v_dest && ed.v == v_src))) {
    throw ValidationError("split_tree edge does not join the given vertices");
  }
  if (selected_.count(edge) != 0) throw ValidationError("edge is already selected");
  return close_cycle(graph, v_src, v_dest, edge, ctx, true);
}

// The new edge closes a cycle through the tree. Walking both endpoints
// towards Q (mono members step to their parent, bi members jump to their
// articulation) the first shared vertex is the articulation of the new
// block. Everything strictly before it on either walk, together with every
// bi component jumped through, forms the new block; mono components that
// lost vertices have their remaining members regrouped under the first
// block vertex on their old path.
InsertReport FTree::close_cycle(const ProbabilisticGraph& graph, VertexId a, VertexId b, EdgeId edge,
                                const SamplingContext& ctx, bool within_mono) {
  auto walk = [&](VertexId x) {
    std::vector<VertexId> chain{x};
    while (x != query_) {
      x = up(x);
      chain.push_back(x);
    }
    return chain;
  };
  const auto chain_a = walk(a);
  const auto chain_b = walk(b);
  std::unordered_map<VertexId, std::size_t> pos_b;
  for (std::size_t i = 0; i < chain_b.size(); ++i) pos_b.emplace(chain_b[i], i);
  std::size_t ia = 0;
  while (pos_b.count(chain_a[ia]) == 0) ++ia;
  const VertexId meet = chain_a[ia];
  const std::size_t ib = pos_b.at(meet);

  std::set<VertexId> cycle;
  std::set<ComponentId> absorbed;
  std::set<ComponentId> touched_mono;
  std::vector<EdgeId> edges{edge};
  auto take = [&](VertexId x) {
    const ComponentId cid = owner_.at(x);
    const auto& c = component(cid);
    if (c.is_mono()) {
      cycle.insert(x);
      edges.push_back(c.links.at(x).edge);
      touched_mono.insert(cid);
    } else {
      absorbed.insert(cid);
    }
  };
  for (std::size_t i = 0; i < ia; ++i) take(chain_a[i]);
  for (std::size_t i = 0; i < ib; ++i) take(chain_b[i]);
  for (ComponentId cid : absorbed) {
    const auto& c = component(cid);
    cycle.insert(c.members.begin(), c.members.end());
    edges.insert(edges.end(), c.internal_edges.begin(), c.internal_edges.end());
  }

  InsertReport report;
  if (within_mono) {
    report.case_taken = InsertCase::IIIb;
  } else {
    const ComponentId anc = *component_of(meet);
    bool other_mono = false;
    for (ComponentId cid : touched_mono) {
      if (cid == anc) {
        report.subcases.push_back(InsertCase::IVa);
      } else {
        report.subcases.push_back(InsertCase::IVc_composite);
        other_mono = true;
      }
    }
    for (std::size_t i = 0; i < absorbed.size(); ++i) report.subcases.push_back(InsertCase::IVb);
    if (touched_mono.count(anc) == 0) report.subcases.insert(report.subcases.begin(), InsertCase::IVa);
    report.case_taken = other_mono ? InsertCase::IVc_composite : absorbed.empty() ? InsertCase::IVa : InsertCase::IVb;
  }

  const ComponentId block_id = add_component(ComponentKind::bi, meet);
  {
    auto& block = mutable_component(block_id);
    block.members.assign(cycle.begin(), cycle.end());
    std::sort(edges.begin(), edges.end());
    block.internal_edges = std::move(edges);
    block.dirty = true;
  }
  for (ComponentId cid : absorbed) components_.erase(cid);
  for (VertexId x : cycle) owner_[x] = block_id;

  for (ComponentId cid : touched_mono) {
    auto& m = mutable_component(cid);
    std::vector<VertexId> rest;
    for (VertexId x : m.members) {
      if (cycle.count(x) == 0) rest.push_back(x);
    }
    for (VertexId x : cycle) m.links.erase(x);

    // First block vertex on the old path of each remaining member, or
    // nullopt when the path reaches the articulation first.
    std::unordered_map<VertexId, std::optional<VertexId>> key;
    std::function<std::optional<VertexId>(VertexId)> resolve = [&](VertexId x) -> std::optional<VertexId> {
      std::vector<VertexId> pending;
      std::optional<VertexId> result;
      VertexId cur = x;
      while (true) {
        if (auto it = key.find(cur); it != key.end()) {
          result = it->second;
          break;
        }
        const VertexId p = m.links.at(cur).parent;
        pending.push_back(cur);
        if (p == m.articulation) {
          result = std::nullopt;
          break;
        }
        if (cycle.count(p) != 0) {
          result = p;
          break;
        }
        cur = p;
      }
      for (VertexId y : pending) key[y] = result;
      return result;
    };

    std::map<VertexId, std::vector<VertexId>> groups;
    std::vector<VertexId> stay;
    for (VertexId x : rest) {
      if (auto k = resolve(x)) {
        groups[*k].push_back(x);
      } else {
        stay.push_back(x);
      }
    }
    std::map<VertexId, ParentLink> kept_links;
    for (VertexId x : stay) kept_links.emplace(x, m.links.at(x));
    std::map<VertexId, std::map<VertexId, ParentLink>> group_links;
    for (const auto& [k, vs] : groups) {
      for (VertexId x : vs) group_links[k].emplace(x, m.links.at(x));
    }
    m.members = std::move(stay);
    m.links = std::move(kept_links);
    const bool drop = m.members.empty() && cid != root_;

    for (auto& [k, vs] : groups) {
      const ComponentId oid = add_component(ComponentKind::mono, k);
      auto& o = mutable_component(oid);
      o.members = vs;
      o.links = std::move(group_links[k]);
      for (VertexId x : vs) owner_[x] = oid;
    }
    if (drop) components_.erase(cid);
  }

  selected_.insert(edge);
  report.components_resampled.push_back(block_id);
  resample(graph, mutable_component(block_id), ctx, report);
  return report;
}

void FTree::resample(const ProbabilisticGraph& graph, Component& c, const SamplingContext& ctx,
                     InsertReport& report) {
  c.dirty = true;
  c.reach.reset();
  report.edges_sampled_count += c.internal_edges.size();
  if (std::find(report.components_resampled.begin(), report.components_resampled.end(), c.id) ==
      report.components_resampled.end()) {
    report.components_resampled.push_back(c.id);
  }
  if (ctx.reach_override) {
    const auto cg = make_component_graph(graph, c);
    c.reach = std::make_shared<const ReachTable>(
        ReachTable::exact(c.articulation, c.members, ctx.reach_override(cg), ctx.sampler.samples));
    c.dirty = false;
    return;
  }
  if (ctx.memo != nullptr) {
    if (auto hit = ctx.memo->lookup(component_signature(c))) {
      c.reach = std::move(hit);
      c.dirty = false;
      report.memo_hit = true;
      return;
    }
  }
  if (ctx.defer_sampling) return;
  const auto cg = make_component_graph(graph, c);
  const auto sig = component_signature(c);
  const auto seed = derive_seed(ctx.sampler.master_seed, StreamPurpose::component_reach, hash_words(sig));
  const std::uint64_t draws_per_world = cg.edges.size();
  auto table = std::make_shared<ReachTable>(mc_component_reach(cg, seed, ctx.sampler.samples));
  report.edge_draws += draws_per_world * ctx.sampler.samples;
  c.reach = table;
  c.dirty = false;
  if (ctx.memo != nullptr) ctx.memo->store(sig, table);
}

std::uint64_t FTree::refine(const ProbabilisticGraph& graph, const SamplingContext& ctx, std::uint64_t target) {
  target = std::min(target, ctx.sampler.samples);
  std::uint64_t draws = 0;
  for (auto& [id, c] : components_) {
    if (c.is_mono()) continue;
    const std::uint64_t have = c.reach ? c.reach->sample_count() : 0;
    if (have >= target || (c.reach && c.reach->is_exact())) continue;
    const auto cg = make_component_graph(graph, c);
    const auto sig = component_signature(c);
    const auto seed = derive_seed(ctx.sampler.master_seed, StreamPurpose::component_reach, hash_words(sig));
    auto table = c.reach ? std::make_shared<ReachTable>(*c.reach)
                         : std::make_shared<ReachTable>(c.articulation, c.members);
    table->extend(cg, seed, target);
    const std::uint64_t draws_per_world = cg.edges.size();
    draws += draws_per_world * (target - have);
    c.reach = table;
    c.dirty = false;
    if (ctx.memo != nullptr && target >= ctx.sampler.samples) ctx.memo->store(sig, table);
  }
  return draws;
}

ComponentId FTree::lowest_common_ancestor(ComponentId a, ComponentId b) const {
  auto depth = [&](ComponentId c) {
    std::size_t d = 0;
    for (auto p = parent(c); p; p = parent(*p)) ++d;
    return d;
  };
  component(a);
  component(b);
  auto da = depth(a);
  auto db = depth(b);
  while (da > db) {
    a = *parent(a);
    --da;
  }
  while (db > da) {
    b = *parent(b);
    --db;
  }
  while (a != b) {
    a = *parent(a);
    b = *parent(b);
  }
  return a;
}

std::vector<VertexId> FTree::topological_vertices() const {
  std::vector<VertexId> order;
  order.reserve(owner_.size());
  std::unordered_map<VertexId, std::uint8_t> placed;
  placed.reserve(owner_.size());
  std::vector<VertexId> keys;
  keys.reserve(owner_.size());
  for (const auto& [v, cid] : owner_) keys.push_back(v);
  std::sort(keys.begin(), keys.end());
  std::vector<VertexId> pending;
  for (VertexId v : keys) {
    VertexId cur = v;
    while (cur != query_ && placed.count(cur) == 0) {
      pending.push_back(cur);
      cur = up(cur);
    }
    while (!pending.empty()) {
      order.push_back(pending.back());
      placed.emplace(pending.back(), 1);
      pending.pop_back();
    }
  }
  return order;
}

double FTree::reach_to_root(VertexId v) const {
  if (!is_attached(v)) throw ValidationError("vertex is not attached to the flow tree");
  double r = 1.0;
  while (v != query_) {
    const auto& c = component(owner_.at(v));
    if (c.is_mono()) {
      r *= c.links.at(v).probability;
    } else {
      if (c.dirty || !c.reach) throw std::logic_error("component awaits sampling");
      r *= c.reach->prob(v);
    }
    v = up(v);
  }
  return r;
}

FlowEstimate FTree::expected_flow(const ProbabilisticGraph& graph, const SamplerConfig& cfg) const {
  if (has_dirty()) throw std::logic_error("flow requested while a component awaits sampling");
  const auto order = topological_vertices();
  std::unordered_map<VertexId, double> mean, lo, hi, factor;
  mean.reserve(order.size() + 1);
  mean[query_] = lo[query_] = hi[query_] = 1.0;

  FlowEstimate out;
  out.exact = true;
  std::optional<std::uint64_t> min_s;
  for (const auto& [id, c] : components_) {
    if (c.is_mono() || c.reach->is_exact()) continue;
    out.exact = false;
    min_s = min_s ? std::min(*min_s, c.reach->sample_count()) : c.reach->sample_count();
  }
  out.samples_used = min_s.value_or(cfg.samples);

  out.mean = out.lb = out.ub = graph.weight(query_);
  for (VertexId v : order) {
    const auto& c = component(owner_.at(v));
    const VertexId p = up(v);
    double f, fl, fh;
    if (c.is_mono()) {
      f = fl = fh = c.links.at(v).probability;
    } else {
      const auto i = static_cast<std::size_t>(c.reach->index_of(v));
      f = c.reach->prob_at(i);
      std::tie(fl, fh) = c.reach->bounds_at(i, cfg.alpha);
    }
    factor[v] = f;
    mean[v] = f * mean[p];
    lo[v] = fl * lo[p];
    hi[v] = fh * hi[p];
    const double w = graph.weight(v);
    out.mean += mean[v] * w;
    out.lb += lo[v] * w;
    out.ub += hi[v] * w;
  }

  // Delta method: flow is linear in each table's probabilities given the
  // others, so each sampled block adds reach(AV)^2 * Var(sum_i I_i c_i) / S.
  std::unordered_map<VertexId, double> collected;
  collected.reserve(order.size() + 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const VertexId v = *it;
    collected[v] += graph.weight(v);
    collected[up(v)] += factor[v] * collected[v];
  }
  double var = 0.0;
  for (const auto& [id, c] : components_) {
    if (c.is_mono() || c.reach->is_exact() || c.reach->sample_count() < 2) continue;
    std::vector<double> coeff(c.members.size());
    for (std::size_t i = 0; i < c.members.size(); ++i) coeff[i] = collected[c.members[i]];
    const double r = mean[c.articulation];
    var += r * r * c.reach->weighted_variance(coeff) / static_cast<double>(c.reach->sample_count());
  }
  out.std_error = std::sqrt(var);
  out.lb = std::min(out.lb, out.mean);
  out.ub = std::max(out.ub, out.mean);
  return out;
}

std::vector<std::string> FTree::validate(const ProbabilisticGraph& graph) const {
  std::vector<std::string> errs;
  auto fail = [&](ComponentId id, const std::string& what) {
    errs.push_back("component " + std::to_string(id) + ": " + what);
  };

  const auto rit = components_.find(root_);
  if (rit == components_.end()) {
    errs.push_back("root component missing");
    return errs;
  }
  if (!rit->second.is_mono() || rit->second.articulation != query_) fail(root_, "root must be mono with AV = Q");
  if (owner_.count(query_) != 0) errs.push_back("query vertex owned by a component");

  std::size_t member_total = 0;
  std::multiset<EdgeId> edges;
  for (const auto& [id, c] : components_) {
    member_total += c.members.size();
    if (!std::is_sorted(c.members.begin(), c.members.end()) ||
        std::adjacent_find(c.members.begin(), c.members.end()) != c.members.end()) {
      fail(id, "members not strictly ascending");
    }
    if (c.contains(c.articulation)) fail(id, "articulation listed as member");
    for (VertexId v : c.members) {
      auto it = owner_.find(v);
      if (it == owner_.end() || it->second != id) fail(id, "vertex " + graph.label(v) + " owner mismatch");
    }
    if (id != root_) {
      if (c.members.empty()) fail(id, "empty non-root component");
      if (!is_attached(c.articulation)) fail(id, "articulation not attached");
    }
    if (c.is_mono()) {
      if (c.links.size() != c.members.size()) fail(id, "link count differs from member count");
      for (const auto& [v, link] : c.links) {
        if (!c.contains(v)) {
          fail(id, "link for non-member");
          continue;
        }
        if (link.parent != c.articulation && !c.contains(link.parent)) fail(id, "link leaves the component");
        const auto& ed = graph.edge(link.edge);
        if (!((ed.u == v && ed.v == link.parent) || (ed.v == v && ed.u == link.parent))) {
          fail(id, "link edge does not join its endpoints");
        }
        if (ed.probability != link.probability) fail(id, "link probability differs from the graph");
        edges.insert(link.edge);
      }
      for (VertexId v : c.members) {
        VertexId cur = v;
        std::size_t steps = 0;
        while (cur != c.articulation && steps <= c.members.size()) {
          auto it = c.links.find(cur);
          if (it == c.links.end()) break;
          cur = it->second.parent;
          ++steps;
        }
        if (cur != c.articulation) fail(id, "member " + graph.label(v) + " has no tree path to the articulation");
      }
    } else {
      if (c.members.size() + 1 < 3) fail(id, "bi component with fewer than three vertices");
      if (c.dirty) fail(id, "dirty");
      std::vector<VertexId> verts{c.articulation};
      verts.insert(verts.end(), c.members.begin(), c.members.end());
      for (EdgeId e : c.internal_edges) {
        const auto& ed = graph.edge(e);
        const bool in_u = ed.u == c.articulation || c.contains(ed.u);
        const bool in_v = ed.v == c.articulation || c.contains(ed.v);
        if (!in_u || !in_v) fail(id, "internal edge leaves the component");
        edges.insert(e);
      }
      const auto bc = check_block(graph, verts, c.internal_edges);
      if (!bc.connected) fail(id, "not connected");
      for (VertexId cut : bc.cut_vertices) fail(id, "cut vertex " + graph.label(cut));
      if (!c.reach) {
        fail(id, "missing reach table");
      } else {
        const auto tm = c.reach->members();
        if (c.reach->articulation() != c.articulation || !std::equal(tm.begin(), tm.end(), c.members.begin(), c.members.end())) {
          fail(id, "reach table does not cover the members");
        }
      }
    }
  }
  if (member_total != owner_.size()) errs.push_back("vertex sets overlap or ownership is stale");

  // Component parent chains must end at the root.
  for (const auto& [id, c] : components_) {
    ComponentId cur = id;
    std::size_t steps = 0;
    while (cur != root_ && steps <= components_.size()) {
      auto p = component_of(components_.at(cur).articulation);
      if (!p || components_.count(*p) == 0) break;
      cur = *p;
      ++steps;
    }
    if (cur != root_) fail(id, "parent chain does not reach the root");
  }

  const std::set<EdgeId> distinct(edges.begin(), edges.end());
  if (distinct.size() != edges.size()) errs.push_back("edge held by more than one component");
  if (distinct != selected_) errs.push_back("component edges differ from the selected edges");
  return errs;
}

std::string FTree::dump(const ProbabilisticGraph& graph) const {
  std::ostringstream os;
  for (const auto& [id, c] : components_) {
    os << id << (c.is_mono() ? " MONO" : " BI") << " AV=" << graph.label(c.articulation) << " V={";
    for (std::size_t i = 0; i < c.members.size(); ++i) os << (i ? "," : "") << graph.label(c.members[i]);
    os << "} children=[";
    const auto kids = children(id);
    for (std::size_t i = 0; i < kids.size(); ++i) os << (i ? "," : "") << kids[i];
    os << "]\n";
  }
  return os.str();
}

ProbeResult probe_edge(const FTree& tree, const ProbabilisticGraph& graph, EdgeId edge, const SamplingContext& ctx) {
  ProbeResult out{{}, {}, tree};
  out.report = out.tree.insert_edge(graph, edge, ctx);
  if (out.tree.has_dirty()) {
    out.report.edge_draws += out.tree.refine(graph, ctx, ctx.sampler.ci_batch);
  }
  out.estimate = out.tree.expected_flow(graph, ctx.sampler);
  return out;
}

}  // namespace probflow
