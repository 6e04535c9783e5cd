#include "probflow/selector.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <queue>
#include <thread>

namespace probflow {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void check_query(const ProbabilisticGraph& graph, VertexId q) {
  if (q >= graph.vertex_count()) throw ValidationError("query vertex is not in the graph");
}

// Candidate pool grown as vertices become attached.
class CandidatePool {
 public:
  CandidatePool(const ProbabilisticGraph& graph, VertexId q) : graph_(graph) { attach(q); }

  void attach(VertexId v) {
    if (!attached_.insert(v).second) return;
    for (const auto& inc : graph_.incident(v)) {
      if (selected_.count(inc.edge) == 0 && states_.count(inc.edge) == 0) {
        states_.emplace(inc.edge, CandidateState{inc.edge, 0, std::nullopt});
      }
    }
  }

  void commit(EdgeId e) {
    states_.erase(e);
    selected_.insert(e);
    attach(graph_.edge(e).u);
    attach(graph_.edge(e).v);
  }

  bool empty() const { return states_.empty(); }
  std::map<EdgeId, CandidateState>& states() { return states_; }

 private:
  const ProbabilisticGraph& graph_;
  std::set<VertexId> attached_;
  std::set<EdgeId> selected_;
  std::map<EdgeId, CandidateState> states_;
};

// Index of the largest mean among `idx`; earlier entries win ties.
std::size_t argmax(const std::vector<std::size_t>& idx, const std::vector<FlowEstimate>& est) {
  std::size_t best = idx.front();
  for (std::size_t i : idx) {
    if (est[i].mean > est[best].mean) best = i;
  }
  return best;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::naive: return "naive";
    case Variant::dijkstra: return "dijkstra";
    case Variant::ft: return "ft";
    case Variant::ft_m: return "ft_m";
    case Variant::ft_m_ci: return "ft_m_ci";
    case Variant::ft_m_ds: return "ft_m_ds";
    case Variant::ft_m_ci_ds: return "ft_m_ci_ds";
  }
  return "?";
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> all{Variant::naive,   Variant::dijkstra, Variant::ft,        Variant::ft_m,
                                        Variant::ft_m_ci, Variant::ft_m_ds,  Variant::ft_m_ci_ds};
  return all;
}

Variant parse_variant(const std::string& name) {
  for (Variant v : all_variants()) {
    if (to_string(v) == name) return v;
  }
  throw ValidationError("unknown variant '" + name + "'");
}

bool uses_memo(Variant v) {
  return v == Variant::ft_m || v == Variant::ft_m_ci || v == Variant::ft_m_ds || v == Variant::ft_m_ci_ds;
}
bool uses_ci(Variant v) { return v == Variant::ft_m_ci || v == Variant::ft_m_ci_ds; }
bool uses_ds(Variant v) { return v == Variant::ft_m_ds || v == Variant::ft_m_ci_ds; }

void StrategyConfig::validate() const {
  if (k < 1) throw ValidationError("budget k must be at least 1");
  if (!(ds_c > 1.0)) throw ValidationError("ds_c must be greater than 1");
  sampler.validate();
}

FlowEstimate Solution::final_estimate(const ProbabilisticGraph& graph, VertexId q) const {
  if (!trace.empty()) return trace.back().estimate;
  FlowEstimate e;
  e.mean = e.lb = e.ub = graph.weight(q);
  e.exact = true;
  return e;
}

std::vector<EdgeId> candidate_edges(const ProbabilisticGraph& graph, const std::set<VertexId>& attached,
                                    const std::set<EdgeId>& selected) {
  std::set<EdgeId> out;
  for (VertexId v : attached) {
    for (const auto& inc : graph.incident(v)) {
      if (selected.count(inc.edge) == 0) out.insert(inc.edge);
    }
  }
  return {out.begin(), out.end()};
}

std::vector<EdgeId> ci_prune(const std::vector<std::pair<EdgeId, FlowEstimate>>& candidates,
                             std::uint64_t min_samples) {
  // Best and second-best lower bound so each candidate is compared against
  // the others only.
  double lb1 = -INFINITY, lb2 = -INFINITY;
  std::size_t arg1 = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& est = candidates[i].second;
    if (est.samples_used < min_samples) continue;
    if (est.lb > lb1) {
      lb2 = lb1;
      lb1 = est.lb;
      arg1 = i;
    } else if (est.lb > lb2) {
      lb2 = est.lb;
    }
  }
  std::vector<EdgeId> keep;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& est = candidates[i].second;
    const double other = i == arg1 ? lb2 : lb1;
    if (est.samples_used >= min_samples && other > est.ub) continue;
    keep.push_back(candidates[i].first);
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

std::uint64_t ds_delay(double pot, std::uint64_t cost, double c) {
  if (!(pot > 0.0)) throw ValidationError("pot must be positive");
  if (!(c > 1.0)) throw ValidationError("delay base must exceed 1");
  if (cost == 0) return 0;
  const double x = std::log(static_cast<double>(cost) / pot) / std::log(c);
  // Guard exact powers of c against rounding just below the integer.
  const double d = std::floor(x + 1e-12);
  return d <= 0.0 ? 0 : static_cast<std::uint64_t>(d);
}

std::size_t worker_count() {
  if (const char* env = std::getenv("PROBFLOW_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && n > 0) return static_cast<std::size_t>(n);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) threads.emplace_back(run);
  run();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

Solution greedy_select(const ProbabilisticGraph& graph, VertexId q, const StrategyConfig& cfg) {
  if (cfg.variant == Variant::naive) return naive_select(graph, q, cfg);
  if (cfg.variant == Variant::dijkstra) return dijkstra_select(graph, q, cfg.k);
  cfg.validate();
  check_query(graph, q);

  MemoStore memo(cfg.memo_capacity);
  SamplingContext ctx;
  ctx.sampler = cfg.sampler;
  ctx.memo = uses_memo(cfg.variant) ? &memo : nullptr;
  ctx.defer_sampling = uses_ci(cfg.variant);
  const bool ds = uses_ds(cfg.variant);
  const std::uint64_t full = cfg.sampler.samples;

  FTree tree(q);
  CandidatePool pool(graph, q);
  Solution sol;
  for (std::size_t iter = 1; iter <= cfg.k && !pool.empty(); ++iter) {
    const auto t0 = Clock::now();
    TraceRecord rec;
    rec.iteration = iter;

    std::vector<EdgeId> eligible;
    std::vector<EdgeId> waiting;
    for (const auto& [e, st] : pool.states()) (ds && st.delay_remaining > 0 ? waiting : eligible).push_back(e);
    if (eligible.empty()) std::swap(eligible, waiting);
    for (EdgeId e : waiting) --pool.states()[e].delay_remaining;
    rec.delayed = waiting.size();

    const std::size_t n = eligible.size();
    std::vector<std::optional<ProbeResult>> probes(n);
    std::vector<FlowEstimate> est(n);
    std::vector<std::uint64_t> draws(n, 0);
    parallel_for(n, [&](std::size_t i) {
      probes[i] = probe_edge(tree, graph, eligible[i], ctx);
      est[i] = probes[i]->estimate;
      draws[i] = probes[i]->report.edge_draws;
    });
    rec.probes = n;

    std::vector<std::size_t> alive(n);
    for (std::size_t i = 0; i < n; ++i) alive[i] = i;
    if (ctx.defer_sampling) {
      while (true) {
        std::vector<std::pair<EdgeId, FlowEstimate>> view;
        for (std::size_t i : alive) view.emplace_back(eligible[i], est[i]);
        const auto keep = ci_prune(view, cfg.sampler.min_samples_for_ci);
        std::vector<std::size_t> next;
        for (std::size_t i : alive) {
          if (std::binary_search(keep.begin(), keep.end(), eligible[i])) next.push_back(i);
        }
        rec.pruned += alive.size() - next.size();
        alive = std::move(next);
        std::vector<std::size_t> grow;
        for (std::size_t i : alive) {
          if (probes[i]->tree.min_samples().value_or(full) < full) grow.push_back(i);
        }
        if (grow.empty()) break;
        parallel_for(grow.size(), [&](std::size_t j) {
          const std::size_t i = grow[j];
          auto& t = probes[i]->tree;
          draws[i] += t.refine(graph, ctx, *t.min_samples() + cfg.sampler.ci_batch);
          est[i] = t.expected_flow(graph, cfg.sampler);
        });
      }
    }

    const std::size_t w = argmax(alive, est);
    const EdgeId chosen = eligible[w];
    for (std::size_t i = 0; i < n; ++i) {
      rec.edges_sampled += draws[i];
      auto& st = pool.states()[eligible[i]];
      st.last_estimate = est[i];
      if (ds && i != w) {
        const double best = est[w].mean;
        const double pot = best > 0.0 ? std::clamp(est[i].mean / best, 1e-9, 1.0) : 1.0;
        st.delay_remaining = ds_delay(pot, probes[i]->report.edges_sampled_count, cfg.ds_c);
      }
    }

    tree = std::move(probes[w]->tree);
    pool.commit(chosen);
    sol.selected.push_back(chosen);
    rec.edge = chosen;
    rec.estimate = est[w];
    rec.elapsed_ms = ms_since(t0);
    sol.trace.push_back(rec);
  }
  return sol;
}

Solution naive_select(const ProbabilisticGraph& graph, VertexId q, const StrategyConfig& cfg) {
  cfg.validate();
  check_query(graph, q);
  CandidatePool pool(graph, q);
  Solution sol;
  for (std::size_t iter = 1; iter <= cfg.k && !pool.empty(); ++iter) {
    const auto t0 = Clock::now();
    std::vector<EdgeId> eligible;
    for (const auto& [e, st] : pool.states()) eligible.push_back(e);
    const std::size_t n = eligible.size();
    std::vector<FlowEstimate> est(n);
    parallel_for(n, [&](std::size_t i) {
      std::vector<EdgeId> edges = sol.selected;
      edges.push_back(eligible[i]);
      est[i] = mc_expected_flow(graph, q, edges, cfg.sampler);
    });
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    const std::size_t w = argmax(all, est);

    TraceRecord rec;
    rec.iteration = iter;
    rec.edge = eligible[w];
    rec.estimate = est[w];
    rec.probes = n;
    rec.edges_sampled = n * (sol.selected.size() + 1) * cfg.sampler.samples;
    pool.commit(eligible[w]);
    sol.selected.push_back(eligible[w]);
    rec.elapsed_ms = ms_since(t0);
    sol.trace.push_back(rec);
  }
  return sol;
}

Solution dijkstra_select(const ProbabilisticGraph& graph, VertexId q, std::size_t k) {
  check_query(graph, q);
  if (k < 1) throw ValidationError("budget k must be at least 1");
  const auto n = graph.vertex_count();
  std::vector<double> dist(n, INFINITY);
  std::vector<std::optional<EdgeId>> via(n);
  std::vector<std::uint8_t> settled(n, 0);
  using Item = std::pair<double, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[q] = 0.0;
  heap.emplace(0.0, q);

  FTree tree(q);
  SamplingContext ctx;
  SamplerConfig sampler;
  Solution sol;
  while (!heap.empty() && sol.selected.size() < k) {
    const auto t0 = Clock::now();
    const auto [d, v] = heap.top();
    heap.pop();
    if (settled[v]) continue;
    settled[v] = 1;
    if (via[v]) {
      const EdgeId e = *via[v];
      const auto report = tree.insert_edge(graph, e, ctx);
      TraceRecord rec;
      rec.iteration = sol.selected.size() + 1;
      rec.edge = e;
      rec.estimate = tree.expected_flow(graph, sampler);
      rec.edges_sampled = report.edge_draws;
      sol.selected.push_back(e);
      rec.elapsed_ms = ms_since(t0);
      sol.trace.push_back(rec);
    }
    for (const auto& inc : graph.incident(v)) {
      const VertexId w = inc.neighbor;
      if (settled[w]) continue;
      const double nd = d - std::log(graph.probability(inc.edge));
      // Equal distances keep the smaller edge id as the tree edge.
      if (nd < dist[w] || (nd == dist[w] && via[w] && inc.edge < *via[w])) {
        dist[w] = nd;
        via[w] = inc.edge;
        heap.emplace(nd, w);
      }
    }
  }
  return sol;
}

Solution select_edges(const ProbabilisticGraph& graph, VertexId q, const StrategyConfig& cfg) {
  switch (cfg.variant) {
    case Variant::naive: return naive_select(graph, q, cfg);
    case Variant::dijkstra:
      cfg.validate();
      return dijkstra_select(graph, q, cfg.k);
    default: return greedy_select(graph, q, cfg);
  }
}

}  // namespace probflow
