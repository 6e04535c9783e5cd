#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "probflow/netgen.hpp"
#include "probflow/oracle.hpp"
#include "probflow/selector.hpp"
#include "test_graphs.hpp"

using namespace probflow;
using namespace probflow::testing;

namespace {

ProbabilisticGraph star() { return make_graph(4, {{0, 1, 0.9}, {0, 2, 0.5}, {0, 3, 0.1}}, {0, 1, 1, 1}); }

StrategyConfig strategy(Variant v, std::size_t k, std::uint64_t samples = 1000, std::uint64_t seed = 0) {
  StrategyConfig c;
  c.variant = v;
  c.k = k;
  c.sampler.samples = samples;
  c.sampler.master_seed = seed;
  return c;
}

FlowEstimate est(double lb, double mean, double ub, std::uint64_t s = 100) {
  FlowEstimate e;
  e.lb = lb;
  e.mean = mean;
  e.ub = ub;
  e.samples_used = s;
  return e;
}

}  // namespace

TEST(SelectorConfig, ParsesVariantsAndValidates) {
  for (Variant v : all_variants()) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("greedy"), ValidationError);
  auto c = strategy(Variant::ft, 0);
  EXPECT_THROW(c.validate(), ValidationError);
  c.k = 1;
  c.ds_c = 1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_TRUE(uses_memo(Variant::ft_m_ci_ds) && uses_ci(Variant::ft_m_ci_ds) && uses_ds(Variant::ft_m_ci_ds));
  EXPECT_FALSE(uses_memo(Variant::ft));
}

TEST(SelectorCandidates, FollowAttachedVertices) {
  const auto g = make_graph(3, {{0, 1, 0.5}, {1, 2, 0.5}});
  EXPECT_EQ(candidate_edges(g, {0}, {}), std::vector<EdgeId>{0});
  EXPECT_EQ(candidate_edges(g, {0, 1}, {0}), std::vector<EdgeId>{1});
  EXPECT_TRUE(candidate_edges(g, {0, 1, 2}, {0, 1}).empty());
  const auto s = star();
  EXPECT_EQ(candidate_edges(s, {0}, {}), (std::vector<EdgeId>{0, 1, 2}));
}

TEST(SelectorCi, PrunesDominatedCandidates) {
  EXPECT_EQ(ci_prune({{0, est(0.8, 0.85, 0.9)}, {1, est(0.1, 0.15, 0.2)}}, 30), std::vector<EdgeId>{0});
  EXPECT_EQ(ci_prune({{0, est(0.5, 0.6, 0.9)}, {1, est(0.1, 0.4, 0.6)}}, 30), (std::vector<EdgeId>{0, 1}));
  EXPECT_EQ(ci_prune({{0, est(0.8, 0.85, 0.9)}, {1, est(0.1, 0.15, 0.2, 10)}}, 30), (std::vector<EdgeId>{0, 1}));
  EXPECT_EQ(ci_prune({{0, est(0.8, 0.85, 0.9, 10)}, {1, est(0.1, 0.15, 0.2)}}, 30), (std::vector<EdgeId>{0, 1}));
  EXPECT_EQ(ci_prune({{3, est(0.5, 0.5, 0.5)}}, 30), std::vector<EdgeId>{3});
  // Equal zero-width estimates never prune each other.
  EXPECT_EQ(ci_prune({{0, est(1, 1, 1)}, {1, est(1, 1, 1)}}, 30), (std::vector<EdgeId>{0, 1}));
}

TEST(SelectorCi, ZeroWidthOracleIntervalsKeepTheArgmax) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = random_connected(6, 10, rng);
    std::vector<std::pair<EdgeId, FlowEstimate>> cands;
    EdgeId best = 0;
    double best_flow = -1;
    for (EdgeId e : all_edges(g)) {
      const std::vector<EdgeId> one{e};
      const double f = oracle::exact_expected_flow(g, 0, one);
      cands.emplace_back(e, est(f, f, f, 1000));
      if (f > best_flow) best_flow = f, best = e;
    }
    const auto keep = ci_prune(cands, 30);
    EXPECT_TRUE(std::binary_search(keep.begin(), keep.end(), best));
  }
}

TEST(SelectorDelay, WorkedValueAndEdges) {
  EXPECT_EQ(ds_delay(0.01, 10, 2.0), 9u);
  EXPECT_EQ(ds_delay(0.5, 0, 2.0), 0u);
  EXPECT_EQ(ds_delay(1.0, 1, 3.0), 0u);
  EXPECT_EQ(ds_delay(1.0, 8, 2.0), 3u);
  EXPECT_THROW(ds_delay(0.0, 1, 2.0), ValidationError);
  EXPECT_THROW(ds_delay(0.5, 1, 1.0), ValidationError);
}

TEST(SelectorGreedy, StarPicksBestSpokesExactly) {
  const auto g = star();
  const auto sol = greedy_select(g, 0, strategy(Variant::ft, 2));
  ASSERT_EQ(sol.selected.size(), 2u);
  EXPECT_EQ(sol.selected[0], *g.find_edge(0, 1));
  EXPECT_EQ(sol.selected[1], *g.find_edge(0, 2));
  EXPECT_NEAR(sol.trace[0].estimate.mean, 0.9, 1e-12);
  EXPECT_NEAR(sol.trace[1].estimate.mean, 1.4, 1e-12);
  EXPECT_EQ(sol.trace[1].edges_sampled, 0u);
  EXPECT_EQ(sol.trace[0].probes, 3u);
}

TEST(SelectorGreedy, SingleEdgeGraph) {
  const auto g = make_graph(2, {{0, 1, 0.3}});
  const auto sol = greedy_select(g, 0, strategy(Variant::ft, 1));
  EXPECT_EQ(sol.selected, std::vector<EdgeId>{0});
}

TEST(SelectorGreedy, BudgetCapsAndShortSolutions) {
  const auto g = make_graph(4, {{0, 1, 0.5}, {1, 2, 0.5}, {2, 3, 0.5}});
  EXPECT_EQ(greedy_select(g, 0, strategy(Variant::ft, 2)).selected.size(), 2u);
  EXPECT_EQ(greedy_select(g, 0, strategy(Variant::ft, 10)).selected.size(), 3u);
  const auto split = make_graph(4, {{0, 1, 0.5}, {2, 3, 0.5}});
  EXPECT_EQ(greedy_select(split, 0, strategy(Variant::ft, 5)).selected.size(), 1u);
  EXPECT_THROW(greedy_select(g, 9, strategy(Variant::ft, 1)), ValidationError);
}

TEST(SelectorGreedy, AllVariantsRespectBudgetAndStayMonotone) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 8; ++trial) {
    const auto g = random_connected(7, 11, rng);
    for (Variant v : all_variants()) {
      const auto sol = select_edges(g, 0, strategy(v, 4, 400, trial));
      EXPECT_LE(sol.selected.size(), 4u);
      EXPECT_EQ(sol.trace.size(), sol.selected.size());
      double prev = -1.0;
      std::vector<EdgeId> prefix;
      for (EdgeId e : sol.selected) {
        prefix.push_back(e);
        const double f = oracle::exact_expected_flow(g, 0, prefix);
        EXPECT_GE(f, prev - 1e-12);
        prev = f;
      }
      if (v != Variant::dijkstra) EXPECT_EQ(sol.selected.size(), 4u) << to_string(v);
    }
  }
}

TEST(SelectorGreedy, MemoDoesNotChangeTheResult) {
  const auto g = gen_erdos(40, 4, 3);
  const auto a = greedy_select(g, 0, strategy(Variant::ft, 12, 300, 5));
  const auto b = greedy_select(g, 0, strategy(Variant::ft_m, 12, 300, 5));
  EXPECT_EQ(a.selected, b.selected);
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].estimate.mean, b.trace[i].estimate.mean);
}

TEST(SelectorGreedy, CiPrunesAndKeepsQuality) {
  const auto g = gen_erdos(40, 4, 3);
  const auto base = greedy_select(g, 0, strategy(Variant::ft_m, 12, 1000, 5));
  const auto ci = greedy_select(g, 0, strategy(Variant::ft_m_ci, 12, 1000, 5));
  std::size_t pruned = 0;
  for (const auto& r : ci.trace) pruned += r.pruned;
  EXPECT_GT(pruned, 0u);
  EXPECT_GE(ci.trace.back().estimate.mean, 0.95 * base.trace.back().estimate.mean);
}

TEST(SelectorGreedy, DelayedCandidatesReturn) {
  const auto g = gen_erdos(40, 4, 8);
  const auto sol = greedy_select(g, 0, strategy(Variant::ft_m_ds, 15, 300, 2));
  std::size_t delayed = 0;
  for (const auto& r : sol.trace) {
    delayed += r.delayed;
    EXPECT_GT(r.probes, 0u);
  }
  EXPECT_EQ(sol.selected.size(), 15u);
}

TEST(SelectorGreedy, SameSeedSameSolution) {
  const auto g = gen_erdos(30, 4, 1);
  for (Variant v : {Variant::ft, Variant::ft_m_ci_ds, Variant::naive}) {
    const auto a = select_edges(g, 0, strategy(v, 8, 200, 4));
    const auto b = select_edges(g, 0, strategy(v, 8, 200, 4));
    EXPECT_EQ(a.selected, b.selected);
  }
}

TEST(SelectorGreedy, ThreadCountDoesNotChangeTheResult) {
  const auto g = gen_erdos(30, 4, 6);
  setenv("PROBFLOW_THREADS", "1", 1);
  const auto a = greedy_select(g, 0, strategy(Variant::ft_m_ci, 8, 300, 4));
  setenv("PROBFLOW_THREADS", "4", 1);
  EXPECT_EQ(worker_count(), 4u);
  const auto b = greedy_select(g, 0, strategy(Variant::ft_m_ci, 8, 300, 4));
  unsetenv("PROBFLOW_THREADS");
  EXPECT_EQ(a.selected, b.selected);
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].estimate.mean, b.trace[i].estimate.mean);
}

TEST(SelectorParallel, RethrowsWorkerErrors) {
  setenv("PROBFLOW_THREADS", "3", 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) throw ValidationError("x"); }), ValidationError);
  unsetenv("PROBFLOW_THREADS");
}

TEST(SelectorNaive, DeterministicGraphMatchesFt) {
  auto g = gen_erdos(20, 4, 2);
  g = g.with_probabilities(std::vector<double>(g.edge_count(), 1.0));
  const auto a = select_edges(g, 0, strategy(Variant::naive, 6, 50));
  const auto b = select_edges(g, 0, strategy(Variant::ft, 6, 50));
  EXPECT_EQ(a.selected, b.selected);
}

TEST(SelectorNaive, StarEstimateWithinThreeSigma) {
  const auto sol = naive_select(star(), 0, strategy(Variant::naive, 2, 10000, 3));
  ASSERT_EQ(sol.selected.size(), 2u);
  const double sigma = std::sqrt(0.9 * 0.1 / 10000 + 0.25 / 10000);
  EXPECT_NEAR(sol.trace[1].estimate.mean, 1.4, 3 * sigma);
  EXPECT_EQ(sol.trace[1].edges_sampled, 2u * 2u * 10000u);
}

TEST(SelectorDijkstra, PathOrderAndFlow) {
  const auto g = make_graph(4, {{0, 1, 0.5}, {1, 2, 0.5}, {2, 3, 0.5}}, {0, 1, 1, 1});
  const auto sol = dijkstra_select(g, 0, 3);
  EXPECT_EQ(sol.selected, (std::vector<EdgeId>{0, 1, 2}));
  EXPECT_NEAR(sol.trace.back().estimate.mean, 0.5 + 0.25 + 0.125, 1e-12);
}

TEST(SelectorDijkstra, StarSettlesByProbability) {
  const auto g = star();
  const auto sol = dijkstra_select(g, 0, 2);
  EXPECT_EQ(sol.selected, (std::vector<EdgeId>{*g.find_edge(0, 1), *g.find_edge(0, 2)}));
}

TEST(SelectorDijkstra, TriangleStaysATree) {
  const auto g = make_graph(3, {{0, 1, 0.5}, {1, 2, 0.5}, {0, 2, 0.5}}, {0, 1, 1});
  const auto sol = dijkstra_select(g, 0, 3);
  EXPECT_EQ(sol.selected.size(), 2u);
  EXPECT_NEAR(sol.trace.back().estimate.mean, 1.0, 1e-12);
  EXPECT_LT(sol.trace.back().estimate.mean, oracle::exhaustive_maxflow(g, 0, 3).flow);
}

TEST(SelectorQuality, GreedyNearOptimalOnSmallGraphs) {
  std::mt19937_64 rng(53);
  int good = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const auto g = random_connected(5 + rng() % 3, 8 + rng() % 5, rng);
    const std::size_t k = 2 + rng() % 3;
    const auto sol = greedy_select(g, 0, strategy(Variant::ft, k, 2000, trial));
    const double got = oracle::exact_expected_flow(g, 0, sol.selected);
    const double best = oracle::exhaustive_maxflow(g, 0, k).flow;
    if (got >= 0.9 * best) ++good;
  }
  EXPECT_GE(good, trials * 9 / 10);
}
