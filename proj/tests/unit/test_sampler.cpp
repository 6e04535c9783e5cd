#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "probflow/oracle.hpp"
#include "probflow/sampler.hpp"
#include "test_graphs.hpp"

using namespace probflow;
using namespace probflow::testing;

namespace {

SamplerConfig cfg_with(std::uint64_t samples, std::uint64_t seed = 0) {
  SamplerConfig c;
  c.samples = samples;
  c.master_seed = seed;
  return c;
}

ComponentGraph triangle_component(double p = 0.5) {
  ComponentGraph cg;
  cg.vertices = {0, 1, 2};
  cg.edges = {{0, 1, p}, {1, 2, p}, {0, 2, p}};
  return cg;
}

}  // namespace

TEST(SamplerConfig, Validation) {
  EXPECT_NO_THROW(SamplerConfig{}.validate());
  EXPECT_THROW(cfg_with(0).validate(), ValidationError);
  SamplerConfig bad;
  bad.alpha = 1.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad.alpha = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(SamplerStats, NormalQuantileAgainstTables) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-9);
  EXPECT_NEAR(normal_quantile(0.995), 2.5758293035489, 1e-9);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-12);
  EXPECT_NEAR(normal_quantile(1e-10), -6.361340902404, 1e-8);
  EXPECT_NEAR(normal_quantile(0.3), -normal_quantile(0.7), 1e-12);
  EXPECT_TRUE(std::isinf(normal_quantile(0.0)));
  EXPECT_THROW(normal_quantile(1.5), ValidationError);
  EXPECT_NEAR(two_sided_z(0.01), 2.5758293035489, 1e-9);
}

TEST(SamplerStats, NormalQuantileInvertsErfc) {
  for (double p = 0.001; p < 1.0; p += 0.0137) {
    const double z = normal_quantile(p);
    EXPECT_NEAR(0.5 * std::erfc(-z / std::sqrt(2.0)), p, 1e-12);
  }
}

TEST(SamplerStats, WaldIntervalWorkedValue) {
  const auto [lo, hi] = confidence_interval(50, 100, 0.01);
  EXPECT_NEAR(lo, 0.3712, 1e-3);
  EXPECT_NEAR(hi, 0.6288, 1e-3);
}

TEST(SamplerStats, DegenerateIntervals) {
  EXPECT_EQ(confidence_interval(100, 100, 0.01), std::make_pair(1.0, 1.0));
  EXPECT_EQ(confidence_interval(0, 100, 0.01), std::make_pair(0.0, 0.0));
  const auto [lo, hi] = confidence_interval(1, 2, 0.01);
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, 1.0);
  EXPECT_THROW(confidence_interval(3, 2, 0.01), ValidationError);
  EXPECT_THROW(confidence_interval(0, 0, 0.01), ValidationError);
}

TEST(SamplerStats, IntervalShrinksWithSamples) {
  const auto [a_lo, a_hi] = confidence_interval(30, 100, 0.05);
  const auto [b_lo, b_hi] = confidence_interval(120, 400, 0.05);
  EXPECT_NEAR((b_hi - b_lo) * 2.0, a_hi - a_lo, 1e-12);
}

TEST(SamplerWorlds, CertainEdgesAlwaysPresent) {
  const auto g = make_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  RandomStream rng(5);
  for (int i = 0; i < 10; ++i) {
    const auto w = sample_world(g, rng);
    EXPECT_TRUE(w.has(0) && w.has(1));
  }
}

TEST(SamplerWorlds, FairCoinFrequency) {
  const auto g = make_graph(2, {{0, 1, 0.5}});
  RandomStream rng(77);
  int present = 0;
  for (int i = 0; i < 10000; ++i) present += sample_world(g, rng).has(0);
  EXPECT_NEAR(present, 5000, 150);
}

TEST(SamplerWorlds, SeededStreamsRepeat) {
  const auto g = make_graph(4, {{0, 1, 0.3}, {1, 2, 0.6}, {2, 3, 0.5}});
  RandomStream a(9), b(9);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_world(g, a).present, sample_world(g, b).present);
}

TEST(SamplerWorlds, ReachableSet) {
  const auto g = make_graph(3, {{0, 1, 0.5}, {1, 2, 0.5}});
  EXPECT_EQ(reachable_set(make_world(g, std::vector<EdgeId>{0, 1}), 0), (std::vector<VertexId>{0, 1, 2}));
  EXPECT_EQ(reachable_set(make_world(g, std::vector<EdgeId>{0}), 0), (std::vector<VertexId>{0, 1}));
  EXPECT_EQ(reachable_set(make_world(g, std::vector<EdgeId>{}), 0), (std::vector<VertexId>{0}));
}

TEST(SamplerFlow, DeterministicGraphIsExact) {
  const auto g = make_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}}, {2, 3, 4});
  const auto est = mc_expected_flow(g, 0, cfg_with(10));
  EXPECT_EQ(est.mean, 9.0);
  EXPECT_EQ(est.lb, 9.0);
  EXPECT_EQ(est.ub, 9.0);
  EXPECT_TRUE(est.exact);
}

TEST(SamplerFlow, PathEstimate) {
  const auto g = make_graph(3, {{0, 1, 0.5}, {1, 2, 0.5}}, {0, 1, 1});
  const auto est = mc_expected_flow(g, 0, cfg_with(10000, 4));
  EXPECT_NEAR(est.mean, 0.75, 0.03);
  EXPECT_LE(est.lb, est.mean);
  EXPECT_GE(est.ub, est.mean);
  EXPECT_EQ(est.samples_used, 10000u);
}

TEST(SamplerFlow, SingleSampleIsOneWorld) {
  const auto g = make_graph(3, {{0, 1, 0.5}, {1, 2, 0.5}}, {0, 1, 1});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double m = mc_expected_flow(g, 0, cfg_with(1, seed)).mean;
    EXPECT_TRUE(m == 0.0 || m == 1.0 || m == 2.0);
  }
}

TEST(SamplerFlow, SameConfigSameEstimate) {
  const auto g = make_graph(4, {{0, 1, 0.3}, {1, 2, 0.6}, {2, 3, 0.5}, {0, 3, 0.2}});
  const auto a = mc_expected_flow(g, 0, cfg_with(500, 3));
  const auto b = mc_expected_flow(g, 0, cfg_with(500, 3));
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.lb, b.lb);
  EXPECT_EQ(a.std_error, b.std_error);
  const std::vector<EdgeId> fwd{0, 1, 2}, rev{2, 1, 0};
  EXPECT_EQ(mc_expected_flow(g, 0, fwd, cfg_with(500)).mean, mc_expected_flow(g, 0, rev, cfg_with(500)).mean);
}

TEST(SamplerFlow, UnbiasedOverRepeatedRuns) {
  std::mt19937_64 rng(1);
  const auto g = random_connected(6, 9, rng);
  const double exact = oracle::exact_expected_flow(g, 0);
  const int runs = 200;
  double sum = 0, sum_sq = 0;
  for (int r = 0; r < runs; ++r) {
    const double m = mc_expected_flow(g, 0, cfg_with(1000, r)).mean;
    sum += m;
    sum_sq += m * m;
  }
  const double mean = sum / runs;
  const double sd = std::sqrt((sum_sq - sum * sum / runs) / (runs - 1));
  EXPECT_LT(std::abs(mean - exact), 4 * sd / std::sqrt(runs));
}

TEST(SamplerComponent, TriangleReach) {
  const auto t = mc_component_reach(triangle_component(), 12345, 100000);
  EXPECT_NEAR(t.prob(1), 0.625, 0.005);
  EXPECT_NEAR(t.prob(2), 0.625, 0.005);
  EXPECT_EQ(t.sample_count(), 100000u);
  EXPECT_EQ(t.index_of(0), -1);
}

TEST(SamplerComponent, SingleEdgeAndCertainEdges) {
  ComponentGraph one;
  one.vertices = {4, 9};
  one.edges = {{0, 1, 0.7}};
  EXPECT_NEAR(mc_component_reach(one, 1, 20000).prob(9), 0.7, 0.015);
  const auto sure = mc_component_reach(triangle_component(1.0), 1, 50);
  EXPECT_EQ(sure.prob(1), 1.0);
  EXPECT_EQ(sure.prob(2), 1.0);
}

TEST(SamplerComponent, ExtendingReproducesOneShotTable) {
  const auto cg = triangle_component(0.4);
  const auto whole = mc_component_reach(cg, 99, 1000);
  ReachTable parts(0, {1, 2});
  for (std::uint64_t s : {30u, 100u, 555u, 1000u}) parts.extend(cg, 99, s);
  EXPECT_EQ(parts.successes_at(0), whole.successes_at(0));
  EXPECT_EQ(parts.successes_at(1), whole.successes_at(1));
  const std::vector<double> coeff{1.0, 2.0};
  EXPECT_EQ(parts.weighted_variance(coeff), whole.weighted_variance(coeff));
}

TEST(SamplerComponent, WholeGraphOverload) {
  const auto g = make_graph(3, {{0, 1, 0.5}, {1, 2, 0.5}, {0, 2, 0.5}});
  const auto t = mc_component_reach(g, 0, cfg_with(50000, 2));
  EXPECT_NEAR(t.prob(1), 0.625, 0.01);
  EXPECT_EQ(t.articulation(), 0u);
}

TEST(SamplerComponent, ExactTable) {
  const auto t = ReachTable::exact(0, {5, 3}, {0.2, 0.9}, 1000);
  EXPECT_TRUE(t.is_exact());
  EXPECT_EQ(t.prob(3), 0.9);
  EXPECT_EQ(t.bounds_at(0, 0.01), std::make_pair(0.9, 0.9));
  EXPECT_THROW((void)t.prob(7), ValidationError);
}
