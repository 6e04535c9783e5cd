#pragma once

#include <string>
#include <vector>

#include "probflow/ftree.hpp"
#include "probflow/graph.hpp"

namespace probflow::testing {

// Reconstruction of the six-component example tree: root A holds {1,2,3,6},
// B is the triangle on {3,4,5}, C the 4-cycle through 6..9, D the triangle
// on {9,10,11}, F hangs 12 from 11 and E is the tree {13,14,15,16} under 9.
// The extra edges (7,17), (6,8), (14,15), (11,15) are the four insertions
// of the walkthrough. Every probability is 0.5 and W(v) = v.
struct SampleTree {
  ProbabilisticGraph graph;
  std::vector<EdgeId> build_order;

  VertexId v(const std::string& label) const { return *graph.find_vertex(label); }
  EdgeId e(const std::string& a, const std::string& b) const { return *graph.find_edge(v(a), v(b)); }
};

inline SampleTree make_sample_tree(double weight_of_1 = 1.0) {
  std::vector<std::string> labels{"Q"};
  std::vector<double> weights{0.0};
  for (int i = 1; i <= 17; ++i) {
    labels.push_back(std::to_string(i));
    weights.push_back(i);
  }
  weights[1] = weight_of_1;
  const std::vector<std::pair<int, int>> build{{0, 1},  {0, 6},   {1, 2},   {1, 3},   {3, 4},   {3, 5},   {4, 5},
                                               {6, 7},  {7, 8},   {8, 9},   {9, 6},   {9, 10},  {10, 11}, {11, 9},
                                               {11, 12}, {9, 13}, {13, 14}, {13, 15}, {15, 16}};
  const std::vector<std::pair<int, int>> extra{{7, 17}, {6, 8}, {14, 15}, {11, 15}};
  std::vector<EdgeSpec> specs;
  for (const auto& [a, b] : build) specs.push_back({VertexId(a), VertexId(b), 0.5});
  for (const auto& [a, b] : extra) specs.push_back({VertexId(a), VertexId(b), 0.5});
  SampleTree out{ProbabilisticGraph(labels, weights, specs), {}};
  for (const auto& [a, b] : build) out.build_order.push_back(*out.graph.find_edge(VertexId(a), VertexId(b)));
  return out;
}

inline FTree build_sample_tree(const SampleTree& f, const SamplingContext& ctx) {
  FTree tree(f.v("Q"));
  for (EdgeId e : f.build_order) tree.insert_edge(f.graph, e, ctx);
  return tree;
}

}  // namespace probflow::testing
