#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "probflow/graph.hpp"

namespace probflow {

enum class Family { erdos, partitioned, wsn };

std::string to_string(Family f);
Family parse_family(const std::string& name);

/// Integer vertex weights drawn uniformly from [min, max].
struct WeightRange {
  int min = 0;
  int max = 10;
};

struct GenSpec {
  Family family = Family::erdos;
  std::size_t n = 100;
  std::size_t degree = 6;   // erdos, partitioned
  double epsilon = 0.1;     // wsn
  std::uint64_t seed = 0;
  bool wrap = true;         // partitioned: ring when true, path otherwise
  WeightRange weights;

  void validate() const;
};

/// n*d/2 distinct uniformly chosen vertex pairs.
ProbabilisticGraph gen_erdos(std::size_t n, std::size_t d, std::uint64_t seed, WeightRange weights = {});

/// 2n/d partitions of d/2 vertices; every vertex is joined to all vertices
/// of the neighbouring partitions. With `wrap` the partitions form a ring
/// and every degree is exactly d.
ProbabilisticGraph gen_partitioned(std::size_t n, std::size_t d, std::uint64_t seed, bool wrap = true,
                                   WeightRange weights = {});

/// Random points in the unit square joined when at most epsilon apart.
/// Coordinates are attached to the graph.
ProbabilisticGraph gen_wsn(std::size_t n, double epsilon, std::uint64_t seed, WeightRange weights = {});

ProbabilisticGraph generate(const GenSpec& spec);

/// P(e) = exp(-lambda * length(e) * world_size_m). Needs coordinates.
ProbabilisticGraph assign_distance_decay(const ProbabilisticGraph& graph, double lambda = 0.001,
                                         double world_size_m = 10000.0);

/// Each vertex marks up to f random incident edges as close. Close edges get
/// P uniform in [0.5, 1], all others P uniform in (0, 0.5].
ProbabilisticGraph assign_close_friends(const ProbabilisticGraph& graph, std::size_t f, std::uint64_t seed);

}  // namespace probflow
