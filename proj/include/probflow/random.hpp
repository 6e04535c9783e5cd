#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace probflow {

using RandomStream = std::mt19937_64;

// splitmix64 finaliser; bijective 64-bit mixing.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t value) {
  return mix64(h ^ mix64(value));
}

inline std::uint64_t hash_words(std::span<const std::uint64_t> words, std::uint64_t h = 0x51ed270b27a3c4f1ULL) {
  for (auto w : words) h = hash_combine(h, w);
  return hash_combine(h, words.size());
}

/// Purposes keep substreams drawn for different jobs independent even when
/// they share a signature.
enum class StreamPurpose : std::uint64_t {
  component_reach = 1,
  whole_graph = 2,
  generator = 3,
  probabilities = 4,
};

/// Seed of the substream identified by (master seed, purpose, signature hash).
constexpr std::uint64_t derive_seed(std::uint64_t master, StreamPurpose purpose, std::uint64_t signature) {
  return hash_combine(hash_combine(mix64(master), static_cast<std::uint64_t>(purpose)), signature);
}

/// Uniform double in [0,1) built from the top 53 bits; independent of the
/// standard library's distribution implementation.
inline double uniform01(RandomStream& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in the open interval (0,1).
inline double uniform_open01(RandomStream& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace probflow
