#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace grec {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent substreams from a root
// seed and a path of stream identifiers.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix_seed(root);
  for (auto p : path) s = mix_seed(s ^ mix_seed(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Fixed subsystem ids for derive_seed.
enum class Stream : std::uint64_t {
  kInit = 1,
  kShuffle = 2,
  kMask = 3,
  kSplit = 4,
  kSynth = 5,
};

inline std::uint64_t derive_seed(std::uint64_t root, Stream stream,
                                 std::uint64_t a = 0, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  return derive_seed(root, {static_cast<std::uint64_t>(stream), a, b, c});
}

template <typename T>
T truncated_normal(Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, 1.0);
  double z = 0.0;
  do {
    z = dist(rng);
  } while (z < -2.0 || z > 2.0);
  return static_cast<T>(z * stddev);
}

}  // namespace grec
