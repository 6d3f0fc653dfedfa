#pragma once

#include <cstdint>
#include <random>

namespace dissect {

// Substream purposes. Every random draw in the project flows from one
// experiment seed through make_stream(seed, purpose, ...) so that runs are
// reproducible and batch composition is independent of the strategy in use.
enum class RngStream : std::uint64_t {
  kConcepts = 1,
  kMixing = 2,
  kJitter = 3,
  kNoise = 4,
  kWeightInit = 5,
  kShuffle = 6,
  kSelection = 7,
  kCoreset = 8,
  kDiagnostics = 9,
};

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent engine keyed by (seed, stream, a, b). The counters let the
// trainer derive per-epoch / per-batch streams without carrying state.
inline std::mt19937_64 make_stream(std::uint64_t seed, RngStream stream, std::uint64_t a = 0,
                                   std::uint64_t b = 0) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ static_cast<std::uint64_t>(stream));
  k = mix64(k ^ a);
  k = mix64(k ^ b);
  return std::mt19937_64(k);
}

}  // namespace dissect
