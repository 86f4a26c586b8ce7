#pragma once

#include <cstdint>

namespace ncer {

// Index-addressable randomness. The value at position i of stream `seed` is
//
//   counter_hash(seed, i) = mix64(mix64(seed ^ 0x243F6A8885A308D3)
//                                 + i * 0x9E3779B97F4A7C15)
//
// i.e. a SplitMix64 stream whose starting state is itself a mix of the seed.
// mix64 is the SplitMix64 finaliser (Stafford variant 13). Every operation is
// on uint64_t with wraparound, so results are identical on all platforms.

constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t i) {
  return mix64(mix64(seed ^ 0x243F6A8885A308D3ULL) + i * 0x9E3779B97F4A7C15ULL);
}

/// Top 53 bits as a double in [0, 1).
constexpr double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Seed of replica r under a root seed; independent of scheduling order.
constexpr std::uint64_t replica_seed(std::uint64_t root, std::uint64_t replica) {
  return mix64(counter_hash(root, replica) ^ 0xD1B54A32D192ED03ULL);
}

}  // namespace ncer
