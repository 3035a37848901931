#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace kt {

// All randomness in the toolkit flows from a single root seed through named
// sub-streams, so the stream consumed by one component does not depend on
// flag order or on how many draws another component made.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seed for the named sub-stream of `root`.
inline std::uint64_t substream(std::uint64_t root, std::string_view name) {
  return splitmix64(root ^ fnv1a64(name));
}

/// Seed for the i-th member of a named sub-stream (per-student, per-fold...).
inline std::uint64_t substream(std::uint64_t root, std::string_view name,
                               std::uint64_t index) {
  return splitmix64(substream(root, name) + index);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace kt
