#pragma once

#include <cstdint>
#include <initializer_list>

namespace coopsteer {

// SplitMix64 finalizer. Used for all child-seed derivation so that seeds are
// identical on every platform and standard library.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Folds each component into the running state: s = splitmix64(s ^ c).
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (auto c : path) s = splitmix64(s ^ c);
  return s;
}

// Top 53 bits of a 64-bit draw mapped to [0, 1).
constexpr double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace coopsteer
