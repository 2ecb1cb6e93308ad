#pragma once

#include <cstdint>
#include <random>

namespace rpetel {

// splitmix64 step, used to derive independent streams from a master seed.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4a68b971db677ULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix_seed(mix_seed(master) ^ mix_seed(index + 0x6a09e667f3bcc909ULL));
}

using Rng = std::mt19937_64;

}  // namespace rpetel
