#pragma once

#include <cmath>
#include <cstdint>

namespace coordsim {

// Counter-based deterministic random stream. Every draw is a pure function
// of (seed, lane), so any event in a simulation can be replayed or audited
// in isolation and independent runs never share state. The mixer is the
// splitmix64 finalizer, which passes PractRand/BigCrush as a counter hash.

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rng_u64(std::uint64_t seed, std::uint64_t lane) {
  return mix64(seed + (lane + 1) * 0x9E3779B97F4A7C15ULL);
}

// Uniform in {0, ..., n-1} via the multiply-high trick. The modulo bias of
// 2^64 mod n is below 2^-40 for every n used here.
inline std::uint64_t uniform_index(std::uint64_t seed, std::uint64_t lane,
                                   std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng_u64(seed, lane)) * n) >> 64);
}

// Uniform double in the open interval (0,1); never 0 or 1, safe under log().
inline double unit_double(std::uint64_t seed, std::uint64_t lane) {
  return (static_cast<double>(rng_u64(seed, lane) >> 11) + 0.5) * 0x1p-53;
}

inline double exponential(std::uint64_t seed, std::uint64_t lane, double rate) {
  return -std::log(unit_double(seed, lane)) / rate;
}

} // namespace coordsim
