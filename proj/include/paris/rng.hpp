#pragma once

// Seed derivation and draws that give the same numbers on every standard
// library (std:: distributions are implementation-defined).

#include <cmath>
#include <cstdint>
#include <random>

namespace paris::rng {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream seed for (seed, a, b).
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xD6E8FEB86659FD93ULL));
}

inline double uniform01(std::mt19937_64& g) noexcept {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) noexcept {
  return lo + (hi - lo) * uniform01(g);
}

// Box-Muller, one draw per call.
inline double normal(std::mt19937_64& g, double mean, double sd) noexcept {
  const double u1 = 1.0 - uniform01(g);  // (0, 1]
  const double u2 = uniform01(g);
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace paris::rng
