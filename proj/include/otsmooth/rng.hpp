#pragma once

#include <cstdint>
#include <random>

// Seeding scheme used across the library.
//
// Every randomized operation takes one 64-bit master seed and derives
// independent substreams from it with a counter scheme: derive_seed(master,
// tag, a, b). The tag separates modules (so a solver run and a generator run
// with the same master seed do not replay each other's draws), and a/b index
// iterations, blocks, points or permutations. Work that is split across
// threads is always partitioned into fixed-size blocks keyed by block index,
// never by worker id, so results are identical for any --threads value.

namespace otsmooth {

enum class StreamTag : std::uint64_t {
  solver = 1,
  generate = 2,
  centers = 3,
  baseline = 4,
  permutation = 5,
  dataset = 6,
  tune = 7,
};

// splitmix64 finalizer; good avalanche, cheap.
inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

inline std::uint64_t derive_seed(std::uint64_t master, StreamTag tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = mix64(master + 0x9E3779B97F4A7C15ull);
  h = mix64(h ^ (static_cast<std::uint64_t>(tag) + 0x9E3779B97F4A7C15ull));
  h = mix64(h ^ (a + 0xBF58476D1CE4E5B9ull));
  h = mix64(h ^ (b + 0x94D049BB133111EBull));
  return h;
}

// Small counter generator used for short per-point / per-permutation
// substreams where constructing a mt19937_64 would dominate the cost.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    return mix64(z);
  }
  // Uniform double in [0, 1), 53 mantissa bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  // Uniform integer in [0, n) by rejection; n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }
};

// The distribution mapping is hand-rolled because the standard library makes
// no cross-implementation guarantee about std::uniform_real_distribution's
// output sequence; the raw mt19937_64 stream itself is fully specified.
template <class Engine>
inline double unit_double(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;  // [0, 1)
}

template <class Engine>
inline double uniform_double(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * unit_double(eng);
}

// Box-Muller; consumes exactly two uniforms and yields two independent
// standard normals, keeping stream consumption easy to reason about.
template <class Engine>
inline void normal_pair(Engine& eng, double& z0, double& z1) {
  const double two_pi = 6.283185307179586476925286766559;
  double u1 = 1.0 - unit_double(eng);  // (0, 1]
  double u2 = unit_double(eng);
  double r = std::sqrt(-2.0 * std::log(u1));
  z0 = r * std::cos(two_pi * u2);
  z1 = r * std::sin(two_pi * u2);
}

}  // namespace otsmooth
