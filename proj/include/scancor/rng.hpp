#pragma once

#include <cstdint>

namespace scancor {

/// splitmix64 generator. Deterministic across platforms and standard
/// libraries, unlike the std distributions, so generated datasets are
/// reproducible byte for byte from a seed.
struct Rng {
  uint64_t state;

  explicit Rng(uint64_t seed) : state(seed) {}

  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [lo, hi], inclusive. Rejection keeps it unbiased.
  uint64_t uniform(uint64_t lo, uint64_t hi) {
    uint64_t span = hi - lo + 1;
    if (span == 0) return next();
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return lo + v % span;
  }

  /// Uniform double in [0, 1).
  double uniform_real() { return (next() >> 11) * 0x1.0p-53; }

  double uniform_real(double lo, double hi) {
    return lo + uniform_real() * (hi - lo);
  }

  /// Independent substream keyed by up to three indices. Streams for
  /// different keys do not interact, so adding one campaign to a scenario
  /// leaves the draws of every other campaign untouched.
  static Rng stream(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = mix(seed);
    s = mix(s ^ (a + 0x9e3779b97f4a7c15ULL));
    s = mix(s ^ (b + 0x2545f4914f6cdd1dULL));
    s = mix(s ^ (c + 0x27d4eb2f165667c5ULL));
    return Rng(s);
  }
};

}  // namespace scancor
