#pragma once

#include <cstdint>
#include <random>

namespace dquant {

// Seeded generator used for every synthetic fixture and for stochastic GBI.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The distributions below are written out by hand because the
// standard library distributions are implementation-defined:
//   uniform01()      = (next() >> 11) * 2^-53, a double in [0, 1)
//   below(bound)     = rejection sampling on the top of the 64-bit range
//   uniform(lo, hi)  = lo + (hi - lo) * uniform01()
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dquant
