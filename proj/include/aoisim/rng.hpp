#pragma once

// Deterministic random number generation with named substreams.
//
// Every stochastic stage (device placement, fading, solver randomization,
// empirical AoI simulation) draws from its own generator whose seed is
// derived from the root seed by hashing a stream tag and index tuple.
// Reordering or parallelizing stages therefore never changes the draws
// any single stage sees.
//
// Normal variates use the trigonometric Box-Muller transform instead of
// std::normal_distribution, whose algorithm is implementation-defined.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace aoisim {

// SplitMix64 finalizer; good avalanche, cheap, stable across platforms.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d2a5b754365749ull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return mix64(seed ^ (value + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2)));
}

// Stream tags. Values are part of the determinism contract: changing them
// changes every derived seed.
enum class Stream : std::uint64_t {
  placement = 1,
  fading = 2,
  solver = 3,
  empirical = 4,
  validation = 5,
};

inline std::uint64_t derive_seed(std::uint64_t root, Stream stream,
                                 std::uint64_t index_a = 0,
                                 std::uint64_t index_b = 0) {
  std::uint64_t s = mix64(root);
  s = hash_combine(s, static_cast<std::uint64_t>(stream));
  s = hash_combine(s, index_a);
  s = hash_combine(s, index_b);
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1): 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as a log argument.
  double uniform_positive() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes exactly two uniforms per pair.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_positive();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Circularly symmetric complex normal with unit variance:
  // real and imaginary parts are independent N(0, 1/2).
  std::complex<double> complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace aoisim
