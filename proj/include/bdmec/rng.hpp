#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace bdmec {

// Deterministic draw helpers. Distribution shaping is done by hand (Box-Muller
// on top of the raw engine) so that a seed reproduces the same stream on any
// standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    // 53-bit mantissa uniform in [0, 1)
    return (engine_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  double gaussian() {
    // Box-Muller; rejects the exact-zero draw to keep the log finite.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Circularly-symmetric complex Gaussian with unit variance.
  std::complex<double> complex_gaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bdmec
