#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace ptsim {

// Seeded source of every random draw in a simulation. The engine output of
// std::mt19937_64 is fixed by the standard, but the std distributions are
// not, so the transforms below are spelled out to keep logs reproducible
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Box-Muller; consumes two uniforms per call.
  double normal(double mean, double stddev);

  double exponential(double mean);

  /// Uniform index in [0, n); n must be positive.
  std::size_t index(std::size_t n);

  /// Index drawn proportionally to non-negative weights with a positive sum.
  std::size_t weighted(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
};

}  // namespace ptsim
