#pragma once

#include <cstdint>
#include <random>

namespace rfhydro {

/// Mixes any number of integers into one 64-bit seed (splitmix64 finalizer chain).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// Hashes a string to a seed component (FNV-1a).
std::uint64_t seed_from_string(const char* text);

/// mt19937_64 with distribution mappings done here rather than by
/// std::*_distribution, whose output is implementation specific.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Marsaglia polar method, no cached second value).
  double normal();
  bool bit() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rfhydro
