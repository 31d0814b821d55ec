#pragma once

#include <cstdint>
#include <random>

namespace ddlab {

/// Seeded random stream.
///
/// Every draw is derived from the raw 64-bit engine output rather than the
/// standard distributions, whose algorithms are implementation-defined. This
/// keeps sequences bit-identical across compilers and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace ddlab
