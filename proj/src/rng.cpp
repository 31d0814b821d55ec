#include "ddlab/rng.hpp"

#include <limits>

#include "ddlab/errors.hpp"

namespace ddlab {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) {
    throw UsageError("Rng::below requires n > 0");
  }
  // Rejection keeps the draw unbiased for any n.
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = kMax - (kMax % n);
  std::uint64_t x = engine_();
  while (x >= limit) {
    x = engine_();
  }
  return x % n;
}

}  // namespace ddlab
