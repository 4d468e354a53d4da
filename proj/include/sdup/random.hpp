#pragma once

#include <cstdint>
#include <limits>

namespace sdup {

// SplitMix64 finalizer. Used for seed derivation and for counter-based draws.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b));
}

template <class... Rest>
constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b, Rest... rest) noexcept {
  return mix64(mix64(a, b), static_cast<std::uint64_t>(rest)...);
}

// Maps 64 random bits to [0, 1) with 53 bits of precision.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Small seeded generator satisfying UniformRandomBitGenerator. Distributions
// below are hand-rolled so results do not depend on the standard library's
// (implementation-defined) distribution algorithms.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

template <class Rng>
double uniform01(Rng& rng) {
  return to_unit(static_cast<std::uint64_t>(rng()));
}

template <class Rng>
double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Unbiased integer in [0, bound) by rejection on 64-bit draws.
template <class Rng>
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const auto draw = static_cast<std::uint64_t>(rng());
    if (draw < limit) return draw % bound;
  }
}

template <class Rng>
bool bernoulli(Rng& rng, double p) {
  return uniform01(rng) < p;
}

}  // namespace sdup
