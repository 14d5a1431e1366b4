#pragma once

// Seeded random streams with platform-independent draws. Standard library
// distributions are implementation-defined, so draws are derived from raw
// mt19937_64 output directly.

#include <cmath>
#include <cstdint>
#include <random>

namespace rcs {

class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on {0, ..., n-1}; n must be positive.
  std::size_t index(std::size_t n) {
    const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
};

/// Stream identifiers, so adding a consumer never shifts another's draws.
enum class RngStream : std::uint64_t {
  Arrivals = 1,
  Targets = 2,
  Randomization = 3,
  Storage = 4,
};

inline Rng make_rng(std::uint64_t seed, RngStream stream) {
  return Rng(seed, static_cast<std::uint64_t>(stream));
}

}  // namespace rcs
