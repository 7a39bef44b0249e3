#pragma once

// Reproducible randomness.
//
// Every stream in the library is built from the SplitMix64 generator
// (Steele, Lea & Flood 2014). Its output function is a fixed sequence of
// 64-bit integer operations, so results are identical on every platform.
// Doubles are produced from the top 53 bits: u = (x >> 11) * 2^-53.
//
// Two flavours are used:
//   * SplitMix64: a sequential stream, one per run (action sampling).
//   * counter_uniform(key, counter): a stateless counter-based draw, used
//     where a value must be a pure function of (seed, t, arm), e.g. the
//     oblivious environments.

#include <cstdint>

namespace ftrl_bandits {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer: a bijective 64-bit mixing function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr double to_unit_double(std::uint64_t x) noexcept {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  /// Uniform in [0, 1).
  constexpr double uniform() noexcept { return to_unit_double(next()); }

  /// Uniform integer in [0, bound), bound > 0. Lemire's multiply-shift with
  /// rejection, so the result is exactly uniform.
  std::uint64_t below(std::uint64_t bound) noexcept {
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Stateless draw in [0, 1) addressed by (key, counter).
constexpr double counter_uniform(std::uint64_t key,
                                 std::uint64_t counter) noexcept {
  return to_unit_double(mix64(key ^ mix64(counter * kGoldenGamma + 1)));
}

/// Derives an independent key for a named sub-stream of `seed`.
constexpr std::uint64_t substream(std::uint64_t seed,
                                  std::uint64_t tag) noexcept {
  return mix64(seed + mix64(tag ^ 0xD1B54A32D192ED03ULL));
}

/// Seed of replication `replication` at horizon `horizon`:
///   mix64(mix64(master ^ mix64(horizon)) + replication * golden).
/// mix64 is a bijection, so for a fixed master and horizon the map is
/// injective in the replication index.
constexpr std::uint64_t replication_seed(std::uint64_t master,
                                         std::uint64_t horizon,
                                         std::uint64_t replication) noexcept {
  return mix64(mix64(master ^ mix64(horizon)) + replication * kGoldenGamma);
}

}  // namespace ftrl_bandits
