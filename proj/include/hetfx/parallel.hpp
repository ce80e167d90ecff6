#pragma once

// Deterministic random streams and a small fork-join helper.

#include "hetfx/types.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>

namespace hetfx {

/// SplitMix64 generator. Satisfies UniformRandomBitGenerator, so it plugs into
/// the standard distributions.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Seed of stream `index` under master `seed`; distinct indices give
/// decorrelated streams, independent of the order they are requested in.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Worker count: HETFX_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
unsigned thread_count();

/// Runs body(i) for i in [0, count), splitting the range into contiguous
/// blocks across up to thread_count() threads. The first exception thrown by
/// any block is rethrown after all threads join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Completely randomized assignment with exactly n1 treated units.
IndexVector draw_assignment(Eigen::Index n, Eigen::Index n1, SplitMix64& rng);

}  // namespace hetfx
