// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace dpl {

/// xoshiro256++ seeded through splitmix64. The stream depends only on the
/// seed, never on the platform or standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform in [lo, hi]; returns lo exactly when lo == hi.
  double uniform(double lo, double hi) noexcept;
  /// Uniform integer in [lo, hi] (inclusive), unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  bool bernoulli(double p = 0.5) noexcept;
  /// Standard normal via Box-Muller (one variate per call).
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

  /// Independent child stream; deterministic in (this stream, tag).
  Rng split(std::uint64_t tag) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

}  // namespace dpl
