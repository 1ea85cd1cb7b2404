// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace dpl::filters {

/// Normalized 1-D Gaussian taps for offsets -radius..radius.
std::vector<double> gaussian_kernel(double sigma, std::size_t radius);

/// Taps with radius ceil(3 sigma). Throws std::invalid_argument for sigma <= 0.
std::vector<double> gaussian_kernel(double sigma);

/// Maps any integer position onto [0, n) by half-sample symmetric reflection
/// (... c b a | a b c ... ), folding repeatedly when the offset exceeds n.
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  const auto sn = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(m < sn ? m : period - 1 - m);
}

/// Index table: row o holds reflect_index(o + t - radius) for each tap t.
std::vector<std::size_t> reflect_table(std::size_t n, std::size_t radius);

}  // namespace dpl::filters
