// SPDX-License-Identifier: Apache-2.0
#include "dpl/filters.hpp"

#include <cmath>
#include <stdexcept>

namespace dpl::filters {

std::vector<double> gaussian_kernel(double sigma, std::size_t radius) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian sigma must be > 0");
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (std::size_t t = 0; t < taps.size(); ++t) {
    const double d = static_cast<double>(t) - static_cast<double>(radius);
    taps[t] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += taps[t];
  }
  for (auto& w : taps) w /= total;
  return taps;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian sigma must be > 0");
  return gaussian_kernel(sigma, static_cast<std::size_t>(std::ceil(3.0 * sigma)));
}

std::vector<std::size_t> reflect_table(std::size_t n, std::size_t radius) {
  const std::size_t taps = 2 * radius + 1;
  std::vector<std::size_t> table(n * taps);
  for (std::size_t o = 0; o < n; ++o)
    for (std::size_t t = 0; t < taps; ++t)
      table[o * taps + t] = reflect_index(static_cast<std::ptrdiff_t>(o + t) - static_cast<std::ptrdiff_t>(radius), n);
  return table;
}

}  // namespace dpl::filters
