// SPDX-License-Identifier: Apache-2.0
#include "dpl/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dpl/filters.hpp"

namespace dpl {
namespace {

void require_same_extent(const char* what, const Image& a, const Image& b) {
  if (a.height() != b.height() || a.width() != b.width())
    throw std::invalid_argument(std::string(what) + ": image extents differ (" + std::to_string(a.height()) + "x" +
                                std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                                std::to_string(b.width()) + ")");
}

struct Plane {
  std::size_t h = 0, w = 0;
  std::vector<double> v;
};

Plane luma(const Image& img) {
  Plane p{img.height(), img.width(), std::vector<double>(img.height() * img.width())};
  const auto px = img.pixels();
  for (std::size_t i = 0; i < p.v.size(); ++i)
    p.v[i] = 0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2];
  return p;
}

Plane downsample(const Plane& p) {
  Plane out{p.h / 2, p.w / 2, {}};
  out.v.resize(out.h * out.w);
  for (std::size_t y = 0; y < out.h; ++y)
    for (std::size_t x = 0; x < out.w; ++x) {
      const std::size_t b = 2 * y * p.w + 2 * x;
      out.v[y * out.w + x] = 0.25 * (p.v[b] + p.v[b + 1] + p.v[b + p.w] + p.v[b + p.w + 1]);
    }
  return out;
}

std::vector<double> filter(const std::vector<double>& in, std::size_t h, std::size_t w, const std::vector<double>& taps) {
  const std::size_t T = taps.size(), R = T / 2;
  const auto rx = filters::reflect_table(w, R);
  const auto ry = filters::reflect_table(h, R);
  std::vector<double> tmp(h * w), out(h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < T; ++t) acc += taps[t] * in[y * w + rx[x * T + t]];
      tmp[y * w + x] = acc;
    }
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < T; ++t) acc += taps[t] * tmp[ry[y * T + t] * w + x];
      out[y * w + x] = acc;
    }
  return out;
}

struct ScaleTerms {
  double luminance;
  double contrast_structure;
};

ScaleTerms ssim_terms(const Plane& a, const Plane& b, const std::vector<double>& taps) {
  constexpr double C1 = 0.01 * 0.01;
  constexpr double C2 = 0.03 * 0.03;
  const std::size_t n = a.v.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a.v[i] * a.v[i];
    bb[i] = b.v[i] * b.v[i];
    ab[i] = a.v[i] * b.v[i];
  }
  const auto mu_a = filter(a.v, a.h, a.w, taps);
  const auto mu_b = filter(b.v, b.h, b.w, taps);
  const auto e_aa = filter(aa, a.h, a.w, taps);
  const auto e_bb = filter(bb, a.h, a.w, taps);
  const auto e_ab = filter(ab, a.h, a.w, taps);
  double l_sum = 0.0, cs_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    l_sum += (2.0 * mu_a[i] * mu_b[i] + C1) / (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + C1);
    cs_sum += (2.0 * cov + C2) / (var_a + var_b + C2);
  }
  return {l_sum / static_cast<double>(n), cs_sum / static_cast<double>(n)};
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same_extent("psnr", a, b);
  const auto pa = a.pixels(), pb = b.pixels();
  double se = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(pa.size());
  return 10.0 * std::log10(1.0 / mse);
}

double ms_ssim(const Image& a, const Image& b) {
  require_same_extent("ms_ssim", a, b);
  if (std::min(a.height(), a.width()) < 32)
    throw std::invalid_argument("ms_ssim: images must be at least 32x32 for three scales");
  constexpr double kWeights[3] = {0.0448, 0.2856, 0.3001};
  constexpr double kWeightSum = kWeights[0] + kWeights[1] + kWeights[2];
  const auto taps = filters::gaussian_kernel(1.5, 5);

  Plane pa = luma(a), pb = luma(b);
  double result = 1.0;
  for (int scale = 0; scale < 3; ++scale) {
    const auto terms = ssim_terms(pa, pb, taps);
    const double w = kWeights[scale] / kWeightSum;
    result *= std::pow(std::max(terms.contrast_structure, 0.0), w);
    if (scale == 2) {
      result *= std::pow(std::max(terms.luminance, 0.0), w);
    } else {
      pa = downsample(pa);
      pb = downsample(pb);
    }
  }
  return std::clamp(result, 0.0, 1.0);
}

double channel_mean_error(const Image& a, const Image& b) {
  require_same_extent("channel_mean_error", a, b);
  const auto ma = a.channel_means(), mb = b.channel_means();
  double err = 0.0;
  for (std::size_t c = 0; c < ma.size(); ++c) err += std::abs(ma[c] - mb[c]);
  return err / static_cast<double>(ma.size());
}

}  // namespace dpl
