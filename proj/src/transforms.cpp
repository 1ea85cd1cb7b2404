// SPDX-License-Identifier: Apache-2.0
#include "dpl/transforms.hpp"

#include <stdexcept>
#include <vector>

#include "dpl/filters.hpp"

namespace dpl {

Image crop(const Image& image, std::size_t top, std::size_t left, std::size_t size) {
  if (size == 0 || top + size > image.height() || left + size > image.width())
    throw std::invalid_argument("crop of size " + std::to_string(size) + " at (" + std::to_string(top) + "," +
                                std::to_string(left) + ") exceeds image " + std::to_string(image.height()) + "x" +
                                std::to_string(image.width()));
  std::vector<float> px(size * size * 3);
  const auto src = image.pixels();
  for (std::size_t y = 0; y < size; ++y) {
    const float* row = src.data() + ((top + y) * image.width() + left) * 3;
    std::copy(row, row + size * 3, px.begin() + static_cast<std::ptrdiff_t>(y * size * 3));
  }
  return Image(size, size, std::move(px));
}

Image random_crop(const Image& image, std::size_t size, Rng& rng) {
  if (size == 0 || size > image.height() || size > image.width())
    throw std::invalid_argument("random_crop: size " + std::to_string(size) + " exceeds image " +
                                std::to_string(image.height()) + "x" + std::to_string(image.width()));
  const auto top = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(image.height() - size)));
  const auto left = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(image.width() - size)));
  return crop(image, top, left, size);
}

AugmentDraw draw_augment(Rng& rng) {
  AugmentDraw d;
  d.flip_horizontal = rng.bernoulli(0.5);
  d.flip_vertical = rng.bernoulli(0.5);
  d.quarter_turns = static_cast<int>(rng.uniform_int(0, 3));
  return d;
}

Image apply_augment(const Image& image, const AugmentDraw& draw) {
  const std::size_t H = image.height(), W = image.width();
  const int turns = ((draw.quarter_turns % 4) + 4) % 4;
  if (turns % 2 == 1 && H != W) throw std::invalid_argument("augment: 90/270 degree rotation needs a square image");
  Image out(H, W);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      // Source coordinate after undoing rotation, then flips.
      std::size_t sy = y, sx = x;
      switch (turns) {
        case 1:  // counter-clockwise: out(y, x) = in(x, W-1-y)
          sy = x;
          sx = W - 1 - y;
          break;
        case 2:
          sy = H - 1 - y;
          sx = W - 1 - x;
          break;
        case 3:
          sy = H - 1 - x;
          sx = y;
          break;
        default:
          break;
      }
      if (draw.flip_vertical) sy = H - 1 - sy;
      if (draw.flip_horizontal) sx = W - 1 - sx;
      for (std::size_t c = 0; c < 3; ++c) out.set(y, x, c, image.at(sy, sx, c));
    }
  return out;
}

Image augment(const Image& image, Rng& rng) { return apply_augment(image, draw_augment(rng)); }

Image gaussian_blur(const Image& image, double sigma) {
  const auto taps = filters::gaussian_kernel(sigma);
  const std::size_t T = taps.size(), R = T / 2;
  const std::size_t H = image.height(), W = image.width();
  const auto rx = filters::reflect_table(W, R);
  const auto ry = filters::reflect_table(H, R);
  const auto src = image.pixels();
  std::vector<double> tmp(H * W * 3);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (std::size_t t = 0; t < T; ++t) acc += taps[t] * src[(y * W + rx[x * T + t]) * 3 + c];
        tmp[(y * W + x) * 3 + c] = acc;
      }
  std::vector<float> out(H * W * 3);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (std::size_t t = 0; t < T; ++t) acc += taps[t] * tmp[(ry[y * T + t] * W + x) * 3 + c];
        out[(y * W + x) * 3 + c] = static_cast<float>(acc);
      }
  return Image(H, W, std::move(out));
}

Image color_jitter(const Image& image, Rng& rng, Range scale, Range bias) {
  if (scale.lo > scale.hi || bias.lo > bias.hi) throw std::invalid_argument("color_jitter: empty range");
  if (scale.lo < 0.0) throw std::invalid_argument("color_jitter: scale must be non-negative");
  double s[3], b[3];
  for (int c = 0; c < 3; ++c) {
    s[c] = rng.uniform(scale.lo, scale.hi);
    b[c] = rng.uniform(bias.lo, bias.hi);
  }
  std::vector<float> out(image.pixels().begin(), image.pixels().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(s[i % 3] * out[i] + b[i % 3]);
  return Image(image.height(), image.width(), std::move(out));
}

Image to_grayscale(const Image& image) {
  std::vector<float> out(image.size());
  const auto src = image.pixels();
  for (std::size_t i = 0; i < out.size(); i += 3) {
    const double l = 0.299 * src[i] + 0.587 * src[i + 1] + 0.114 * src[i + 2];
    out[i] = out[i + 1] = out[i + 2] = static_cast<float>(l);
  }
  return Image(image.height(), image.width(), std::move(out));
}

std::string_view to_string(DistortionKind kind) noexcept {
  switch (kind) {
    case DistortionKind::gaussian_blur:
      return "gaussian_blur";
    case DistortionKind::color_jitter:
      return "color_jitter";
    case DistortionKind::grayscale:
      return "grayscale";
  }
  return "?";
}

DistortionKind parse_distortion_kind(std::string_view name) {
  if (name == "gaussian_blur") return DistortionKind::gaussian_blur;
  if (name == "color_jitter") return DistortionKind::color_jitter;
  if (name == "grayscale") return DistortionKind::grayscale;
  throw std::invalid_argument("unknown distortion '" + std::string(name) +
                              "' (expected gaussian_blur, color_jitter or grayscale)");
}

namespace {

void check_range(const char* what, Range r, Range bounds) {
  if (r.lo > r.hi) throw std::invalid_argument(std::string(what) + " range is empty");
  if (!bounds.contains(r.lo) || !bounds.contains(r.hi))
    throw std::invalid_argument(std::string(what) + " range must lie within [" + std::to_string(bounds.lo) + ", " +
                                std::to_string(bounds.hi) + "]");
}

}  // namespace

void DistortionSpec::validate() const {
  switch (kind) {
    case DistortionKind::gaussian_blur:
      check_range("blur sigma", blur_sigma, kSigmaBounds);
      break;
    case DistortionKind::color_jitter:
      check_range("jitter scale", jitter_scale, kScaleBounds);
      check_range("jitter bias", jitter_bias, kBiasBounds);
      break;
    case DistortionKind::grayscale:
      break;
  }
}

Image DistortionSpec::apply(const Image& image, Rng& rng) const {
  switch (kind) {
    case DistortionKind::gaussian_blur:
      return gaussian_blur(image, rng.uniform(blur_sigma.lo, blur_sigma.hi));
    case DistortionKind::color_jitter:
      return color_jitter(image, rng, jitter_scale, jitter_bias);
    case DistortionKind::grayscale:
      return to_grayscale(image);
  }
  return image;
}

}  // namespace dpl
