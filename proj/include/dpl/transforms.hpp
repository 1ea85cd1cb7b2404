// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "dpl/image.hpp"
#include "dpl/rng.hpp"

namespace dpl {

/// Closed interval [lo, hi].
struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  bool operator==(const Range&) const = default;
};

/// size x size crop at a uniformly drawn offset.
Image random_crop(const Image& image, std::size_t size, Rng& rng);
Image crop(const Image& image, std::size_t top, std::size_t left, std::size_t size);

/// Flip/rotation draw, so that paired images can receive the same transform.
struct AugmentDraw {
  bool flip_horizontal = false;
  bool flip_vertical = false;
  int quarter_turns = 0;  // counter-clockwise, 0..3

  bool identity() const noexcept { return !flip_horizontal && !flip_vertical && quarter_turns == 0; }
};

AugmentDraw draw_augment(Rng& rng);
/// Horizontal flip, then vertical flip, then rotation.
Image apply_augment(const Image& image, const AugmentDraw& draw);
/// 50% horizontal flip, 50% vertical flip, rotation by a uniform multiple of 90 degrees.
Image augment(const Image& image, Rng& rng);

Image gaussian_blur(const Image& image, double sigma);

/// Per channel c: v' = clamp(s_c * v + b_c) with s_c ~ U(scale), b_c ~ U(bias),
/// drawn in the order s_R, b_R, s_G, b_G, s_B, b_B.
Image color_jitter(const Image& image, Rng& rng, Range scale, Range bias);

/// BT.601 luma replicated into all three channels.
Image to_grayscale(const Image& image);

enum class DistortionKind { gaussian_blur, color_jitter, grayscale };

std::string_view to_string(DistortionKind kind) noexcept;
DistortionKind parse_distortion_kind(std::string_view name);

/// A task-specific distortion with its parameter ranges.
struct DistortionSpec {
  static constexpr Range kScaleBounds{0.5, 1.5};
  static constexpr Range kBiasBounds{-0.25, 0.25};
  static constexpr Range kSigmaBounds{0.1, 10.0};

  DistortionKind kind = DistortionKind::color_jitter;
  Range blur_sigma{1.0, 2.0};
  Range jitter_scale{0.6, 1.4};
  Range jitter_bias{-0.1, 0.1};

  /// Throws std::invalid_argument when a range is inverted or leaves its bounds.
  void validate() const;
  Image apply(const Image& image, Rng& rng) const;

  bool operator==(const DistortionSpec&) const = default;
};

}  // namespace dpl
