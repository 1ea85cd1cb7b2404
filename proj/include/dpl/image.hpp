// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace dpl {

/// RGB raster, row-major with interleaved channels, values in [0, 1].
class Image {
 public:
  static constexpr std::size_t kChannels = 3;

  Image() = default;
  Image(std::size_t height, std::size_t width, float fill = 0.0f);
  /// Takes HWC-interleaved values; anything outside [0, 1] is clamped.
  Image(std::size_t height, std::size_t width, std::vector<float> pixels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  bool empty() const noexcept { return pixels_.empty(); }
  std::size_t size() const noexcept { return pixels_.size(); }

  float at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return pixels_[(y * width_ + x) * kChannels + c];
  }
  /// Stores clamp(value, 0, 1).
  void set(std::size_t y, std::size_t x, std::size_t c, float value) noexcept;

  std::span<const float> pixels() const noexcept { return pixels_; }

  /// Per-channel mean over all pixels.
  std::vector<double> channel_means() const;
  double mean() const;

  bool operator==(const Image&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> pixels_;
};

/// Binary PPM (P6, maxval 255). Bytes map to v/255 on load; save writes
/// round(clamp(v) * 255).
Image load_ppm(const std::filesystem::path& path);
void save_ppm(const Image& image, const std::filesystem::path& path);
Image decode_ppm(std::span<const unsigned char> bytes);
std::vector<unsigned char> encode_ppm(const Image& image);

/// Images placed side by side (all must share a height).
Image hconcat(std::span<const Image> images);

}  // namespace dpl
