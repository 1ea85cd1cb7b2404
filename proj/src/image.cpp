// SPDX-License-Identifier: Apache-2.0
#include "dpl/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace dpl {

namespace {

float clamp01(float v) noexcept {
  // NaN becomes 0 so the [0,1] invariant holds unconditionally.
  if (!(v > 0.0f)) return 0.0f;
  return v < 1.0f ? v : 1.0f;
}

}  // namespace

Image::Image(std::size_t height, std::size_t width, float fill)
    : height_(height), width_(width), pixels_(height * width * kChannels, clamp01(fill)) {
  if (height == 0 || width == 0) throw std::invalid_argument("image extent must be positive");
}

Image::Image(std::size_t height, std::size_t width, std::vector<float> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height == 0 || width == 0) throw std::invalid_argument("image extent must be positive");
  if (pixels_.size() != height * width * kChannels)
    throw std::invalid_argument("image buffer has " + std::to_string(pixels_.size()) + " values, expected " +
                                std::to_string(height * width * kChannels));
  for (auto& v : pixels_) v = clamp01(v);
}

void Image::set(std::size_t y, std::size_t x, std::size_t c, float value) noexcept {
  pixels_[(y * width_ + x) * kChannels + c] = clamp01(value);
}

std::vector<double> Image::channel_means() const {
  std::vector<double> means(kChannels, 0.0);
  for (std::size_t i = 0; i < pixels_.size(); ++i) means[i % kChannels] += pixels_[i];
  const double n = static_cast<double>(height_ * width_);
  for (auto& m : means) m /= n;
  return means;
}

double Image::mean() const {
  double total = 0.0;
  for (float v : pixels_) total += v;
  return total / static_cast<double>(pixels_.size());
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const unsigned char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long read_uint(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (value > 1'000'000'000UL) throw std::runtime_error(std::string("PPM header: ") + what + " is too large");
      ++pos_;
    }
    if (pos_ == start) throw std::runtime_error(std::string("PPM header: malformed ") + what);
    return value;
  }

  std::size_t& pos() { return pos_; }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image decode_ppm(std::span<const unsigned char> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw std::runtime_error("PPM: malformed header (expected magic 'P6')");
  HeaderReader reader(bytes);
  reader.pos() = 2;
  const auto width = reader.read_uint("width");
  const auto height = reader.read_uint("height");
  const auto maxval = reader.read_uint("maxval");
  if (width == 0 || height == 0) throw std::runtime_error("PPM header: zero image extent");
  if (maxval != 255) throw std::runtime_error("PPM: unsupported maxval " + std::to_string(maxval) + " (only 255)");
  std::size_t pos = reader.pos();
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    throw std::runtime_error("PPM header: missing whitespace before pixel data");
  ++pos;
  const std::size_t expected = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - pos < expected)
    throw std::runtime_error("PPM: truncated payload, expected " + std::to_string(expected) + " bytes, found " +
                             std::to_string(bytes.size() - pos));
  std::vector<float> pixels(expected);
  for (std::size_t i = 0; i < expected; ++i) pixels[i] = static_cast<float>(bytes[pos + i]) / 255.0f;
  return Image(height, width, std::move(pixels));
}

std::vector<unsigned char> encode_ppm(const Image& image) {
  if (image.empty()) throw std::invalid_argument("PPM: cannot encode an empty image");
  const std::string header =
      "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(header.size() + image.size());
  for (float v : image.pixels())
    out.push_back(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  return out;
}

Image load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image '" + path.string() + "'");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void save_ppm(const Image& image, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write image '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing image '" + path.string() + "'");
}

Image hconcat(std::span<const Image> images) {
  if (images.empty()) throw std::invalid_argument("hconcat: no images");
  const std::size_t h = images.front().height();
  std::size_t w = 0;
  for (const auto& im : images) {
    if (im.height() != h) throw std::invalid_argument("hconcat: images must share a height");
    w += im.width();
  }
  Image out(h, w);
  std::size_t x0 = 0;
  for (const auto& im : images) {
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < im.width(); ++x)
        for (std::size_t c = 0; c < 3; ++c) out.set(y, x0 + x, c, im.at(y, x, c));
    x0 += im.width();
  }
  return out;
}

}  // namespace dpl
