// SPDX-License-Identifier: Apache-2.0
#include "dpl/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dpl {

std::string_view to_string(Task task) noexcept {
  switch (task) {
    case Task::darken:
      return "darken";
    case Task::colorcast:
      return "colorcast";
    case Task::blur:
      return "blur";
    case Task::textures:
      return "textures";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  if (name == "darken") return Task::darken;
  if (name == "colorcast") return Task::colorcast;
  if (name == "blur") return Task::blur;
  if (name == "textures") return Task::textures;
  throw std::invalid_argument("unknown task '" + std::string(name) + "' (expected darken, colorcast, blur or textures)");
}

namespace {

using Color = std::array<double, 3>;

Color random_color(Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

double color_distance(const Color& a, const Color& b) {
  double d = 0.0;
  for (int c = 0; c < 3; ++c) d += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(d);
}

// Two colors far enough apart that the pattern stays visible.
std::pair<Color, Color> contrasting_pair(Rng& rng) {
  const Color a = random_color(rng, 0.0, 1.0);
  Color b = random_color(rng, 0.0, 1.0);
  for (int tries = 0; tries < 64 && color_distance(a, b) < 0.5; ++tries) b = random_color(rng, 0.0, 1.0);
  return {a, b};
}

double square_wave(double phase) {
  const double f = phase - std::floor(phase);
  return f < 0.5 ? 1.0 : 0.0;
}

template <typename Pattern>
Image render_pattern(std::size_t size, const Color& c0, const Color& c1, double noise, Rng& rng, Pattern&& pattern) {
  Image img(size, size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double p = std::clamp(pattern(static_cast<double>(y), static_cast<double>(x)), 0.0, 1.0);
      for (std::size_t c = 0; c < 3; ++c)
        img.set(y, x, c, static_cast<float>(c0[c] + (c1[c] - c0[c]) * p + noise * rng.normal()));
    }
  return img;
}

}  // namespace

Image procedural_texture(int label, std::size_t size, Rng& rng) {
  if (label < 0 || label >= kTextureClasses) throw std::invalid_argument("texture label out of range");
  const auto [c0, c1] = contrasting_pair(rng);
  const double n = static_cast<double>(size);
  const double noise = 0.02;
  switch (label) {
    case 0: {  // axis-aligned stripes
      const bool vertical = rng.bernoulli();
      const double period = rng.uniform(4.0, 10.0), phase = rng.uniform();
      return render_pattern(size, c0, c1, noise, rng,
                            [=](double y, double x) { return square_wave((vertical ? x : y) / period + phase); });
    }
    case 1: {  // checkerboard
      const double cell = rng.uniform(3.0, 8.0), oy = rng.uniform(0.0, cell), ox = rng.uniform(0.0, cell);
      return render_pattern(size, c0, c1, noise, rng, [=](double y, double x) {
        const auto a = static_cast<long>(std::floor((y + oy) / cell)) + static_cast<long>(std::floor((x + ox) / cell));
        return (a % 2 == 0) ? 1.0 : 0.0;
      });
    }
    case 2: {  // dots on a lattice
      const double spacing = rng.uniform(6.0, 10.0), radius = rng.uniform(1.2, 0.3 * spacing);
      const double oy = rng.uniform(0.0, spacing), ox = rng.uniform(0.0, spacing);
      return render_pattern(size, c0, c1, noise, rng, [=](double y, double x) {
        const double dy = std::fmod(y + oy, spacing) - 0.5 * spacing;
        const double dx = std::fmod(x + ox, spacing) - 0.5 * spacing;
        return std::hypot(dy, dx) <= radius ? 1.0 : 0.0;
      });
    }
    case 3: {  // radial gradient
      const double cy = rng.uniform(0.0, n), cx = rng.uniform(0.0, n), reach = n * rng.uniform(0.5, 1.0);
      return render_pattern(size, c0, c1, noise, rng,
                            [=](double y, double x) { return std::hypot(y - cy, x - cx) / reach; });
    }
    case 4: {  // linear gradient
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double dy = std::sin(angle), dx = std::cos(angle);
      return render_pattern(size, c0, c1, noise, rng, [=](double y, double x) {
        return 0.5 + ((y - 0.5 * n) * dy + (x - 0.5 * n) * dx) / (n * 1.0);
      });
    }
    case 5: {  // white noise
      std::vector<double> field(size * size);
      for (auto& v : field) v = rng.uniform();
      return render_pattern(size, c0, c1, noise, rng, [&](double y, double x) {
        return field[static_cast<std::size_t>(y) * size + static_cast<std::size_t>(x)];
      });
    }
    case 6: {  // concentric rings
      const double cy = rng.uniform(0.25 * n, 0.75 * n), cx = rng.uniform(0.25 * n, 0.75 * n);
      const double period = rng.uniform(4.0, 9.0);
      return render_pattern(size, c0, c1, noise, rng,
                            [=](double y, double x) { return square_wave(std::hypot(y - cy, x - cx) / period); });
    }
    case 7: {  // diagonal bands
      const double sign = rng.bernoulli() ? 1.0 : -1.0;
      const double period = rng.uniform(5.0, 10.0), phase = rng.uniform();
      return render_pattern(size, c0, c1, noise, rng, [=](double y, double x) {
        return square_wave((x + sign * y) / (period * std::numbers::sqrt2) + phase);
      });
    }
    case 8: {  // smooth blobs
      const int count = static_cast<int>(rng.uniform_int(3, 6));
      std::vector<std::array<double, 3>> blobs(static_cast<std::size_t>(count));
      for (auto& b : blobs) b = {rng.uniform(0.0, n), rng.uniform(0.0, n), rng.uniform(n / 10.0, n / 5.0)};
      return render_pattern(size, c0, c1, noise, rng, [&](double y, double x) {
        double v = 0.0;
        for (const auto& b : blobs) v += std::exp(-((y - b[0]) * (y - b[0]) + (x - b[1]) * (x - b[1])) / (2.0 * b[2] * b[2]));
        return v;
      });
    }
    default: {  // grid lines
      const auto spacing = static_cast<long>(rng.uniform_int(5, 9));
      const auto oy = static_cast<long>(rng.uniform_int(0, spacing - 1));
      const auto ox = static_cast<long>(rng.uniform_int(0, spacing - 1));
      return render_pattern(size, c0, c1, noise, rng, [=](double y, double x) {
        const bool on = (static_cast<long>(y) + oy) % spacing == 0 || (static_cast<long>(x) + ox) % spacing == 0;
        return on ? 1.0 : 0.0;
      });
    }
  }
}

Image procedural_scene(std::size_t size, Rng& rng) {
  const double n = static_cast<double>(size);
  const Color top = random_color(rng, 0.3, 0.9);
  const Color bottom = random_color(rng, 0.3, 0.9);
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<Color> canvas(size * size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double t = std::clamp(0.5 + ((y - 0.5 * n) * std::sin(angle) + (x - 0.5 * n) * std::cos(angle)) / n, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) canvas[y * size + x][c] = top[c] + (bottom[c] - top[c]) * t;
    }

  const int shapes = static_cast<int>(rng.uniform_int(3, 6));
  for (int s = 0; s < shapes; ++s) {
    const Color color = random_color(rng, 0.1, 1.0);
    const bool circle = rng.bernoulli();
    const double cy = rng.uniform(0.0, n), cx = rng.uniform(0.0, n);
    const double ry = rng.uniform(n / 10.0, n / 4.0), rx = circle ? ry : rng.uniform(n / 10.0, n / 4.0);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
        const bool inside = circle ? dy * dy + dx * dx <= ry * ry : std::abs(dy) <= ry && std::abs(dx) <= rx;
        if (inside) canvas[y * size + x] = color;
      }
  }

  // striped patch
  {
    const auto [c0, c1] = contrasting_pair(rng);
    const double period = rng.uniform(3.0, 6.0);
    const bool vertical = rng.bernoulli();
    const auto h = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(size / 5), static_cast<std::int64_t>(size / 3)));
    const auto w = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(size / 5), static_cast<std::int64_t>(size / 3)));
    const auto top_y = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(size - h)));
    const auto left_x = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(size - w)));
    for (std::size_t y = top_y; y < top_y + h; ++y)
      for (std::size_t x = left_x; x < left_x + w; ++x) {
        const double p = square_wave(static_cast<double>(vertical ? x : y) / period);
        for (int c = 0; c < 3; ++c) canvas[y * size + x][c] = c0[c] + (c1[c] - c0[c]) * p;
      }
  }

  Image img(size, size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.set(y, x, c, static_cast<float>(canvas[y * size + x][c]));
  return img;
}

Image degrade(Task task, const Image& target, Rng& rng) {
  switch (task) {
    case Task::darken: {
      std::vector<float> px(target.pixels().begin(), target.pixels().end());
      for (auto& v : px) v = static_cast<float>(0.2 * v + 0.02 * rng.normal());
      return Image(target.height(), target.width(), std::move(px));
    }
    case Task::colorcast: {
      const DistortionSpec defaults;
      return color_jitter(target, rng, defaults.jitter_scale, defaults.jitter_bias);
    }
    case Task::blur:
      return gaussian_blur(target, rng.uniform(1.0, 2.0));
    case Task::textures:
      break;
  }
  throw std::invalid_argument("the textures task has no paired degradation");
}

std::vector<ImagePair> generate_pairs(Task task, std::size_t count, std::size_t size, Rng& rng) {
  if (task == Task::textures) throw std::invalid_argument("generate_pairs: textures is a labeled task");
  if (size < kMinSyntheticSize)
    throw std::invalid_argument("synthetic images need size >= " + std::to_string(kMinSyntheticSize));
  std::vector<ImagePair> pairs;
  pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Image y = procedural_scene(size, rng);
    Image x = degrade(task, y, rng);
    pairs.push_back({std::move(x), std::move(y)});
  }
  return pairs;
}

std::vector<LabeledImage> generate_textures(std::size_t count, std::size_t size, Rng& rng) {
  if (size < kMinSyntheticSize)
    throw std::invalid_argument("synthetic images need size >= " + std::to_string(kMinSyntheticSize));
  std::vector<LabeledImage> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % kTextureClasses);
    out.push_back({procedural_texture(label, size, rng), label});
  }
  return out;
}

}  // namespace dpl
