#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dpl/filters.hpp"
#include "dpl/image.hpp"
#include "dpl/image_tensor.hpp"
#include "dpl/rng.hpp"
#include "dpl/synthetic.hpp"
#include "dpl/transforms.hpp"

using namespace dpl;
namespace fs = std::filesystem;

namespace {

Image random_image(std::size_t h, std::size_t w, Rng& rng) {
  std::vector<float> px(h * w * 3);
  for (auto& v : px) v = static_cast<float>(rng.uniform());
  return Image(h, w, std::move(px));
}

Image quantized_image(std::size_t h, std::size_t w, Rng& rng) {
  std::vector<float> px(h * w * 3);
  for (auto& v : px) v = static_cast<float>(rng.uniform_int(0, 255)) / 255.0f;
  return Image(h, w, std::move(px));
}

bool in_unit_range(const Image& im) {
  return std::all_of(im.pixels().begin(), im.pixels().end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

std::vector<std::array<float, 3>> sorted_pixels(const Image& im) {
  std::vector<std::array<float, 3>> px;
  for (std::size_t y = 0; y < im.height(); ++y)
    for (std::size_t x = 0; x < im.width(); ++x) px.push_back({im.at(y, x, 0), im.at(y, x, 1), im.at(y, x, 2)});
  std::sort(px.begin(), px.end());
  return px;
}

// Reference xoshiro256++ seeded from splitmix64.
struct RefXoshiro {
  std::uint64_t s[4];
  explicit RefXoshiro(std::uint64_t seed) {
    for (auto& w : s) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t next() {
    const std::uint64_t r = rotl(s[0] + s[3], 23) + s[0];
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return r;
  }
};

// Dense 2-D Gaussian with half-sample symmetric borders.
Image dense_blur(const Image& im, double sigma) {
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k2((2 * r + 1) * (2 * r + 1));
  double total = 0;
  for (int u = -r; u <= r; ++u)
    for (int v = -r; v <= r; ++v) {
      const double w = std::exp(-(u * u + v * v) / (2 * sigma * sigma));
      k2[(u + r) * (2 * r + 1) + (v + r)] = w;
      total += w;
    }
  auto fold = [](int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    int m = ((i % period) + period) % period;
    return m < n ? m : period - 1 - m;
  };
  const int H = static_cast<int>(im.height()), W = static_cast<int>(im.width());
  std::vector<float> out(im.size());
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int u = -r; u <= r; ++u)
          for (int v = -r; v <= r; ++v)
            acc += k2[(u + r) * (2 * r + 1) + (v + r)] / total * im.at(fold(y + u, H), fold(x + v, W), c);
        out[(y * W + x) * 3 + c] = static_cast<float>(acc);
      }
  return Image(im.height(), im.width(), std::move(out));
}

double mean_abs_laplacian(const Image& im) {
  double acc = 0;
  std::size_t n = 0;
  for (std::size_t y = 1; y + 1 < im.height(); ++y)
    for (std::size_t x = 1; x + 1 < im.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        acc += std::abs(4.0 * im.at(y, x, c) - im.at(y - 1, x, c) - im.at(y + 1, x, c) - im.at(y, x - 1, c) -
                        im.at(y, x + 1, c));
        ++n;
      }
  return acc / static_cast<double>(n);
}

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dpl_unit";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("rng follows the reference xoshiro256++ stream") {
  std::uint64_t sm = 0;
  CHECK(splitmix64(sm) == 0xe220a8397b1dcdafULL);
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xdeadbeefULL}) {
    Rng rng(seed);
    RefXoshiro ref(seed);
    for (int i = 0; i < 100; ++i) CHECK(rng.next_u64() == ref.next());
  }
  Rng a(3), b(3);
  for (int i = 0; i < 50; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(5);
  for (int i = 0; i < 1000; ++i) {
    const auto v = c.uniform_int(-2, 2);
    CHECK(v >= -2);
    CHECK(v <= 2);
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("image clamps stored values") {
  Image im(1, 1, std::vector<float>{-0.5f, 0.5f, 1.5f});
  CHECK(im.at(0, 0, 0) == 0.0f);
  CHECK(im.at(0, 0, 1) == 0.5f);
  CHECK(im.at(0, 0, 2) == 1.0f);
  im.set(0, 0, 1, 2.0f);
  CHECK(im.at(0, 0, 1) == 1.0f);
  CHECK_THROWS_AS(Image(2, 2, std::vector<float>(5)), std::invalid_argument);
}

TEST_CASE("image and tensor convert losslessly") {
  Rng rng(1);
  const auto im = random_image(6, 10, rng);
  const auto t = image_to_tensor(im);
  CHECK(t.shape() == Shape{3, 6, 10});
  CHECK(t.data()[(1 * 6 + 2) * 10 + 3] == im.at(2, 3, 1));
  CHECK(tensor_to_image(t) == im);
}

TEST_CASE("ppm decoding and encoding") {
  const unsigned char red[] = {'P', '6', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n', 255, 0, 0};
  const auto im = decode_ppm(red);
  CHECK(im.height() == 1);
  CHECK(im.at(0, 0, 0) == 1.0f);
  CHECK(im.at(0, 0, 1) == 0.0f);
  CHECK(im.at(0, 0, 2) == 0.0f);
  CHECK(encode_ppm(im) == std::vector<unsigned char>(std::begin(red), std::end(red)));

  const unsigned char comment[] = {'P', '6', ' ', '#', 'x', '\n', '1', ' ', '1', ' ', '2', '5', '5', ' ', 10, 20, 30};
  CHECK(decode_ppm(comment).at(0, 0, 2) == 30.0f / 255.0f);

  CHECK_THROWS_AS(decode_ppm(std::span(red, sizeof red - 1)), std::runtime_error);
  const unsigned char p3[] = {'P', '3', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n', 1, 2, 3};
  CHECK_THROWS_AS(decode_ppm(p3), std::runtime_error);
  const unsigned char deep[] = {'P', '6', '\n', '1', ' ', '1', '\n', '6', '5', '5', '3', '5', '\n', 0, 1, 0, 1, 0, 1};
  CHECK_THROWS_AS(decode_ppm(deep), std::runtime_error);
  const unsigned char bad_header[] = {'P', '6', '\n', 'x', ' ', '1', '\n', '2', '5', '5', '\n', 1, 2, 3};
  CHECK_THROWS_AS(decode_ppm(bad_header), std::runtime_error);
}

TEST_CASE("ppm file round trips") {
  Rng rng(2);
  const auto q = quantized_image(7, 5, rng);
  const auto path = temp_path("q.ppm");
  save_ppm(q, path);
  CHECK(load_ppm(path) == q);

  const auto any = random_image(4, 9, rng);
  save_ppm(any, path);
  const auto back = load_ppm(path);
  for (std::size_t i = 0; i < any.size(); ++i) CHECK(std::abs(back.pixels()[i] - any.pixels()[i]) <= 0.5f / 255.0f + 1e-7f);
  save_ppm(back, path);
  CHECK(load_ppm(path) == back);

  CHECK_THROWS(load_ppm(temp_path("missing.ppm")));
}

TEST_CASE("random_crop") {
  Rng rng(3);
  const auto im = random_image(16, 16, rng);
  CHECK(random_crop(im, 16, rng) == im);
  CHECK_THROWS_AS(random_crop(im, 17, rng), std::invalid_argument);

  const Image flat(20, 24, 0.3f);
  for (int i = 0; i < 20; ++i) {
    const auto c = random_crop(flat, 7, rng);
    CHECK(std::all_of(c.pixels().begin(), c.pixels().end(), [](float v) { return v == 0.3f; }));
  }

  // Pixel values encode their own coordinates, so a crop reveals its offset.
  std::vector<float> px(64 * 64 * 3);
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) {
      px[(y * 64 + x) * 3 + 0] = static_cast<float>(x) / 63.0f;
      px[(y * 64 + x) * 3 + 1] = static_cast<float>(y) / 63.0f;
    }
  const Image coords(64, 64, std::move(px));
  std::array<bool, 33> seen_x{}, seen_y{};
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_crop(coords, 32, rng);
    const auto ox = static_cast<std::size_t>(std::lround(c.at(0, 0, 0) * 63.0f));
    const auto oy = static_cast<std::size_t>(std::lround(c.at(0, 0, 1) * 63.0f));
    REQUIRE(ox <= 32);
    REQUIRE(oy <= 32);
    seen_x[ox] = seen_y[oy] = true;
  }
  CHECK(seen_x[0]);
  CHECK(seen_x[32]);
  CHECK(seen_y[0]);
  CHECK(seen_y[32]);
}

TEST_CASE("random_crop never leaves the image") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto h = static_cast<std::size_t>(rng.uniform_int(1, 12));
    const auto w = static_cast<std::size_t>(rng.uniform_int(1, 12));
    const auto im = random_image(h, w, rng);
    const auto s = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(std::min(h, w))));
    const auto c = random_crop(im, s, rng);
    CHECK(c.height() == s);
    CHECK(c.width() == s);
  }
}

TEST_CASE("augment") {
  Rng rng(5);
  const auto im = random_image(9, 9, rng);
  CHECK(apply_augment(im, {}) == im);
  const AugmentDraw half{false, false, 2};
  CHECK(apply_augment(apply_augment(im, half), half) == im);
  const AugmentDraw quarter{false, false, 1};
  CHECK(apply_augment(apply_augment(apply_augment(apply_augment(im, quarter), quarter), quarter), quarter) == im);
  CHECK_THROWS_AS(apply_augment(random_image(4, 6, rng), quarter), std::invalid_argument);

  const auto ref = sorted_pixels(im);
  std::array<int, 4> turns{};
  int hflips = 0;
  for (int i = 0; i < 400; ++i) {
    Rng copy = rng;
    const auto d = draw_augment(copy);
    const auto out = augment(im, rng);
    CHECK(out == apply_augment(im, d));
    CHECK(sorted_pixels(out) == ref);
    ++turns[static_cast<std::size_t>(d.quarter_turns)];
    hflips += d.flip_horizontal;
  }
  for (int t : turns) CHECK(t > 50);
  CHECK(hflips > 150);
  CHECK(hflips < 250);
}

TEST_CASE("gaussian kernel weights sum to one") {
  for (double s = 0.5; s <= 5.0; s += 0.125) {
    const auto k = filters::gaussian_kernel(s);
    CHECK(k.size() == 2 * static_cast<std::size_t>(std::ceil(3 * s)) + 1);
    CHECK(std::abs(std::accumulate(k.begin(), k.end(), 0.0) - 1.0) <= 1e-9);
  }
  CHECK_THROWS_AS(filters::gaussian_kernel(0.0), std::invalid_argument);
  CHECK(filters::reflect_index(-1, 5) == 0);
  CHECK(filters::reflect_index(5, 5) == 4);
  CHECK(filters::reflect_index(-7, 3) == 0);
}

TEST_CASE("gaussian blur") {
  Rng rng(6);
  const Image flat(10, 12, 0.4f);
  CHECK(gaussian_blur(flat, 1.5) == flat);

  for (double sigma : {0.6, 1.0, 2.0, 3.5}) {
    CAPTURE(sigma);
    const auto im = random_image(11, 14, rng);
    const auto got = gaussian_blur(im, sigma);
    const auto want = dense_blur(im, sigma);
    double worst = 0;
    for (std::size_t i = 0; i < im.size(); ++i) worst = std::max(worst, static_cast<double>(std::abs(got.pixels()[i] - want.pixels()[i])));
    CHECK(worst <= 1e-6);
    const auto m0 = im.channel_means(), m1 = got.channel_means();
    for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(m0[c] - m1[c]) <= 1e-4);
    CHECK(in_unit_range(got));
  }
}

TEST_CASE("color jitter") {
  Rng rng(7);
  const auto im = random_image(8, 8, rng);
  CHECK(color_jitter(im, rng, {1, 1}, {0, 0}) == im);
  const auto black = color_jitter(im, rng, {0, 0}, {0, 0});
  CHECK(std::all_of(black.pixels().begin(), black.pixels().end(), [](float v) { return v == 0.0f; }));
  for (int i = 0; i < 100; ++i) CHECK(in_unit_range(color_jitter(im, rng, {0.5, 1.5}, {-0.25, 0.25})));
  CHECK_THROWS_AS(color_jitter(im, rng, {1.2, 1.0}, {0, 0}), std::invalid_argument);

  // The draw order is s_R, b_R, s_G, b_G, s_B, b_B.
  Rng copy = rng;
  const Image grey(2, 2, 0.5f);
  const auto j = color_jitter(grey, rng, {0.6, 1.4}, {-0.1, 0.1});
  for (std::size_t c = 0; c < 3; ++c) {
    const double s = copy.uniform(0.6, 1.4), b = copy.uniform(-0.1, 0.1);
    CHECK(j.at(1, 1, c) == doctest::Approx(std::clamp(s * 0.5 + b, 0.0, 1.0)).epsilon(1e-6));
  }
}

TEST_CASE("grayscale") {
  Rng rng(8);
  std::vector<float> g(5 * 5 * 3);
  for (std::size_t p = 0; p < 25; ++p) g[p * 3] = g[p * 3 + 1] = g[p * 3 + 2] = static_cast<float>(rng.uniform());
  const Image gray(5, 5, g);
  const auto same = to_grayscale(gray);
  for (std::size_t i = 0; i < gray.size(); ++i) CHECK(same.pixels()[i] == doctest::Approx(gray.pixels()[i]).epsilon(1e-6));

  const auto red = to_grayscale(Image(1, 1, std::vector<float>{1, 0, 0}));
  for (std::size_t c = 0; c < 3; ++c) CHECK(red.at(0, 0, c) == doctest::Approx(0.299).epsilon(1e-6));
  const auto im = random_image(6, 6, rng);
  CHECK(to_grayscale(to_grayscale(im)) == to_grayscale(im));
}

TEST_CASE("distortion specs") {
  DistortionSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.jitter_scale = {0.4, 1.0};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.jitter_bias = {0.1, -0.1};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  CHECK(parse_distortion_kind("gaussian_blur") == DistortionKind::gaussian_blur);
  CHECK(to_string(DistortionKind::grayscale) == "grayscale");
  CHECK_THROWS_AS(parse_distortion_kind("sepia"), std::invalid_argument);

  Rng rng(9);
  const auto im = random_image(16, 16, rng);
  DistortionSpec blur{DistortionKind::gaussian_blur, {2, 2}, {1, 1}, {0, 0}};
  CHECK(blur.apply(im, rng) == gaussian_blur(im, 2.0));
  DistortionSpec gray{DistortionKind::grayscale, {1, 2}, {1, 1}, {0, 0}};
  CHECK(gray.apply(im, rng) == to_grayscale(im));
}

TEST_CASE("synthetic pairs") {
  for (auto task : {Task::darken, Task::colorcast, Task::blur}) {
    CAPTURE(to_string(task));
    Rng a(10), b(10);
    const auto p1 = generate_pairs(task, 12, 24, a);
    const auto p2 = generate_pairs(task, 12, 24, b);
    REQUIRE(p1.size() == 12);
    for (std::size_t i = 0; i < p1.size(); ++i) {
      CHECK(p1[i].x == p2[i].x);
      CHECK(p1[i].y == p2[i].y);
      CHECK(p1[i].x.height() == 24);
      CHECK(in_unit_range(p1[i].x));
      CHECK(in_unit_range(p1[i].y));
      CHECK_FALSE(p1[i].x == p1[i].y);
    }
  }
  Rng rng(11);
  for (const auto& p : generate_pairs(Task::darken, 200, 16, rng)) CHECK(p.x.mean() < p.y.mean());
  for (const auto& p : generate_pairs(Task::blur, 20, 32, rng))
    CHECK(mean_abs_laplacian(p.x) < mean_abs_laplacian(p.y));
  CHECK_THROWS_AS(generate_pairs(Task::darken, 1, 8, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate_pairs(Task::textures, 1, 16, rng), std::invalid_argument);
  CHECK(parse_task("colorcast") == Task::colorcast);
  CHECK_THROWS_AS(parse_task("denoise"), std::invalid_argument);
}

TEST_CASE("synthetic textures are separable by class") {
  Rng rng(12);
  const auto train = generate_textures(500, 16, rng);
  const auto test = generate_textures(200, 16, rng);
  for (std::size_t i = 0; i < train.size(); ++i) CHECK(train[i].label == static_cast<int>(i % 10));

  // Nearest class centroid on colour- and shift-invariant structure
  // statistics of the normalized luminance.
  auto stats = [](const Image& im) {
    const std::size_t h = im.height(), w = im.width();
    std::vector<double> g(h * w);
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const float* p = &im.pixels()[i * 3];
      g[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
      mean += g[i] / static_cast<double>(g.size());
    }
    for (auto v : g) var += (v - mean) * (v - mean) / static_cast<double>(g.size());
    const double sd = std::sqrt(var) + 1e-6;
    for (auto& v : g) v = (v - mean) / sd;
    auto corr = [&](int dy, int dx) {
      double s = 0;
      std::size_t n = 0;
      for (std::size_t y = 0; y + std::abs(dy) < h; ++y)
        for (std::size_t x = 2; x + 2 < w; ++x) {
          const auto xx = static_cast<std::size_t>(static_cast<long>(x) + dx);
          if (xx >= w) continue;
          s += g[y * w + x] * g[(y + std::abs(dy)) * w + xx];
          ++n;
        }
      return s / static_cast<double>(n);
    };
    std::vector<double> f;
    for (int lag : {1, 2, 4}) {
      const double cx = corr(0, lag), cy = corr(lag, 0), d1 = corr(lag, lag), d2 = corr(lag, -lag);
      f.push_back(cx + cy);
      f.push_back(std::abs(cx - cy));
      f.push_back(d1 + d2);
      f.push_back(std::abs(d1 - d2));
    }
    return f;
  };
  std::vector<std::vector<double>> centroid(10);
  std::vector<int> count(10, 0);
  for (const auto& s : train) {
    const auto f = stats(s.image);
    if (centroid[s.label].empty()) centroid[s.label].assign(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) centroid[s.label][i] += f[i];
    ++count[s.label];
  }
  for (int c = 0; c < 10; ++c)
    for (auto& v : centroid[c]) v /= count[c];
  int correct = 0;
  for (const auto& s : test) {
    const auto f = stats(s.image);
    int best = 0;
    double best_d = 1e300;
    for (int c = 0; c < 10; ++c) {
      double d = 0;
      for (std::size_t i = 0; i < f.size(); ++i) d += (f[i] - centroid[c][i]) * (f[i] - centroid[c][i]);
      if (d < best_d) best_d = d, best = c;
    }
    correct += best == s.label;
  }
  MESSAGE("structure-statistics centroid accuracy " << static_cast<double>(correct) / static_cast<double>(test.size()));
  CHECK(static_cast<double>(correct) / static_cast<double>(test.size()) > 0.2);

  Rng a(13), b(13);
  const auto t1 = generate_textures(20, 16, a), t2 = generate_textures(20, 16, b);
  for (std::size_t i = 0; i < t1.size(); ++i) CHECK(t1[i].image == t2[i].image);
}

TEST_CASE("hconcat") {
  const Image a(2, 3, 0.1f), b(2, 1, 0.9f);
  const Image parts[] = {a, b};
  const auto h = hconcat(parts);
  CHECK(h.width() == 4);
  CHECK(h.at(1, 3, 2) == 0.9f);
  CHECK(h.at(1, 2, 0) == 0.1f);
  const Image bad[] = {a, Image(3, 1)};
  CHECK_THROWS_AS(hconcat(bad), std::invalid_argument);
}
