#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpl/rng.hpp"
#include "dpl/simd/kernels.hpp"

using namespace dpl;
using simd::Backend;
using simd::KernelTable;

namespace {

template <typename T>
std::vector<T> draw(std::size_t n, Rng& rng) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.normal());
  return v;
}

template <typename T>
std::vector<const KernelTable<T>*> wide_tables() {
  std::vector<const KernelTable<T>*> out;
#if defined(DPL_HAVE_AVX2)
  if (simd::backend_available(Backend::avx2)) {
    if constexpr (std::is_same_v<T, float>) out.push_back(&simd::avx2_table_f32());
    else out.push_back(&simd::avx2_table_f64());
  }
#endif
#if defined(DPL_HAVE_NEON)
  if (simd::backend_available(Backend::neon)) {
    if constexpr (std::is_same_v<T, float>) out.push_back(&simd::neon_table_f32());
    else out.push_back(&simd::neon_table_f64());
  }
#endif
  return out;
}

template <typename T>
const KernelTable<T>& scalar_table() {
  if constexpr (std::is_same_v<T, float>) return simd::scalar_table_f32();
  else return simd::scalar_table_f64();
}

// Reductions may reassociate, so they are compared against a long-double sum
// with a tolerance scaled by the sum of magnitudes.
template <typename T>
void check_equivalence(const KernelTable<T>& wide, double tol) {
  const auto& ref = scalar_table<T>();
  Rng rng(7);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 33u, 100u, 1001u}) {
    CAPTURE(n);
    const auto a = draw<T>(n, rng), b = draw<T>(n, rng);
    long double dot = 0, sum = 0, sq = 0, mag = 0;
    for (std::size_t i = 0; i < n; ++i) {
      dot += static_cast<long double>(a[i]) * b[i];
      sum += a[i];
      sq += static_cast<long double>(a[i] - b[i]) * (a[i] - b[i]);
      mag += std::abs(static_cast<long double>(a[i]) * b[i]) + std::abs(a[i]) + 1;
    }
    const double scale = static_cast<double>(mag) * tol;
    CHECK(std::abs(wide.dot(a.data(), b.data(), n) - static_cast<double>(dot)) <= scale);
    CHECK(std::abs(ref.dot(a.data(), b.data(), n) - static_cast<double>(dot)) <= scale);
    CHECK(std::abs(wide.sum(a.data(), n) - static_cast<double>(sum)) <= scale);
    CHECK(std::abs(wide.squared_distance(a.data(), b.data(), n) - static_cast<double>(sq)) <= 4 * scale);

    // Lane-wise kernels have no reassociation and must match bit for bit.
    std::vector<T> o1(n), o2(n);
    ref.add(a.data(), b.data(), o1.data(), n);
    wide.add(a.data(), b.data(), o2.data(), n);
    CHECK(o1 == o2);
    ref.sub(a.data(), b.data(), o1.data(), n);
    wide.sub(a.data(), b.data(), o2.data(), n);
    CHECK(o1 == o2);
    ref.mul(a.data(), b.data(), o1.data(), n);
    wide.mul(a.data(), b.data(), o2.data(), n);
    CHECK(o1 == o2);
    ref.relu(a.data(), o1.data(), n);
    wide.relu(a.data(), o2.data(), n);
    CHECK(o1 == o2);
    std::vector<T> g1(b), g2(b);
    ref.relu_backward(a.data(), b.data(), g1.data(), n);
    wide.relu_backward(a.data(), b.data(), g2.data(), n);
    CHECK(g1 == g2);

    // axpy may fuse the multiply-add; one rounding per element at most.
    std::vector<T> y1(b), y2(b);
    ref.axpy(T(0.75), a.data(), y1.data(), n);
    wide.axpy(T(0.75), a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= tol * (std::abs(y1[i]) + 1));
  }
}

}  // namespace

TEST_CASE("scalar kernels on small known inputs") {
  const auto& k = simd::scalar_table_f64();
  const double a[] = {1, 2, 3}, b[] = {4, -5, 6};
  CHECK(k.dot(a, b, 3) == 12.0);
  CHECK(k.sum(a, 3) == 6.0);
  CHECK(k.squared_distance(a, b, 3) == 9.0 + 49.0 + 9.0);
  double out[3];
  k.relu(b, out, 3);
  CHECK(out[0] == 4.0);
  CHECK(out[1] == 0.0);
  CHECK(out[2] == 6.0);
}

template <typename T>
void check_relu_propagates_nan(const KernelTable<T>& k) {
  const T nan = std::numeric_limits<T>::quiet_NaN();
  std::vector<T> x(19);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 3 == 0 ? nan : static_cast<T>(i % 2 ? -1.5 : 2.5);
  std::vector<T> out(x.size());
  k.relu(x.data(), out.data(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CAPTURE(i);
    if (i % 3 == 0) CHECK(std::isnan(out[i]));
    else CHECK(out[i] == (i % 2 ? T(0) : T(2.5)));
  }
}

TEST_CASE("relu lets NaN through on every backend") {
  check_relu_propagates_nan(scalar_table<float>());
  check_relu_propagates_nan(scalar_table<double>());
  for (const auto* t : wide_tables<float>()) check_relu_propagates_nan(*t);
  for (const auto* t : wide_tables<double>()) check_relu_propagates_nan(*t);
}

TEST_CASE("wide kernels match the scalar reference (f32)") {
  for (const auto* t : wide_tables<float>()) check_equivalence(*t, 1e-6);
}

TEST_CASE("wide kernels match the scalar reference (f64)") {
  for (const auto* t : wide_tables<double>()) check_equivalence(*t, 1e-14);
}

TEST_CASE("backend selection") {
  CHECK(simd::backend_available(Backend::scalar));
  const auto before = simd::active_backend();
  simd::set_backend(Backend::scalar);
  CHECK(simd::active_backend() == Backend::scalar);
  CHECK(&simd::table_f32() == &simd::scalar_table_f32());
  CHECK(simd::backend_name(Backend::scalar) == "scalar");
  for (auto b : {Backend::avx2, Backend::neon})
    if (!simd::backend_available(b)) CHECK_THROWS_AS(simd::set_backend(b), std::invalid_argument);
  simd::set_backend(before);
  CHECK(simd::active_backend() == before);
}
