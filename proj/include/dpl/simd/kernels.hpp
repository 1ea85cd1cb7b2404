// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel inner loops shared by the tensor ops. Every kernel has a
// scalar reference implementation; wider variants are selected once at
// runtime from what the CPU reports. Set DPL_SIMD=scalar|avx2|neon to force a
// backend (unknown or unavailable names fall back to auto-detection).

#include <cstddef>
#include <span>
#include <string_view>

namespace dpl::simd {

enum class Backend { scalar, avx2, neon };

template <typename T>
struct KernelTable {
  // sum_i a[i] * b[i]
  T (*dot)(const T* a, const T* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
  // out[i] = a[i] + b[i] / a[i] - b[i] / a[i] * b[i]
  void (*add)(const T* a, const T* b, T* out, std::size_t n);
  void (*sub)(const T* a, const T* b, T* out, std::size_t n);
  void (*mul)(const T* a, const T* b, T* out, std::size_t n);
  // out[i] = max(x[i], 0)
  void (*relu)(const T* x, T* out, std::size_t n);
  // gx[i] += x[i] > 0 ? gy[i] : 0
  void (*relu_backward)(const T* x, const T* gy, T* gx, std::size_t n);
  T (*sum)(const T* x, std::size_t n);
  // sum_i (a[i] - b[i])^2
  T (*squared_distance)(const T* a, const T* b, std::size_t n);
};

const KernelTable<float>& scalar_table_f32() noexcept;
const KernelTable<double>& scalar_table_f64() noexcept;
#if defined(DPL_HAVE_AVX2)
const KernelTable<float>& avx2_table_f32() noexcept;
const KernelTable<double>& avx2_table_f64() noexcept;
#endif
#if defined(DPL_HAVE_NEON)
const KernelTable<float>& neon_table_f32() noexcept;
const KernelTable<double>& neon_table_f64() noexcept;
#endif

/// True when the backend was compiled in and the running CPU supports it.
bool backend_available(Backend backend) noexcept;

Backend active_backend() noexcept;

/// Switches every subsequent kernel call to `backend`. Throws
/// std::invalid_argument when the backend is unavailable. Not thread-safe
/// with respect to concurrent kernel calls; intended for tests and startup.
void set_backend(Backend backend);

std::string_view backend_name(Backend backend) noexcept;

const KernelTable<float>& table_f32() noexcept;
const KernelTable<double>& table_f64() noexcept;

template <typename T>
const KernelTable<T>& kernels() noexcept;

template <>
inline const KernelTable<float>& kernels<float>() noexcept {
  return table_f32();
}

template <>
inline const KernelTable<double>& kernels<double>() noexcept {
  return table_f64();
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) noexcept {
  return kernels<T>().dot(a.data(), b.data(), a.size());
}

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) noexcept {
  kernels<T>().axpy(alpha, x.data(), y.data(), x.size());
}

template <typename T>
T sum(std::span<const T> x) noexcept {
  return kernels<T>().sum(x.data(), x.size());
}

}  // namespace dpl::simd
