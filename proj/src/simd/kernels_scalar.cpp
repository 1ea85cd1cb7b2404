// SPDX-License-Identifier: Apache-2.0
#include "dpl/simd/kernels.hpp"

namespace dpl::simd {
namespace {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void add(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void sub(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <typename T>
void mul(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void relu(const T* x, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] <= T(0) ? T(0) : x[i];
}

template <typename T>
void relu_backward(const T* x, const T* gy, T* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > T(0)) gx[i] += gy[i];
}

template <typename T>
T sum(const T* x, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

template <typename T>
T squared_distance(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

template <typename T>
constexpr KernelTable<T> make_table() {
  return {&dot<T>, &axpy<T>, &add<T>, &sub<T>, &mul<T>, &relu<T>, &relu_backward<T>, &sum<T>,
          &squared_distance<T>};
}

constexpr KernelTable<float> kTableF32 = make_table<float>();
constexpr KernelTable<double> kTableF64 = make_table<double>();

}  // namespace

const KernelTable<float>& scalar_table_f32() noexcept { return kTableF32; }
const KernelTable<double>& scalar_table_f64() noexcept { return kTableF64; }

}  // namespace dpl::simd
