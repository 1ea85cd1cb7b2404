// SPDX-License-Identifier: Apache-2.0
//
// AArch64 Advanced SIMD variants. NEON is mandatory on AArch64, so these are
// always available when compiled in.

#include <arm_neon.h>

#include "dpl/simd/kernels.hpp"

namespace dpl::simd {
namespace {

// ---- float ---------------------------------------------------------------

float dot_f32(const float* a, const float* b, std::size_t n) {
  float32x4_t acc0 = vdupq_n_f32(0.0f);
  float32x4_t acc1 = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
    acc1 = vfmaq_f32(acc1, vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
  float acc = vaddvq_f32(vaddq_f32(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_f32(float alpha, const float* x, float* y, std::size_t n) {
  const float32x4_t va = vdupq_n_f32(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), va, vld1q_f32(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_f32(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_f32(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_f32(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void relu_f32(const float* x, float* out, std::size_t n) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t v = vld1q_f32(x + i);
    const uint32x4_t nonpositive = vcleq_f32(v, zero);
    vst1q_f32(out + i, vreinterpretq_f32_u32(vbicq_u32(vreinterpretq_u32_f32(v), nonpositive)));
  }
  for (; i < n; ++i) out[i] = x[i] <= 0.0f ? 0.0f : x[i];
}

void relu_backward_f32(const float* x, const float* gy, float* gx, std::size_t n) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const uint32x4_t mask = vcgtq_f32(vld1q_f32(x + i), zero);
    const float32x4_t g =
        vreinterpretq_f32_u32(vandq_u32(vreinterpretq_u32_f32(vld1q_f32(gy + i)), mask));
    vst1q_f32(gx + i, vaddq_f32(vld1q_f32(gx + i), g));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0f) gx[i] += gy[i];
}

float sum_f32(const float* x, std::size_t n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = vaddq_f32(acc, vld1q_f32(x + i));
  float total = vaddvq_f32(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

float squared_distance_f32(const float* a, const float* b, std::size_t n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t d = vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i));
    acc = vfmaq_f32(acc, d, d);
  }
  float total = vaddvq_f32(acc);
  for (; i < n; ++i) {
    const float d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

// ---- double --------------------------------------------------------------

double dot_f64(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  for (; i + 2 <= n; i += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_f64(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_f64(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_f64(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void relu_f64(const double* x, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(x + i);
    const uint64x2_t nonpositive = vcleq_f64(v, zero);
    vst1q_f64(out + i, vreinterpretq_f64_u64(vbicq_u64(vreinterpretq_u64_f64(v), nonpositive)));
  }
  for (; i < n; ++i) out[i] = x[i] <= 0.0 ? 0.0 : x[i];
}

void relu_backward_f64(const double* x, const double* gy, double* gx, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t mask = vcgtq_f64(vld1q_f64(x + i), zero);
    const float64x2_t g =
        vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(vld1q_f64(gy + i)), mask));
    vst1q_f64(gx + i, vaddq_f64(vld1q_f64(gx + i), g));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0) gx[i] += gy[i];
}

double sum_f64(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

double squared_distance_f64(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

constexpr KernelTable<float> kTableF32 = {&dot_f32,  &axpy_f32,          &add_f32,
                                          &sub_f32,  &mul_f32,           &relu_f32,
                                          &relu_backward_f32, &sum_f32, &squared_distance_f32};
constexpr KernelTable<double> kTableF64 = {&dot_f64,  &axpy_f64,          &add_f64,
                                           &sub_f64,  &mul_f64,           &relu_f64,
                                           &relu_backward_f64, &sum_f64, &squared_distance_f64};

}  // namespace

const KernelTable<float>& neon_table_f32() noexcept { return kTableF32; }
const KernelTable<double>& neon_table_f64() noexcept { return kTableF64; }

}  // namespace dpl::simd
