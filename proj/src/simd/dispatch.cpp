// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "dpl/simd/kernels.hpp"

namespace dpl::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(DPL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect() noexcept {
  if (const char* env = std::getenv("DPL_SIMD")) {
    const std::string_view want(env);
    if (want == "scalar") return Backend::scalar;
    if (want == "avx2" && backend_available(Backend::avx2)) return Backend::avx2;
    if (want == "neon" && backend_available(Backend::neon)) return Backend::neon;
  }
  if (backend_available(Backend::avx2)) return Backend::avx2;
  if (backend_available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

struct Active {
  Backend backend;
  const KernelTable<float>* f32;
  const KernelTable<double>* f64;
};

Active make_active(Backend backend) noexcept {
  switch (backend) {
#if defined(DPL_HAVE_AVX2)
    case Backend::avx2:
      return {backend, &avx2_table_f32(), &avx2_table_f64()};
#endif
#if defined(DPL_HAVE_NEON)
    case Backend::neon:
      return {backend, &neon_table_f32(), &neon_table_f64()};
#endif
    default:
      return {Backend::scalar, &scalar_table_f32(), &scalar_table_f64()};
  }
}

Active& active() noexcept {
  static Active state = make_active(detect());
  return state;
}

}  // namespace

bool backend_available(Backend backend) noexcept {
  switch (backend) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return cpu_has_avx2();
    case Backend::neon:
#if defined(DPL_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() noexcept { return active().backend; }

void set_backend(Backend backend) {
  if (!backend_available(backend))
    throw std::invalid_argument("SIMD backend '" + std::string(backend_name(backend)) +
                                "' is not available on this CPU/build");
  active() = make_active(backend);
}

std::string_view backend_name(Backend backend) noexcept {
  switch (backend) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

const KernelTable<float>& table_f32() noexcept { return *active().f32; }
const KernelTable<double>& table_f64() noexcept { return *active().f64; }

}  // namespace dpl::simd
