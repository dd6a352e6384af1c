#include <atomic>
#include <cstdlib>
#include <cstring>

#include "semcrypt/error.hpp"
#include "semcrypt/simd.hpp"

namespace semcrypt::simd {

extern const Kernels kScalarKernels;

#if defined(SEMCRYPT_HAVE_AVX2_TU)
extern const Kernels kAvx2Kernels;
#endif

namespace {

bool cpu_has_avx2() {
#if defined(SEMCRYPT_HAVE_AVX2_TU) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

const Kernels* detect() {
  const char* env = std::getenv("SEMCRYPT_SIMD");
  if (env && *env) {
    if (std::strcmp(env, "scalar") == 0) return &kScalarKernels;
    if (std::strcmp(env, "avx2") == 0) {
#if defined(SEMCRYPT_HAVE_AVX2_TU)
      if (cpu_has_avx2()) return &kAvx2Kernels;
#endif
      fail(Err::UsageError, "SEMCRYPT_SIMD=avx2 but AVX2 is not available on this CPU");
    }
    fail(Err::UsageError, std::string("unknown SEMCRYPT_SIMD value: ") + env);
  }
#if defined(SEMCRYPT_HAVE_AVX2_TU)
  if (cpu_has_avx2()) return &kAvx2Kernels;
#endif
  return &kScalarKernels;
}

std::atomic<const Kernels*> g_active{nullptr};

}  // namespace

const Kernels& active() {
  const Kernels* k = g_active.load(std::memory_order_acquire);
  if (!k) {
    k = detect();
    g_active.store(k, std::memory_order_release);
  }
  return *k;
}

bool available(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
      return cpu_has_avx2();
  }
  return false;
}

const Kernels& table(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return kScalarKernels;
    case Backend::Avx2:
#if defined(SEMCRYPT_HAVE_AVX2_TU)
      if (cpu_has_avx2()) return kAvx2Kernels;
#endif
      fail(Err::UsageError, "AVX2 backend is not available on this CPU");
  }
  fail(Err::UsageError, "unknown SIMD backend");
}

void force_backend(Backend b) {
  g_active.store(&table(b), std::memory_order_release);
}

}  // namespace semcrypt::simd
