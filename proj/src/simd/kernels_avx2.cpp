// AVX2 kernel variants.  This TU is the only one compiled with -mavx2, and it
// is only ever entered after dispatch.cpp has checked cpuid.  No FMA anywhere:
// mul+add keeps each lane bit-identical to the scalar reference under
// -ffp-contract=off.

#if defined(__AVX2__)

#include <immintrin.h>

#include <cstddef>
#include <cstdint>

#include "semcrypt/simd.hpp"

namespace semcrypt::simd {
namespace {

void axpy_f32_avx2(float* y, const float* x, float a, size_t n) {
  const __m256 va = _mm256_set1_ps(a);
  const size_t n8 = n & ~static_cast<size_t>(7);
  for (size_t i = 0; i < n8; i += 8) {
    __m256 vy = _mm256_loadu_ps(y + i);
    __m256 vx = _mm256_loadu_ps(x + i);
    vy = _mm256_add_ps(vy, _mm256_mul_ps(va, vx));
    _mm256_storeu_ps(y + i, vy);
  }
  for (size_t i = n8; i < n; ++i) y[i] += a * x[i];
}

// Horizontal sum reproducing the scalar reduction order exactly:
// ((l0+l4)+(l2+l6)) + ((l1+l5)+(l3+l7)).
float hsum_ordered(__m256 v) {
  const __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  const __m128 s = _mm_add_ps(lo, hi);                 // [l0+l4, l1+l5, l2+l6, l3+l7]
  const __m128 sh = _mm_movehl_ps(s, s);               // [l2+l6, l3+l7, ...]
  const __m128 s2 = _mm_add_ps(s, sh);                 // lane0=(l0+l4)+(l2+l6), lane1=(l1+l5)+(l3+l7)
  const __m128 s3 = _mm_add_ss(s2, _mm_shuffle_ps(s2, s2, 0x55));
  return _mm_cvtss_f32(s3);
}

float dot_f32_avx2(const float* a, const float* b, size_t n) {
  __m256 acc = _mm256_setzero_ps();
  const size_t n8 = n & ~static_cast<size_t>(7);
  for (size_t i = 0; i < n8; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    acc = _mm256_add_ps(acc, _mm256_mul_ps(va, vb));
  }
  float sum = hsum_ordered(acc);
  for (size_t i = n8; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void scale_f32_avx2(float* x, float a, size_t n) {
  const __m256 va = _mm256_set1_ps(a);
  const size_t n8 = n & ~static_cast<size_t>(7);
  for (size_t i = 0; i < n8; i += 8) {
    _mm256_storeu_ps(x + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), va));
  }
  for (size_t i = n8; i < n; ++i) x[i] *= a;
}

void lift_f32_avx2(float* t, const float* a, const float* b, float c, size_t n) {
  const __m256 vc = _mm256_set1_ps(c);
  const size_t n8 = n & ~static_cast<size_t>(7);
  for (size_t i = 0; i < n8; i += 8) {
    const __m256 vab = _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    const __m256 vt = _mm256_add_ps(_mm256_loadu_ps(t + i), _mm256_mul_ps(vc, vab));
    _mm256_storeu_ps(t + i, vt);
  }
  for (size_t i = n8; i < n; ++i) t[i] += c * (a[i] + b[i]);
}

void relu_f32_avx2(float* y, const float* x, size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  const size_t n8 = n & ~static_cast<size_t>(7);
  for (size_t i = 0; i < n8; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_max_ps(zero, _mm256_loadu_ps(x + i)));
  }
  for (size_t i = n8; i < n; ++i) y[i] = (0.0f > x[i]) ? 0.0f : x[i];
}

void relu_grad_f32_avx2(float* g, const float* x, size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  const size_t n8 = n & ~static_cast<size_t>(7);
  for (size_t i = 0; i < n8; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    _mm256_storeu_ps(g + i, _mm256_and_ps(_mm256_loadu_ps(g + i), mask));
  }
  for (size_t i = n8; i < n; ++i) g[i] = (x[i] > 0.0f) ? g[i] : 0.0f;
}

void lift_sub_half_i32_avx2(int32_t* t, const int32_t* a, const int32_t* b, size_t n) {
  const size_t n8 = n & ~static_cast<size_t>(7);
  for (size_t i = 0; i < n8; i += 8) {
    const __m256i s = _mm256_add_epi32(
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)),
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
    __m256i vt = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(t + i));
    vt = _mm256_sub_epi32(vt, _mm256_srai_epi32(s, 1));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(t + i), vt);
  }
  for (size_t i = n8; i < n; ++i) t[i] -= (a[i] + b[i]) >> 1;
}

void lift_add_half_i32_avx2(int32_t* t, const int32_t* a, const int32_t* b, size_t n) {
  const size_t n8 = n & ~static_cast<size_t>(7);
  for (size_t i = 0; i < n8; i += 8) {
    const __m256i s = _mm256_add_epi32(
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)),
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
    __m256i vt = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(t + i));
    vt = _mm256_add_epi32(vt, _mm256_srai_epi32(s, 1));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(t + i), vt);
  }
  for (size_t i = n8; i < n; ++i) t[i] += (a[i] + b[i]) >> 1;
}

void lift_add_quarter_i32_avx2(int32_t* t, const int32_t* a, const int32_t* b, size_t n) {
  const __m256i two = _mm256_set1_epi32(2);
  const size_t n8 = n & ~static_cast<size_t>(7);
  for (size_t i = 0; i < n8; i += 8) {
    __m256i s = _mm256_add_epi32(
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)),
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
    s = _mm256_add_epi32(s, two);
    __m256i vt = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(t + i));
    vt = _mm256_add_epi32(vt, _mm256_srai_epi32(s, 2));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(t + i), vt);
  }
  for (size_t i = n8; i < n; ++i) t[i] += (a[i] + b[i] + 2) >> 2;
}

void lift_sub_quarter_i32_avx2(int32_t* t, const int32_t* a, const int32_t* b, size_t n) {
  const __m256i two = _mm256_set1_epi32(2);
  const size_t n8 = n & ~static_cast<size_t>(7);
  for (size_t i = 0; i < n8; i += 8) {
    __m256i s = _mm256_add_epi32(
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)),
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
    s = _mm256_add_epi32(s, two);
    __m256i vt = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(t + i));
    vt = _mm256_sub_epi32(vt, _mm256_srai_epi32(s, 2));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(t + i), vt);
  }
  for (size_t i = n8; i < n; ++i) t[i] -= (a[i] + b[i] + 2) >> 2;
}

}  // namespace

extern const Kernels kAvx2Kernels;
const Kernels kAvx2Kernels = {
    "avx2",
    axpy_f32_avx2,
    dot_f32_avx2,
    scale_f32_avx2,
    lift_f32_avx2,
    relu_f32_avx2,
    relu_grad_f32_avx2,
    lift_sub_half_i32_avx2,
    lift_add_half_i32_avx2,
    lift_add_quarter_i32_avx2,
    lift_sub_quarter_i32_avx2,
};

}  // namespace semcrypt::simd

#else
#error "kernels_avx2.cpp must be compiled with -mavx2"
#endif
