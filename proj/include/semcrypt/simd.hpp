#pragma once

#include <cstddef>
#include <cstdint>

// Runtime-dispatched kernel table.  Every kernel has a scalar reference
// implementation and, on x86-64, an AVX2 variant compiled in its own TU.
// The two variants are required to be bit-identical for all inputs: the
// AVX2 code uses no FMA and reduces in the same order as the scalar code.
// Tests assert this exhaustively; the rest of the library can then treat
// backend choice as a pure speed knob with no effect on output bytes.

namespace semcrypt::simd {

enum class Backend {
  Scalar,
  Avx2,
};

struct Kernels {
  const char* name;

  // y[i] += a * x[i]
  void (*axpy_f32)(float* y, const float* x, float a, size_t n);
  // striped 8-accumulator dot product; see kernels_scalar.cpp for the
  // exact reduction order both variants follow
  float (*dot_f32)(const float* a, const float* b, size_t n);
  // x[i] *= a
  void (*scale_f32)(float* x, float a, size_t n);
  // t[i] += c * (a[i] + b[i]); one lifting step of the 9/7 wavelet
  void (*lift_f32)(float* t, const float* a, const float* b, float c, size_t n);
  // y[i] = max(0, x[i])
  void (*relu_f32)(float* y, const float* x, size_t n);
  // g[i] = x[i] > 0 ? g[i] : 0
  void (*relu_grad_f32)(float* g, const float* x, size_t n);

  // integer lifting steps of the reversible 5/3 wavelet
  // t[i] -= (a[i] + b[i]) >> 1
  void (*lift_sub_half_i32)(int32_t* t, const int32_t* a, const int32_t* b, size_t n);
  // t[i] += (a[i] + b[i]) >> 1
  void (*lift_add_half_i32)(int32_t* t, const int32_t* a, const int32_t* b, size_t n);
  // t[i] += (a[i] + b[i] + 2) >> 2
  void (*lift_add_quarter_i32)(int32_t* t, const int32_t* a, const int32_t* b, size_t n);
  // t[i] -= (a[i] + b[i] + 2) >> 2
  void (*lift_sub_quarter_i32)(int32_t* t, const int32_t* a, const int32_t* b, size_t n);
};

// Active kernel table.  Resolution order: explicit force_backend() call,
// then the SEMCRYPT_SIMD environment variable ("scalar" or "avx2"),
// then CPU detection.
const Kernels& active();

// Pin the backend, overriding detection.  Used by tests and `bench --simd`.
// Requesting an unavailable backend throws Err::UsageError.
void force_backend(Backend b);

bool available(Backend b);
const Kernels& table(Backend b);  // throws Err::UsageError if unavailable

}  // namespace semcrypt::simd
