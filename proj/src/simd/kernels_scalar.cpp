#include <cstddef>
#include <cstdint>

#include "semcrypt/simd.hpp"

// Scalar reference kernels.  These define the semantics; the AVX2 variants
// must match them bit for bit.  Built with -ffp-contract=off so the compiler
// cannot fuse the multiply-adds.

namespace semcrypt::simd {
namespace {

void axpy_f32_scalar(float* y, const float* x, float a, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// Dot product with 8 independent accumulators over a stride-8 layout, then a
// fixed pairwise reduction.  The stripe/reduction structure mirrors an 8-lane
// vector register with one horizontal sum at the end, which is what makes the
// AVX2 variant able to reproduce it exactly.
float dot_f32_scalar(const float* a, const float* b, size_t n) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  const size_t n8 = n & ~static_cast<size_t>(7);
  for (size_t i = 0; i < n8; i += 8) {
    for (int l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  float sum = ((acc[0] + acc[4]) + (acc[2] + acc[6])) +
              ((acc[1] + acc[5]) + (acc[3] + acc[7]));
  for (size_t i = n8; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void scale_f32_scalar(float* x, float a, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] *= a;
}

void lift_f32_scalar(float* t, const float* a, const float* b, float c, size_t n) {
  for (size_t i = 0; i < n; ++i) t[i] += c * (a[i] + b[i]);
}

void relu_f32_scalar(float* y, const float* x, size_t n) {
  // written as max(0, x) with 0 as the first operand, matching the NaN
  // behaviour of _mm256_max_ps(zero, x)
  for (size_t i = 0; i < n; ++i) y[i] = (0.0f > x[i]) ? 0.0f : x[i];
}

void relu_grad_f32_scalar(float* g, const float* x, size_t n) {
  for (size_t i = 0; i < n; ++i) g[i] = (x[i] > 0.0f) ? g[i] : 0.0f;
}

void lift_sub_half_i32_scalar(int32_t* t, const int32_t* a, const int32_t* b, size_t n) {
  for (size_t i = 0; i < n; ++i) t[i] -= (a[i] + b[i]) >> 1;
}

void lift_add_half_i32_scalar(int32_t* t, const int32_t* a, const int32_t* b, size_t n) {
  for (size_t i = 0; i < n; ++i) t[i] += (a[i] + b[i]) >> 1;
}

void lift_add_quarter_i32_scalar(int32_t* t, const int32_t* a, const int32_t* b, size_t n) {
  for (size_t i = 0; i < n; ++i) t[i] += (a[i] + b[i] + 2) >> 2;
}

void lift_sub_quarter_i32_scalar(int32_t* t, const int32_t* a, const int32_t* b, size_t n) {
  for (size_t i = 0; i < n; ++i) t[i] -= (a[i] + b[i] + 2) >> 2;
}

}  // namespace

extern const Kernels kScalarKernels;
const Kernels kScalarKernels = {
    "scalar",
    axpy_f32_scalar,
    dot_f32_scalar,
    scale_f32_scalar,
    lift_f32_scalar,
    relu_f32_scalar,
    relu_grad_f32_scalar,
    lift_sub_half_i32_scalar,
    lift_add_half_i32_scalar,
    lift_add_quarter_i32_scalar,
    lift_sub_quarter_i32_scalar,
};

}  // namespace semcrypt::simd
