#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "semcrypt/codec.hpp"
#include "semcrypt/error.hpp"
#include "semcrypt/simd.hpp"

// Lifting DWT, both filter banks, in-place Mallat layout.  Each level runs a
// horizontal pass (rows deinterleaved into contiguous even/odd halves so the
// kernels get unit-stride arrays) followed by a vertical pass (even/odd rows
// gathered into temporary planes and lifted a whole row at a time).  Boundary
// clamping on the deinterleaved arrays reproduces whole-point symmetric
// extension exactly.

namespace semcrypt::codec {

namespace {

// 9/7 lifting constants and the normalization factor.
constexpr float kAlpha = -1.586134342f;
constexpr float kBeta = -0.052980118f;
constexpr float kGamma = 0.882911075f;
constexpr float kDelta = 0.443506852f;
constexpr float kK = 1.230174105f;
constexpr float kInvK = 1.0f / 1.230174105f;

// ---- 5/3 one-dimensional steps on split arrays -------------------------

void predict53(int32_t* d, const int32_t* e, uint32_t ne, uint32_t nd) {
  if (nd == 0) return;
  const auto& k = simd::active();
  const uint32_t m = std::min(nd, ne - 1);
  k.lift_sub_half_i32(d, e, e + 1, m);
  if (m < nd) d[nd - 1] -= (e[ne - 1] + e[ne - 1]) >> 1;
}

void update53(int32_t* e, const int32_t* d, uint32_t ne, uint32_t nd) {
  if (nd == 0) return;
  const auto& k = simd::active();
  e[0] += (d[0] + d[0] + 2) >> 2;
  const uint32_t cnt = std::min(ne - 1, nd - 1);
  k.lift_add_quarter_i32(e + 1, d, d + 1, cnt);
  if (ne - 1 > cnt) e[ne - 1] += (d[nd - 1] + d[nd - 1] + 2) >> 2;
}

void unupdate53(int32_t* e, const int32_t* d, uint32_t ne, uint32_t nd) {
  if (nd == 0) return;
  const auto& k = simd::active();
  e[0] -= (d[0] + d[0] + 2) >> 2;
  const uint32_t cnt = std::min(ne - 1, nd - 1);
  k.lift_sub_quarter_i32(e + 1, d, d + 1, cnt);
  if (ne - 1 > cnt) e[ne - 1] -= (d[nd - 1] + d[nd - 1] + 2) >> 2;
}

void unpredict53(int32_t* d, const int32_t* e, uint32_t ne, uint32_t nd) {
  if (nd == 0) return;
  const auto& k = simd::active();
  const uint32_t m = std::min(nd, ne - 1);
  k.lift_add_half_i32(d, e, e + 1, m);
  if (m < nd) d[nd - 1] += (e[ne - 1] + e[ne - 1]) >> 1;
}

// ---- 9/7 one-dimensional steps -----------------------------------------

// t[i] += c * (pair sum), over the odd (detail) positions.
void stepf_odd(float* d, const float* e, float c, uint32_t ne, uint32_t nd) {
  if (nd == 0) return;
  const auto& k = simd::active();
  const uint32_t m = std::min(nd, ne - 1);
  k.lift_f32(d, e, e + 1, c, m);
  if (m < nd) d[nd - 1] += c * (e[ne - 1] + e[ne - 1]);
}

// t[i] += c * (pair sum), over the even (smooth) positions.
void stepf_even(float* e, const float* d, float c, uint32_t ne, uint32_t nd) {
  if (nd == 0) return;
  const auto& k = simd::active();
  e[0] += c * (d[0] + d[0]);
  const uint32_t cnt = std::min(ne - 1, nd - 1);
  k.lift_f32(e + 1, d, d + 1, c, cnt);
  if (ne - 1 > cnt) e[ne - 1] += c * (d[nd - 1] + d[nd - 1]);
}

void lift97_forward(float* e, float* d, uint32_t ne, uint32_t nd) {
  if (nd == 0) return;
  const auto& k = simd::active();
  stepf_odd(d, e, kAlpha, ne, nd);
  stepf_even(e, d, kBeta, ne, nd);
  stepf_odd(d, e, kGamma, ne, nd);
  stepf_even(e, d, kDelta, ne, nd);
  k.scale_f32(e, kInvK, ne);
  k.scale_f32(d, kK, nd);
}

void lift97_inverse(float* e, float* d, uint32_t ne, uint32_t nd) {
  if (nd == 0) return;
  const auto& k = simd::active();
  k.scale_f32(e, kK, ne);
  k.scale_f32(d, kInvK, nd);
  stepf_even(e, d, -kDelta, ne, nd);
  stepf_odd(d, e, -kGamma, ne, nd);
  stepf_even(e, d, -kBeta, ne, nd);
  stepf_odd(d, e, -kAlpha, ne, nd);
}

// ---- generic per-level machinery ---------------------------------------

template <class T>
struct Scratch {
  std::vector<T> e, d;        // horizontal split halves
  std::vector<T> ve, vo;      // vertical split planes

  void reserve(uint32_t w, uint32_t h) {
    e.resize((w + 1) / 2 + 1);
    d.resize(w / 2 + 1);
    ve.resize(static_cast<size_t>((h + 1) / 2) * w);
    vo.resize(static_cast<size_t>(h / 2) * w);
  }
};

// One resolution level, forward.  Lift1D applies the full 1-D transform to a
// split (even, detail) pair; VPredict/VUpdate are not needed because the
// vertical pass reuses Lift1D on whole rows.
template <class T, class Lift1D>
void level_forward(T* base, size_t stride, uint32_t cw, uint32_t ch, Scratch<T>& s, Lift1D lift) {
  const uint32_t ne = (cw + 1) / 2;
  const uint32_t nd = cw / 2;

  if (nd > 0) {
    for (uint32_t y = 0; y < ch; ++y) {
      T* row = base + static_cast<size_t>(y) * stride;
      for (uint32_t i = 0; i < ne; ++i) s.e[i] = row[2 * i];
      for (uint32_t i = 0; i < nd; ++i) s.d[i] = row[2 * i + 1];
      lift(s.e.data(), s.d.data(), ne, nd);
      std::memcpy(row, s.e.data(), ne * sizeof(T));
      std::memcpy(row + ne, s.d.data(), nd * sizeof(T));
    }
  }

  const uint32_t he = (ch + 1) / 2;
  const uint32_t ho = ch / 2;
  if (ho == 0) return;
  for (uint32_t j = 0; j < he; ++j) {
    std::memcpy(s.ve.data() + static_cast<size_t>(j) * cw,
                base + static_cast<size_t>(2 * j) * stride, cw * sizeof(T));
  }
  for (uint32_t j = 0; j < ho; ++j) {
    std::memcpy(s.vo.data() + static_cast<size_t>(j) * cw,
                base + static_cast<size_t>(2 * j + 1) * stride, cw * sizeof(T));
  }
  // The vertical transform is the same 1-D lift applied "columnwise"; with
  // rows gathered into planes it becomes row-against-row kernel calls, which
  // is what the column variant below does.
  lift.columns(s.ve.data(), s.vo.data(), cw, he, ho);
  for (uint32_t j = 0; j < he; ++j) {
    std::memcpy(base + static_cast<size_t>(j) * stride, s.ve.data() + static_cast<size_t>(j) * cw,
                cw * sizeof(T));
  }
  for (uint32_t j = 0; j < ho; ++j) {
    std::memcpy(base + static_cast<size_t>(he + j) * stride,
                s.vo.data() + static_cast<size_t>(j) * cw, cw * sizeof(T));
  }
}

template <class T, class Lift1D>
void level_inverse(T* base, size_t stride, uint32_t cw, uint32_t ch, Scratch<T>& s, Lift1D lift) {
  const uint32_t he = (ch + 1) / 2;
  const uint32_t ho = ch / 2;
  if (ho > 0) {
    for (uint32_t j = 0; j < he; ++j) {
      std::memcpy(s.ve.data() + static_cast<size_t>(j) * cw,
                  base + static_cast<size_t>(j) * stride, cw * sizeof(T));
    }
    for (uint32_t j = 0; j < ho; ++j) {
      std::memcpy(s.vo.data() + static_cast<size_t>(j) * cw,
                  base + static_cast<size_t>(he + j) * stride, cw * sizeof(T));
    }
    lift.columns_inverse(s.ve.data(), s.vo.data(), cw, he, ho);
    for (uint32_t j = 0; j < he; ++j) {
      std::memcpy(base + static_cast<size_t>(2 * j) * stride,
                  s.ve.data() + static_cast<size_t>(j) * cw, cw * sizeof(T));
    }
    for (uint32_t j = 0; j < ho; ++j) {
      std::memcpy(base + static_cast<size_t>(2 * j + 1) * stride,
                  s.vo.data() + static_cast<size_t>(j) * cw, cw * sizeof(T));
    }
  }

  const uint32_t ne = (cw + 1) / 2;
  const uint32_t nd = cw / 2;
  if (nd == 0) return;
  for (uint32_t y = 0; y < ch; ++y) {
    T* row = base + static_cast<size_t>(y) * stride;
    std::memcpy(s.e.data(), row, ne * sizeof(T));
    std::memcpy(s.d.data(), row + ne, nd * sizeof(T));
    lift.inverse(s.e.data(), s.d.data(), ne, nd);
    for (uint32_t i = 0; i < ne; ++i) row[2 * i] = s.e[i];
    for (uint32_t i = 0; i < nd; ++i) row[2 * i + 1] = s.d[i];
  }
}

// 5/3 lift bundle.
struct Lift53 {
  void operator()(int32_t* e, int32_t* d, uint32_t ne, uint32_t nd) const {
    predict53(d, e, ne, nd);
    update53(e, d, ne, nd);
  }
  void inverse(int32_t* e, int32_t* d, uint32_t ne, uint32_t nd) const {
    unupdate53(e, d, ne, nd);
    unpredict53(d, e, ne, nd);
  }
  void columns(int32_t* ve, int32_t* vo, uint32_t cw, uint32_t he, uint32_t ho) const {
    const auto& k = simd::active();
    auto E = [&](uint32_t j) { return ve + static_cast<size_t>(j) * cw; };
    auto O = [&](uint32_t j) { return vo + static_cast<size_t>(j) * cw; };
    for (uint32_t j = 0; j < ho; ++j) {
      k.lift_sub_half_i32(O(j), E(j), E(std::min(j + 1, he - 1)), cw);
    }
    k.lift_add_quarter_i32(E(0), O(0), O(0), cw);
    for (uint32_t j = 1; j < he; ++j) {
      k.lift_add_quarter_i32(E(j), O(j - 1), O(std::min(j, ho - 1)), cw);
    }
  }
  void columns_inverse(int32_t* ve, int32_t* vo, uint32_t cw, uint32_t he, uint32_t ho) const {
    const auto& k = simd::active();
    auto E = [&](uint32_t j) { return ve + static_cast<size_t>(j) * cw; };
    auto O = [&](uint32_t j) { return vo + static_cast<size_t>(j) * cw; };
    k.lift_sub_quarter_i32(E(0), O(0), O(0), cw);
    for (uint32_t j = 1; j < he; ++j) {
      k.lift_sub_quarter_i32(E(j), O(j - 1), O(std::min(j, ho - 1)), cw);
    }
    for (uint32_t j = 0; j < ho; ++j) {
      k.lift_add_half_i32(O(j), E(j), E(std::min(j + 1, he - 1)), cw);
    }
  }
};

// 9/7 lift bundle.
struct Lift97 {
  void operator()(float* e, float* d, uint32_t ne, uint32_t nd) const {
    lift97_forward(e, d, ne, nd);
  }
  void inverse(float* e, float* d, uint32_t ne, uint32_t nd) const {
    lift97_inverse(e, d, ne, nd);
  }
  void columns(float* ve, float* vo, uint32_t cw, uint32_t he, uint32_t ho) const {
    const auto& k = simd::active();
    auto E = [&](uint32_t j) { return ve + static_cast<size_t>(j) * cw; };
    auto O = [&](uint32_t j) { return vo + static_cast<size_t>(j) * cw; };
    auto odd_step = [&](float c) {
      for (uint32_t j = 0; j < ho; ++j) k.lift_f32(O(j), E(j), E(std::min(j + 1, he - 1)), c, cw);
    };
    auto even_step = [&](float c) {
      k.lift_f32(E(0), O(0), O(0), c, cw);
      for (uint32_t j = 1; j < he; ++j) k.lift_f32(E(j), O(j - 1), O(std::min(j, ho - 1)), c, cw);
    };
    odd_step(kAlpha);
    even_step(kBeta);
    odd_step(kGamma);
    even_step(kDelta);
    for (uint32_t j = 0; j < he; ++j) k.scale_f32(E(j), kInvK, cw);
    for (uint32_t j = 0; j < ho; ++j) k.scale_f32(O(j), kK, cw);
  }
  void columns_inverse(float* ve, float* vo, uint32_t cw, uint32_t he, uint32_t ho) const {
    const auto& k = simd::active();
    auto E = [&](uint32_t j) { return ve + static_cast<size_t>(j) * cw; };
    auto O = [&](uint32_t j) { return vo + static_cast<size_t>(j) * cw; };
    for (uint32_t j = 0; j < he; ++j) k.scale_f32(E(j), kK, cw);
    for (uint32_t j = 0; j < ho; ++j) k.scale_f32(O(j), kInvK, cw);
    auto odd_step = [&](float c) {
      for (uint32_t j = 0; j < ho; ++j) k.lift_f32(O(j), E(j), E(std::min(j + 1, he - 1)), c, cw);
    };
    auto even_step = [&](float c) {
      k.lift_f32(E(0), O(0), O(0), c, cw);
      for (uint32_t j = 1; j < he; ++j) k.lift_f32(E(j), O(j - 1), O(std::min(j, ho - 1)), c, cw);
    };
    even_step(-kDelta);
    odd_step(-kGamma);
    even_step(-kBeta);
    odd_step(-kAlpha);
  }
};

void check_dwt_dims(uint32_t w, uint32_t h, int levels) {
  require(levels >= 1 && levels <= kMaxLevels, Err::DimensionTooSmall,
          "levels must be in 1..6");
  require(w >= (1u << levels) && h >= (1u << levels), Err::DimensionTooSmall,
          "plane dims must be >= 2^levels");
}

}  // namespace

int max_levels_for(uint32_t width, uint32_t height) {
  int l = 0;
  uint32_t m = std::min(width, height);
  while (m >= 2 && l < kMaxLevels) {
    m /= 2;
    ++l;
  }
  return l;
}

int default_levels(uint32_t width, uint32_t height) {
  return std::min(5, max_levels_for(width, height));
}

void dwt53_forward(std::vector<int32_t>& plane, uint32_t width, uint32_t height, int levels) {
  check_dwt_dims(width, height, levels);
  require(plane.size() == static_cast<size_t>(width) * height, Err::Internal, "plane size");
  Scratch<int32_t> s;
  s.reserve(width, height);
  uint32_t cw = width, ch = height;
  for (int l = 0; l < levels; ++l) {
    level_forward(plane.data(), width, cw, ch, s, Lift53{});
    cw = (cw + 1) / 2;
    ch = (ch + 1) / 2;
  }
}

void dwt53_inverse(std::vector<int32_t>& plane, uint32_t width, uint32_t height, int levels) {
  check_dwt_dims(width, height, levels);
  require(plane.size() == static_cast<size_t>(width) * height, Err::Internal, "plane size");
  Scratch<int32_t> s;
  s.reserve(width, height);
  uint32_t cws[kMaxLevels + 1], chs[kMaxLevels + 1];
  cws[0] = width;
  chs[0] = height;
  for (int l = 1; l <= levels; ++l) {
    cws[l] = (cws[l - 1] + 1) / 2;
    chs[l] = (chs[l - 1] + 1) / 2;
  }
  for (int l = levels - 1; l >= 0; --l) {
    level_inverse(plane.data(), width, cws[l], chs[l], s, Lift53{});
  }
}

void dwt97_forward(std::vector<float>& plane, uint32_t width, uint32_t height, int levels) {
  check_dwt_dims(width, height, levels);
  require(plane.size() == static_cast<size_t>(width) * height, Err::Internal, "plane size");
  Scratch<float> s;
  s.reserve(width, height);
  uint32_t cw = width, ch = height;
  for (int l = 0; l < levels; ++l) {
    level_forward(plane.data(), width, cw, ch, s, Lift97{});
    cw = (cw + 1) / 2;
    ch = (ch + 1) / 2;
  }
}

void dwt97_inverse(std::vector<float>& plane, uint32_t width, uint32_t height, int levels) {
  check_dwt_dims(width, height, levels);
  require(plane.size() == static_cast<size_t>(width) * height, Err::Internal, "plane size");
  Scratch<float> s;
  s.reserve(width, height);
  uint32_t cws[kMaxLevels + 1], chs[kMaxLevels + 1];
  cws[0] = width;
  chs[0] = height;
  for (int l = 1; l <= levels; ++l) {
    cws[l] = (cws[l - 1] + 1) / 2;
    chs[l] = (chs[l - 1] + 1) / 2;
  }
  for (int l = levels - 1; l >= 0; --l) {
    level_inverse(plane.data(), width, cws[l], chs[l], s, Lift97{});
  }
}

int32_t quantize_coeff(float c, double step) {
  const double a = std::abs(static_cast<double>(c));
  const double q = std::floor(a / step);
  const int32_t m = q > 2147483000.0 ? 2147483000 : static_cast<int32_t>(q);
  return c < 0 ? -m : m;
}

float dequantize_coeff(int32_t q, double step) {
  if (q == 0) return 0.0f;
  const double a = (std::abs(static_cast<double>(q)) + 0.5) * step;
  return static_cast<float>(q < 0 ? -a : a);
}

double subband_qstep(double base_qstep, int level) {
  return base_qstep * std::pow(2.0, -level);
}

}  // namespace semcrypt::codec
