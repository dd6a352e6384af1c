#pragma once

#include <cstdint>
#include <vector>

#include "semcrypt/image.hpp"

namespace semcrypt::codec {

enum class CodecMode : uint8_t {
  Lossless53 = 0,
  Lossy97 = 1,
};

// Largest decomposition depth the format carries.
inline constexpr int kMaxLevels = 6;

// levels must satisfy 1 <= levels <= min(kMaxLevels, floor(log2(min(w,h)))).
int max_levels_for(uint32_t width, uint32_t height);

// Default depth used by the CLI when none is given.
int default_levels(uint32_t width, uint32_t height);

// --- wavelet transforms -----------------------------------------------
// Planes are row-major width*height arrays transformed in place into the
// Mallat layout (LL in the top-left corner after each split).  Boundary
// handling is whole-point symmetric extension.

// Reversible integer 5/3.
void dwt53_forward(std::vector<int32_t>& plane, uint32_t width, uint32_t height, int levels);
void dwt53_inverse(std::vector<int32_t>& plane, uint32_t width, uint32_t height, int levels);

// Irreversible 9/7 with the published lifting constants; low band scaled by
// 1/K and high band by K.
void dwt97_forward(std::vector<float>& plane, uint32_t width, uint32_t height, int levels);
void dwt97_inverse(std::vector<float>& plane, uint32_t width, uint32_t height, int levels);

// --- quantization ------------------------------------------------------
// Dead-zone: q = sign(c) * floor(|c| / step); dequantized midpoint
// reconstruction c' = sign(q) * (|q| + 0.5) * step, 0 for q == 0.
int32_t quantize_coeff(float c, double step);
float dequantize_coeff(int32_t q, double step);

// Effective step for a subband produced at decomposition level `level`
// (1 = finest split, `levels` = coarsest; the LL band uses `levels`).
double subband_qstep(double base_qstep, int level);

// --- codestream --------------------------------------------------------
struct EncodeParams {
  CodecMode mode = CodecMode::Lossless53;
  int levels = 0;            // 0 = default_levels(w, h)
  float base_qstep = 12.0f;  // Lossy97 only; calibrated to >=4:1 at >=35 dB on phantoms
};

std::vector<uint8_t> encode(const ImageBuffer& img, const EncodeParams& params);
ImageBuffer decode(const std::vector<uint8_t>& bytes);

// Parsed .j2l header for tooling (sizes, mode reporting).
struct CodestreamInfo {
  CodecMode mode;
  uint32_t width;
  uint32_t height;
  int levels;
  int bit_depth;
  float base_qstep;
  int subband_count;
};
CodestreamInfo parse_codestream_header(const std::vector<uint8_t>& bytes);

}  // namespace semcrypt::codec
