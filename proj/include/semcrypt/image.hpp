#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace semcrypt {

// The pixel raster every pipeline stage operates on.  Row-major, unsigned,
// 8 or 16 bits per sample stored widened to uint16_t.
struct ImageBuffer {
  uint32_t width = 0;
  uint32_t height = 0;
  int bit_depth = 8;  // 8 or 16
  std::vector<uint16_t> samples;  // length == width * height

  uint16_t max_value() const { return bit_depth == 16 ? 65535 : 255; }
  size_t pixel_count() const { return static_cast<size_t>(width) * height; }

  uint16_t at(uint32_t x, uint32_t y) const { return samples[static_cast<size_t>(y) * width + x]; }
  uint16_t& at(uint32_t x, uint32_t y) { return samples[static_cast<size_t>(y) * width + x]; }

  bool operator==(const ImageBuffer&) const = default;
};

// Validates dims, depth, sample-count and sample-range invariants.
// Throws Err::Internal on violation; used at module boundaries.
void check_image(const ImageBuffer& img);

ImageBuffer make_image(uint32_t w, uint32_t h, int bit_depth, uint16_t fill = 0);

// Intensity window for 8-bit normalization (DICOM-style center/width).
struct Window {
  double center = 128.0;
  double width = 256.0;  // > 0
};

// Full-range default window for a given bit depth: center 2^(d-1), width 2^d.
Window full_range_window(int bit_depth);

// v -> clamp(round(255 * (v - (center - width/2)) / width), 0, 255)
ImageBuffer normalize_to_8bit(const ImageBuffer& img, const Window& w);

// Bilinear resampling with pixel-center alignment: the source coordinate of
// output pixel i is (i + 0.5) * (in/out) - 0.5, edge-clamped.
ImageBuffer resize_bilinear(const ImageBuffer& img, uint32_t out_w, uint32_t out_h);

// 10*log10(MAX^2 / MSE), +infinity when the buffers are identical.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

// Binary PGM (P5).  16-bit samples are written big-endian per the format.
std::vector<uint8_t> pgm_encode(const ImageBuffer& img);
ImageBuffer pgm_decode(const std::vector<uint8_t>& bytes);
void pgm_write_file(const ImageBuffer& img, const std::string& path);
ImageBuffer pgm_read_file(const std::string& path);

// Whole-file helpers shared across modules.
std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const uint8_t* data, size_t n);
void write_file(const std::string& path, const std::vector<uint8_t>& data);

}  // namespace semcrypt
