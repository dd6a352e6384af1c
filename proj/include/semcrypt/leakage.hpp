#pragma once

#include <cstdint>
#include <vector>

#include "semcrypt/image.hpp"

namespace semcrypt::leakage {

// Gates for the audit verdict.
inline constexpr double kSsimGate = 0.01;      // ssim(plain, rendered cipher) must be below
inline constexpr int kPhashGate = 20;          // hamming bits, out of 64, must be at least
inline constexpr double kEntropyGate = 7.99;   // bits/byte, must be at least
inline constexpr double kChi2Gate = 0.001;     // uniformity p-value, must exceed

// Standard SSIM: 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03,
// L = 2^bit_depth - 1, mean over valid (fully interior) window positions.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

// 64-bit perceptual hash: bilinear resize to 32x32, 2-D DCT-II, 8x8
// low-frequency block thresholded against the median of the 63 non-DC
// coefficients (DC compared against the same median), row-major bit order.
uint64_t phash(const ImageBuffer& img);

int hamming64(uint64_t a, uint64_t b);

// Shannon entropy of the byte histogram, bits per byte.
double byte_entropy(const std::vector<uint8_t>& bytes);

// Pearson chi-square statistic of the byte histogram against uniform, and
// its p-value (upper tail, 255 degrees of freedom).
double byte_chi2_pvalue(const std::vector<uint8_t>& bytes);

// Upper-tail p-value of a chi-square statistic with `dof` degrees of freedom
// (regularized incomplete gamma Q(dof/2, x/2)).
double chi2_pvalue(double x, double dof);

// First width*height bytes as an 8-bit image, zero-padded when short.
ImageBuffer render_cipher_as_image(const std::vector<uint8_t>& bytes, uint32_t width,
                                   uint32_t height);

struct LeakageReport {
  double ssim_plain_vs_cipher = 0.0;
  double ssim_plain_vs_masked = 0.0;  // informational, not gated
  int phash_distance = 0;
  double cipher_entropy = 0.0;
  double histogram_chi2_pvalue = 0.0;

  bool ssim_ok = false;
  bool phash_ok = false;
  bool entropy_ok = false;
  bool chi2_ok = false;
  bool pass = false;
};

// Runs every metric of the leakage analysis: SSIM and pHash between the
// plaintext and the rendered ciphertext, ciphertext byte entropy, and the
// chi-square uniformity check.  Pass iff all four gates hold.
LeakageReport audit(const ImageBuffer& plain, const std::vector<uint8_t>& cipher_bytes,
                    const ImageBuffer& masked);

}  // namespace semcrypt::leakage
