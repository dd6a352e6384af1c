#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <vector>

#include "semcrypt/error.hpp"
#include "semcrypt/leakage.hpp"

namespace semcrypt::leakage {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

std::array<double, kWin> gaussian_window() {
  std::array<double, kWin> w{};
  const int c = kWin / 2;
  double sum = 0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - c;
    w[i] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Separable valid-mode Gaussian filter: in is w x h, out is (w-10) x (h-10).
void filter_valid(const std::vector<double>& in, uint32_t w, uint32_t h,
                  const std::array<double, kWin>& k, std::vector<double>& tmp,
                  std::vector<double>& out) {
  const uint32_t ow = w - (kWin - 1);
  const uint32_t oh = h - (kWin - 1);
  tmp.assign(static_cast<size_t>(ow) * h, 0.0);
  for (uint32_t y = 0; y < h; ++y) {
    const double* row = in.data() + static_cast<size_t>(y) * w;
    double* trow = tmp.data() + static_cast<size_t>(y) * ow;
    for (uint32_t x = 0; x < ow; ++x) {
      double acc = 0;
      for (int i = 0; i < kWin; ++i) acc += k[i] * row[x + i];
      trow[x] = acc;
    }
  }
  out.assign(static_cast<size_t>(ow) * oh, 0.0);
  for (uint32_t y = 0; y < oh; ++y) {
    double* orow = out.data() + static_cast<size_t>(y) * ow;
    for (int i = 0; i < kWin; ++i) {
      const double* trow = tmp.data() + static_cast<size_t>(y + i) * ow;
      const double ki = k[i];
      for (uint32_t x = 0; x < ow; ++x) orow[x] += ki * trow[x];
    }
  }
}

// Continued-fraction / series evaluation of the regularized incomplete gamma
// functions (Numerical Recipes construction, double precision).
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  const double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double gamma_q(double a, double x) {
  if (x < 0 || a <= 0) fail(Err::Internal, "gamma_q domain");
  if (x == 0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

std::array<uint64_t, 256> byte_histogram(const std::vector<uint8_t>& bytes) {
  require(!bytes.empty(), Err::EmptyInput, "empty byte buffer");
  std::array<uint64_t, 256> h{};
  for (uint8_t b : bytes) ++h[b];
  return h;
}

}  // namespace

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  check_image(a);
  check_image(b);
  require(a.width == b.width && a.height == b.height && a.bit_depth == b.bit_depth,
          Err::DimensionMismatch, "ssim needs images of equal shape and depth");
  require(a.width >= kWin && a.height >= kWin, Err::ImageTooSmall,
          "ssim needs at least an 11x11 image");

  const size_t n = a.pixel_count();
  std::vector<double> pa(n), pb(n), paa(n), pbb(n), pab(n);
  for (size_t i = 0; i < n; ++i) {
    const double x = a.samples[i];
    const double y = b.samples[i];
    pa[i] = x;
    pb[i] = y;
    paa[i] = x * x;
    pbb[i] = y * y;
    pab[i] = x * y;
  }

  static const auto kKernel = gaussian_window();
  std::vector<double> tmp, mu_a, mu_b, e_aa, e_bb, e_ab;
  filter_valid(pa, a.width, a.height, kKernel, tmp, mu_a);
  filter_valid(pb, a.width, a.height, kKernel, tmp, mu_b);
  filter_valid(paa, a.width, a.height, kKernel, tmp, e_aa);
  filter_valid(pbb, a.width, a.height, kKernel, tmp, e_bb);
  filter_valid(pab, a.width, a.height, kKernel, tmp, e_ab);

  const double L = a.max_value();
  const double c1 = (kK1 * L) * (kK1 * L);
  const double c2 = (kK2 * L) * (kK2 * L);

  double total = 0;
  for (size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    const double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
    const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

uint64_t phash(const ImageBuffer& img) {
  check_image(img);
  require(img.width >= 8 && img.height >= 8, Err::ImageTooSmall,
          "phash needs at least an 8x8 image");

  const ImageBuffer small = resize_bilinear(img, 32, 32);

  // cos table for the 32-point DCT-II
  static const auto kCos = [] {
    std::array<std::array<double, 32>, 32> t{};
    for (int u = 0; u < 32; ++u) {
      for (int y = 0; y < 32; ++y) {
        t[u][y] = std::cos(M_PI * (2.0 * y + 1.0) * u / 64.0);
      }
    }
    return t;
  }();

  double f[32][32];
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) f[y][x] = small.at(x, y);
  }
  double rows[32][32];
  for (int y = 0; y < 32; ++y) {
    for (int u = 0; u < 8; ++u) {
      double acc = 0;
      for (int x = 0; x < 32; ++x) acc += f[y][x] * kCos[u][x];
      rows[y][u] = acc;
    }
  }
  double coef[8][8];
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      double acc = 0;
      for (int y = 0; y < 32; ++y) acc += rows[y][u] * kCos[v][y];
      coef[v][u] = acc;
    }
  }

  std::array<double, 63> rest;
  size_t k = 0;
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      if (u == 0 && v == 0) continue;
      rest[k++] = coef[v][u];
    }
  }
  std::nth_element(rest.begin(), rest.begin() + 31, rest.end());
  const double median = rest[31];

  uint64_t hash = 0;
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      hash <<= 1;
      if (coef[v][u] > median) hash |= 1;
    }
  }
  return hash;
}

int hamming64(uint64_t a, uint64_t b) { return std::popcount(a ^ b); }

double byte_entropy(const std::vector<uint8_t>& bytes) {
  const auto h = byte_histogram(bytes);
  const double n = static_cast<double>(bytes.size());
  double ent = 0;
  for (uint64_t c : h) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    ent -= p * std::log2(p);
  }
  return ent;
}

double byte_chi2_pvalue(const std::vector<uint8_t>& bytes) {
  const auto h = byte_histogram(bytes);
  const double expect = static_cast<double>(bytes.size()) / 256.0;
  double chi2 = 0;
  for (uint64_t c : h) {
    const double d = static_cast<double>(c) - expect;
    chi2 += d * d / expect;
  }
  return chi2_pvalue(chi2, 255.0);
}

double chi2_pvalue(double x, double dof) {
  require(dof > 0, Err::Internal, "chi2 dof must be positive");
  if (x <= 0) return 1.0;
  return gamma_q(dof / 2.0, x / 2.0);
}

ImageBuffer render_cipher_as_image(const std::vector<uint8_t>& bytes, uint32_t width,
                                   uint32_t height) {
  ImageBuffer img = make_image(width, height, 8);
  const size_t n = std::min(img.pixel_count(), bytes.size());
  for (size_t i = 0; i < n; ++i) img.samples[i] = bytes[i];
  return img;
}

LeakageReport audit(const ImageBuffer& plain, const std::vector<uint8_t>& cipher_bytes,
                    const ImageBuffer& masked) {
  check_image(plain);
  check_image(masked);

  // metrics compare in the 8-bit domain; 16-bit inputs are windowed down
  const ImageBuffer p8 =
      plain.bit_depth == 8 ? plain : normalize_to_8bit(plain, full_range_window(plain.bit_depth));
  const ImageBuffer m8 =
      masked.bit_depth == 8 ? masked : normalize_to_8bit(masked, full_range_window(masked.bit_depth));

  const ImageBuffer rendered = render_cipher_as_image(cipher_bytes, p8.width, p8.height);

  LeakageReport r;
  r.ssim_plain_vs_cipher = ssim(p8, rendered);
  r.ssim_plain_vs_masked = ssim(p8, m8);
  r.phash_distance = hamming64(phash(p8), phash(rendered));
  r.cipher_entropy = byte_entropy(cipher_bytes);
  r.histogram_chi2_pvalue = byte_chi2_pvalue(cipher_bytes);

  r.ssim_ok = r.ssim_plain_vs_cipher < kSsimGate;
  r.phash_ok = r.phash_distance >= kPhashGate;
  r.entropy_ok = r.cipher_entropy >= kEntropyGate;
  r.chi2_ok = r.histogram_chi2_pvalue > kChi2Gate;
  r.pass = r.ssim_ok && r.phash_ok && r.entropy_ok && r.chi2_ok;
  return r;
}

}  // namespace semcrypt::leakage
