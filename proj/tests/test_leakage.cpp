#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "semcrypt/crypto.hpp"
#include "semcrypt/error.hpp"
#include "semcrypt/image.hpp"
#include "semcrypt/leakage.hpp"
#include "semcrypt/mask.hpp"
#include "semcrypt/phantom.hpp"
#include "semcrypt/rng.hpp"

using namespace semcrypt;
using namespace semcrypt::leakage;

namespace {

Err thrown_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error to be thrown");
  return Err::Internal;
}

ImageBuffer make_phantom(uint64_t seed, uint32_t size = 64, double sigma = 0.03) {
  PhantomSpec spec;
  spec.class_label = static_cast<PhantomClass>(seed % 3);
  spec.size = size;
  spec.seed = seed;
  spec.noise_sigma = sigma;
  return phantom_generate(spec);
}

ImageBuffer random_image(uint32_t w, uint32_t h, int bit_depth, uint64_t seed) {
  ImageBuffer img = make_image(w, h, bit_depth);
  Xoshiro256pp rng(seed);
  for (auto& s : img.samples) s = static_cast<uint16_t>(rng.next_below(img.max_value() + 1));
  return img;
}

std::vector<uint8_t> pixel_bytes(const ImageBuffer& img) {
  std::vector<uint8_t> out;
  out.reserve(img.pixel_count());
  for (auto v : img.samples) out.push_back(static_cast<uint8_t>(v));
  return out;
}

std::vector<uint8_t> encrypt_pixels(const ImageBuffer& img, uint64_t seed) {
  SeededEntropy entropy(seed);
  const auto container = crypto::encrypt_container(
      pixel_bytes(img), crypto::to_bytes("test-passphrase"), crypto::CipherId::Aes128Cbc, entropy);
  // the ciphertext section, skipping the cleartext header
  return std::vector<uint8_t>(container.begin() + crypto::kContainerHeaderSize, container.end());
}

}  // namespace

// ---- ssim ---------------------------------------------------------------

TEST_CASE("ssim of an image with itself is exactly 1") {
  for (uint64_t seed : {0u, 1u, 2u}) {
    const auto img = make_phantom(seed);
    CHECK(ssim(img, img) == 1.0);
  }
  const auto img16 = random_image(32, 32, 16, 4);
  CHECK(ssim(img16, img16) == 1.0);
}

TEST_CASE("ssim matches the closed form on constant images") {
  // flat images: variance terms vanish, leaving the luminance factor
  const auto a = make_image(32, 32, 8, 100);
  const auto b = make_image(32, 32, 8, 120);
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double want = (2.0 * 100 * 120 + c1) / (100.0 * 100 + 120.0 * 120 + c1);
  CHECK(ssim(a, b) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("ssim is symmetric and bounded") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = make_phantom(seed);
    const auto b = make_phantom(seed + 100);
    const double ab = ssim(a, b);
    const double ba = ssim(b, a);
    CHECK(std::abs(ab - ba) <= 1e-9);
    CHECK(ab >= -1.0);
    CHECK(ab <= 1.0);
    if (a != b) CHECK(ab < 1.0);
  }
}

TEST_CASE("ssim of an image against its negative is negative") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto img = make_phantom(seed);
    ImageBuffer neg = img;
    for (auto& v : neg.samples) v = static_cast<uint16_t>(255 - v);
    CHECK(ssim(img, neg) < 0.0);
  }
}

TEST_CASE("ssim against rendered ciphertext is below the gate") {
  // 256px frames: the window mean has settled and the dark surround pulls
  // the luminance term down; small crops fluctuate past the gate
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto img = make_phantom(seed, 256);
    const auto ct = encrypt_pixels(img, seed);
    const auto rendered = render_cipher_as_image(ct, img.width, img.height);
    CHECK(ssim(img, rendered) < 0.01);
  }
}

TEST_CASE("ssim input validation") {
  const auto a = random_image(32, 32, 8, 1);
  const auto b = random_image(32, 16, 8, 2);
  const auto c = random_image(32, 32, 16, 3);
  CHECK(thrown_code([&] { ssim(a, b); }) == Err::DimensionMismatch);
  CHECK(thrown_code([&] { ssim(a, c); }) == Err::DimensionMismatch);
  const auto tiny = random_image(10, 10, 8, 4);
  CHECK(thrown_code([&] { ssim(tiny, tiny); }) == Err::ImageTooSmall);
}

// ---- phash ----------------------------------------------------------------

TEST_CASE("phash is deterministic and identical images collide") {
  const auto img = make_phantom(1);
  CHECK(phash(img) == phash(img));
  CHECK(hamming64(phash(img), phash(img)) == 0);
}

TEST_CASE("phash shrugs off small brightness shifts") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    auto img = make_phantom(seed);
    // keep away from the clamp rails so +-1 is a pure shift
    for (auto& v : img.samples) v = static_cast<uint16_t>(std::clamp<int>(v, 1, 254));
    ImageBuffer up = img, down = img;
    for (auto& v : up.samples) v = static_cast<uint16_t>(v + 1);
    for (auto& v : down.samples) v = static_cast<uint16_t>(v - 1);
    CHECK(hamming64(phash(img), phash(up)) <= 2);
    CHECK(hamming64(phash(img), phash(down)) <= 2);
  }
}

TEST_CASE("phash tolerates 2% gaussian noise") {
  Xoshiro256pp rng(777);
  int worst = 0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const auto img = make_phantom(seed);
    ImageBuffer noisy = img;
    for (auto& v : noisy.samples) {
      const double n = rng.next_gaussian() * 0.02 * 255.0;
      v = static_cast<uint16_t>(std::clamp<long>(std::lround(v + n), 0, 255));
    }
    worst = std::max(worst, hamming64(phash(img), phash(noisy)));
  }
  CHECK(worst <= 10);
}

TEST_CASE("phash separates phantoms from their ciphertext renderings") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto img = make_phantom(seed);
    const auto rendered = render_cipher_as_image(encrypt_pixels(img, seed), img.width, img.height);
    CHECK(hamming64(phash(img), phash(rendered)) >= 20);
  }
}

TEST_CASE("phash needs an 8x8 input") {
  const auto tiny = random_image(7, 7, 8, 0);
  CHECK(thrown_code([&] { phash(tiny); }) == Err::ImageTooSmall);
}

// ---- entropy and chi-square -----------------------------------------------

TEST_CASE("byte entropy worked examples") {
  CHECK(byte_entropy(std::vector<uint8_t>(100, 0)) == 0.0);

  std::vector<uint8_t> all;
  for (int i = 0; i < 256; ++i) all.push_back(static_cast<uint8_t>(i));
  CHECK(byte_entropy(all) == 8.0);

  // two symbols, equal counts -> exactly 1 bit
  std::vector<uint8_t> coin(64, 0);
  std::fill(coin.begin() + 32, coin.end(), 1);
  CHECK(byte_entropy(coin) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(thrown_code([] { byte_entropy({}); }) == Err::EmptyInput);
}

TEST_CASE("aes ciphertext clears the entropy gate") {
  std::vector<uint8_t> payload(64 * 1024, 7);
  SeededEntropy entropy(1234);
  const auto container = crypto::encrypt_container(payload, crypto::to_bytes("pw"),
                                                   crypto::CipherId::Aes256Cbc, entropy);
  const std::vector<uint8_t> ct(container.begin() + crypto::kContainerHeaderSize,
                                container.end());
  CHECK(byte_entropy(ct) >= 7.99);
  CHECK(byte_chi2_pvalue(ct) > 0.001);
}

TEST_CASE("chi-square p-value against closed forms") {
  // dof=2: Q(1, x/2) = exp(-x/2)
  for (double x : {0.5, 1.0, 3.0, 10.0}) {
    CHECK(chi2_pvalue(x, 2.0) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-12));
  }
  // dof=1: Q(1/2, x/2) = erfc(sqrt(x/2))
  for (double x : {0.1, 1.0, 4.0, 9.0}) {
    CHECK(chi2_pvalue(x, 1.0) == doctest::Approx(std::erfc(std::sqrt(x / 2.0))).epsilon(1e-10));
  }
  // median of chi2_255 sits near 254.3, p close to one half
  CHECK(chi2_pvalue(254.334, 255.0) == doctest::Approx(0.5).epsilon(0.01));
  CHECK(chi2_pvalue(0.0, 255.0) == 1.0);
}

TEST_CASE("chi-square flags grossly non-uniform bytes") {
  CHECK(byte_chi2_pvalue(std::vector<uint8_t>(4096, 42)) < 1e-12);
  Xoshiro256pp rng(55);
  std::vector<uint8_t> uniform(65536);
  for (auto& b : uniform) b = static_cast<uint8_t>(rng.next_below(256));
  CHECK(byte_chi2_pvalue(uniform) > 0.001);
}

// ---- rendering --------------------------------------------------------

TEST_CASE("cipher rendering maps bytes row-major with zero padding") {
  const auto img = render_cipher_as_image({1, 2, 3, 4}, 2, 2);
  CHECK(img.samples == std::vector<uint16_t>{1, 2, 3, 4});

  const auto padded = render_cipher_as_image({9}, 2, 2);
  CHECK(padded.samples == std::vector<uint16_t>{9, 0, 0, 0});

  CHECK(render_cipher_as_image({1, 2, 3, 4, 5}, 2, 2) ==
        render_cipher_as_image({1, 2, 3, 4, 6}, 2, 2));
}

// ---- the audit --------------------------------------------------------

TEST_CASE("audit passes on genuine pipeline output") {
  // 256x256 so per-image ciphertext comfortably clears the 7.99 bits/byte
  // gate (finite-sample entropy bias scales like 255 / (2 N ln 2))
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const auto img = make_phantom(seed, 256, 0.03);
    const auto ct = encrypt_pixels(img, seed);
    MaskKey mk;
    mk.key[0] = static_cast<uint8_t>(seed);
    const auto masked = apply_mask(img, derive_mask_plan(mk, 256, 256, 8));

    const auto r = audit(img, ct, masked);
    CHECK(r.ssim_ok);
    CHECK(r.phash_ok);
    CHECK(r.entropy_ok);
    CHECK(r.chi2_ok);
    CHECK(r.pass);
    CHECK(r.ssim_plain_vs_cipher < 0.01);
    CHECK(r.phash_distance >= 20);
    CHECK(r.cipher_entropy >= 7.99);
    CHECK(r.cipher_entropy <= 8.0);
    CHECK(r.histogram_chi2_pvalue > 0.001);
  }
}

TEST_CASE("audit fails the ssim flag on an identity cipher") {
  const auto img = make_phantom(3, 256, 0.03);
  const auto masked = img;
  const auto r = audit(img, pixel_bytes(img), masked);
  CHECK_FALSE(r.ssim_ok);
  CHECK_FALSE(r.pass);
}

TEST_CASE("audit fails on an ECB-style per-block xor") {
  const auto img = make_phantom(4, 256, 0.03);
  auto bytes = pixel_bytes(img);
  uint8_t pad[16];
  Xoshiro256pp rng(88);
  for (auto& p : pad) p = static_cast<uint8_t>(rng.next_below(256));
  for (size_t i = 0; i < bytes.size(); ++i) bytes[i] ^= pad[i % 16];

  const auto r = audit(img, bytes, img);
  CHECK_FALSE(r.pass);
}

TEST_CASE("audit fails the entropy flag on zero bytes") {
  const auto img = make_phantom(5, 256, 0.03);
  const auto r = audit(img, std::vector<uint8_t>(img.pixel_count(), 0), img);
  CHECK_FALSE(r.entropy_ok);
  CHECK_FALSE(r.pass);
}

// ---- masked-domain structure loss ---------------------------------------

TEST_CASE("masking hides most global structure") {
  double total = 0;
  const int n = 100;
  for (uint64_t seed = 0; seed < n; ++seed) {
    const auto img = make_phantom(seed, 64, 0.03);
    MaskKey mk;
    for (int i = 0; i < 8; ++i) mk.key[i] = static_cast<uint8_t>(seed >> (8 * i));
    const auto masked = apply_mask(img, derive_mask_plan(mk, 64, 64, 8));
    total += ssim(img, masked);
  }
  CHECK(total / n < 0.35);
}
