#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "semcrypt/codec.hpp"
#include "semcrypt/error.hpp"
#include "semcrypt/image.hpp"
#include "semcrypt/phantom.hpp"
#include "semcrypt/rangecoder.hpp"
#include "semcrypt/rng.hpp"
#include "semcrypt/simd.hpp"

using namespace semcrypt;
using namespace semcrypt::codec;

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

ImageBuffer random_image(uint32_t w, uint32_t h, int bit_depth, uint64_t seed) {
  ImageBuffer img = make_image(w, h, bit_depth);
  Xoshiro256pp rng(seed);
  for (auto& s : img.samples) s = static_cast<uint16_t>(rng.next_below(img.max_value() + 1));
  return img;
}

ImageBuffer test_phantom(uint64_t seed, uint32_t size = 64, double sigma = 0.01) {
  PhantomSpec spec;
  spec.class_label = static_cast<PhantomClass>(seed % 3);
  spec.size = size;
  spec.seed = seed;
  spec.noise_sigma = sigma;
  return phantom_generate(spec);
}

}  // namespace

// ---- range coder --------------------------------------------------------

TEST_CASE("range coder round-trips byte streams") {
  Xoshiro256pp rng(101);
  for (size_t len : {size_t{1}, size_t{2}, size_t{5}, size_t{64}, size_t{1000}, size_t{4097}}) {
    std::vector<uint8_t> raw(len);
    for (auto& b : raw) b = static_cast<uint8_t>(rng.next_below(256));

    ByteModel em;
    RangeEncoder enc;
    for (uint8_t b : raw) enc.encode_byte(em, b);
    const auto coded = enc.finish();

    ByteModel dm;
    RangeDecoder dec(coded.data(), coded.size());
    for (size_t i = 0; i < len; ++i) REQUIRE(dec.decode_byte(dm) == raw[i]);
    CHECK(dec.overread() == 0);
  }
}

TEST_CASE("range coder round-trips skewed streams and adapts") {
  // 95% zeros with occasional other symbols; adaptive model should land well
  // under one bit per symbol.
  Xoshiro256pp rng(202);
  std::vector<uint8_t> raw(20000);
  for (auto& b : raw) b = rng.next_below(20) == 0 ? static_cast<uint8_t>(rng.next_below(4)) : 0;

  ByteModel em;
  RangeEncoder enc;
  for (uint8_t b : raw) enc.encode_byte(em, b);
  const auto coded = enc.finish();
  CHECK(coded.size() < raw.size() / 8);

  ByteModel dm;
  RangeDecoder dec(coded.data(), coded.size());
  for (size_t i = 0; i < raw.size(); ++i) REQUIRE(dec.decode_byte(dm) == raw[i]);
  CHECK(dec.overread() == 0);
}

TEST_CASE("range coder output is deterministic") {
  std::vector<uint8_t> raw(512);
  Xoshiro256pp rng(303);
  for (auto& b : raw) b = static_cast<uint8_t>(rng.next_below(256));
  auto run = [&] {
    ByteModel m;
    RangeEncoder enc;
    for (uint8_t b : raw) enc.encode_byte(m, b);
    return enc.finish();
  };
  CHECK(run() == run());
}

TEST_CASE("byte model total saturates at the 12-bit cap") {
  ByteModel m;
  CHECK(m.total() == 256);
  for (int i = 0; i < 100000; ++i) m.update(static_cast<uint8_t>(i % 7));
  CHECK(m.total() <= (1u << 12));

  uint32_t cum, freq, total;
  m.lookup(3, cum, freq, total);
  CHECK(total == m.total());
  CHECK(freq >= 1);
  uint32_t c2, f2;
  CHECK(m.find(cum, c2, f2) == 3);
  CHECK(c2 == cum);
  CHECK(f2 == freq);
}

TEST_CASE("truncated range-coded stream reports overread") {
  std::vector<uint8_t> raw(100, 42);
  ByteModel em;
  RangeEncoder enc;
  for (uint8_t b : raw) enc.encode_byte(em, b);
  auto coded = enc.finish();
  coded.resize(coded.size() / 2);

  ByteModel dm;
  RangeDecoder dec(coded.data(), coded.size());
  for (size_t i = 0; i < raw.size(); ++i) (void)dec.decode_byte(dm);
  CHECK(dec.overread() > 0);
}

// ---- wavelet transforms ---------------------------------------------------

TEST_CASE("5/3 annihilates constant planes") {
  for (auto [w, h, levels] : {std::tuple<uint32_t, uint32_t, int>{16, 16, 3},
                              {64, 64, 5},
                              {31, 17, 4},
                              {33, 65, 5}}) {
    std::vector<int32_t> plane(static_cast<size_t>(w) * h, 37);
    dwt53_forward(plane, w, h, levels);

    uint32_t cw = w, ch = h;
    for (int l = 0; l < levels; ++l) {
      cw = (cw + 1) / 2;
      ch = (ch + 1) / 2;
    }
    for (uint32_t y = 0; y < h; ++y) {
      for (uint32_t x = 0; x < w; ++x) {
        const int32_t want = (x < cw && y < ch) ? 37 : 0;
        REQUIRE(plane[static_cast<size_t>(y) * w + x] == want);
      }
    }
  }
}

TEST_CASE("5/3 inverse restores random planes bit-exactly") {
  Xoshiro256pp rng(404);
  for (auto [w, h] : {std::pair<uint32_t, uint32_t>{8, 8},
                      {16, 16},
                      {17, 9},
                      {64, 64},
                      {33, 65},
                      {128, 31}}) {
    const int lmax = max_levels_for(w, h);
    for (int levels = 1; levels <= lmax; ++levels) {
      std::vector<int32_t> plane(static_cast<size_t>(w) * h);
      for (auto& v : plane) v = static_cast<int32_t>(rng.next_below(65536)) - 32768;
      const auto original = plane;
      dwt53_forward(plane, w, h, levels);
      dwt53_inverse(plane, w, h, levels);
      REQUIRE(plane == original);
    }
  }
}

TEST_CASE("9/7 round-trip error stays under one intensity step") {
  Xoshiro256pp rng(505);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> plane(32 * 32);
    std::vector<int> original(32 * 32);
    for (size_t i = 0; i < plane.size(); ++i) {
      original[i] = static_cast<int>(rng.next_below(256)) - 128;
      plane[i] = static_cast<float>(original[i]);
    }
    dwt97_forward(plane, 32, 32, 3);
    dwt97_inverse(plane, 32, 32, 3);
    for (size_t i = 0; i < plane.size(); ++i) {
      REQUIRE(std::abs(std::lround(plane[i]) - original[i]) <= 1);
    }
  }
}

TEST_CASE("9/7 on a constant plane: near-zero details, unit DC gain") {
  std::vector<float> plane(64 * 64, 100.0f);
  dwt97_forward(plane, 64, 64, 4);
  for (uint32_t y = 0; y < 64; ++y) {
    for (uint32_t x = 0; x < 64; ++x) {
      const float v = plane[y * 64 + x];
      if (x < 4 && y < 4) {
        REQUIRE(v == doctest::Approx(100.0f).epsilon(1e-4));
      } else {
        REQUIRE(std::abs(v) < 1e-2f);
      }
    }
  }
}

TEST_CASE("dwt rejects undersized planes") {
  std::vector<int32_t> plane(8 * 8, 0);
  CHECK(thrown_code([&] { dwt53_forward(plane, 8, 8, 4); }) == Err::DimensionTooSmall);
  CHECK(thrown_code([&] { dwt53_forward(plane, 8, 8, 0); }) == Err::DimensionTooSmall);
  std::vector<float> fplane(8 * 8, 0.0f);
  CHECK(thrown_code([&] { dwt97_forward(fplane, 8, 8, 7); }) == Err::DimensionTooSmall);
}

TEST_CASE("level helpers") {
  CHECK(max_levels_for(64, 64) == 6);
  CHECK(max_levels_for(31, 64) == 4);
  CHECK(max_levels_for(1, 64) == 0);
  CHECK(max_levels_for(1024, 1024) == 6);
  CHECK(default_levels(64, 64) == 5);
  CHECK(default_levels(16, 16) == 4);
  CHECK(default_levels(4096, 4096) == 5);
}

// ---- quantizer ------------------------------------------------------------

TEST_CASE("dead-zone quantizer worked examples") {
  CHECK(quantize_coeff(10.2f, 4.0) == 2);
  CHECK(dequantize_coeff(2, 4.0) == doctest::Approx(10.0f));
  CHECK(quantize_coeff(-10.2f, 4.0) == -2);
  CHECK(dequantize_coeff(-2, 4.0) == doctest::Approx(-10.0f));
  CHECK(quantize_coeff(0.0f, 4.0) == 0);
  CHECK(dequantize_coeff(0, 4.0) == 0.0f);

  // step 1 on integer inputs: q equals the input, reconstruction sits at the
  // half-step midpoint
  for (int c : {-5, -1, 1, 2, 17}) {
    CHECK(quantize_coeff(static_cast<float>(c), 1.0) == c);
    CHECK(dequantize_coeff(c, 1.0) ==
          doctest::Approx(c + (c > 0 ? 0.5 : -0.5)));
  }
}

TEST_CASE("subband step halves per level") {
  CHECK(subband_qstep(2.0, 1) == doctest::Approx(1.0));
  CHECK(subband_qstep(2.0, 2) == doctest::Approx(0.5));
  CHECK(subband_qstep(2.0, 5) == doctest::Approx(0.0625));
}

// ---- codestream round trips -------------------------------------------

TEST_CASE("lossless decode(encode(x)) is the identity") {
  for (auto [w, h] : {std::pair<uint32_t, uint32_t>{16, 16}, {64, 64}, {33, 65}, {128, 32}}) {
    for (int bd : {8, 16}) {
      const auto img = random_image(w, h, bd, w * 1000 + h + bd);
      const auto bytes = encode(img, {CodecMode::Lossless53, 0, 0.0f});
      CHECK(decode(bytes) == img);
    }
  }
}

TEST_CASE("lossless identity on the phantom corpus") {
  for (uint64_t seed = 0; seed < 30; ++seed) {
    const auto img = test_phantom(seed, 48, 0.03);
    EncodeParams p;
    p.mode = CodecMode::Lossless53;
    p.levels = static_cast<int>(seed % 4) + 1;
    CHECK(decode(encode(img, p)) == img);
  }
}

TEST_CASE("explicit level counts round-trip") {
  const auto img = random_image(64, 64, 8, 99);
  for (int levels = 1; levels <= 6; ++levels) {
    EncodeParams p;
    p.levels = levels;
    const auto bytes = encode(img, p);
    CHECK(parse_codestream_header(bytes).levels == levels);
    CHECK(decode(bytes) == img);
  }
}

TEST_CASE("constant image compresses to near-header size") {
  ImageBuffer img = make_image(64, 64, 8);
  std::fill(img.samples.begin(), img.samples.end(), uint16_t{200});
  const auto bytes = encode(img, {});
  CHECK(bytes.size() <= 120);
  CHECK(decode(bytes) == img);
}

TEST_CASE("header fields survive the round trip") {
  const auto img = random_image(48, 32, 16, 7);
  EncodeParams p;
  p.mode = CodecMode::Lossy97;
  p.levels = 3;
  p.base_qstep = 1.5f;
  const auto bytes = encode(img, p);

  const auto info = parse_codestream_header(bytes);
  CHECK(info.mode == CodecMode::Lossy97);
  CHECK(info.width == 48);
  CHECK(info.height == 32);
  CHECK(info.levels == 3);
  CHECK(info.bit_depth == 16);
  CHECK(info.base_qstep == doctest::Approx(1.5f));
  CHECK(info.subband_count == 10);

  const auto lossless = encode(img, {});
  CHECK(parse_codestream_header(lossless).base_qstep == 0.0f);
}

TEST_CASE("lossy quality gate at the default step") {
  // Default parameters must clear 4:1 compression at 35 dB on smooth
  // phantom content; this mirrors the calibrated CLI default.
  double worst_psnr = 1e9;
  double worst_ratio = 1e9;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto img = test_phantom(seed, 128, 0.01);
    EncodeParams p;
    p.mode = CodecMode::Lossy97;
    const auto bytes = encode(img, p);
    const auto rec = decode(bytes);
    const double raw = static_cast<double>(img.pixel_count()) * (img.bit_depth / 8);
    worst_ratio = std::min(worst_ratio, raw / static_cast<double>(bytes.size()));
    worst_psnr = std::min(worst_psnr, psnr(rec, img));
  }
  CHECK(worst_ratio >= 4.0);
  CHECK(worst_psnr >= 35.0);
}

TEST_CASE("mean codestream size shrinks as the step grows") {
  std::vector<ImageBuffer> corpus;
  for (uint64_t seed = 0; seed < 20; ++seed) corpus.push_back(test_phantom(seed, 64, 0.01));
  double prev = 1e18;
  for (float q : {0.5f, 1.0f, 2.0f, 4.0f}) {
    double total = 0;
    for (const auto& img : corpus) {
      EncodeParams p;
      p.mode = CodecMode::Lossy97;
      p.base_qstep = q;
      total += static_cast<double>(encode(img, p).size());
    }
    const double mean = total / corpus.size();
    CHECK(mean < prev);
    prev = mean;
  }
}

TEST_CASE("lossless mean size stays under half the raw bytes") {
  // smooth corpus: low-noise phantoms, large enough that the silhouette
  // contour is a small share of the coefficient budget
  double total = 0;
  double raw = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const auto img = test_phantom(seed, 128, 0.002);
    total += static_cast<double>(encode(img, {}).size());
    raw += static_cast<double>(img.pixel_count());
  }
  CHECK(total <= 0.5 * raw);
}

TEST_CASE("encode bytes agree across kernel backends") {
  if (!simd::available(simd::Backend::Avx2)) {
    MESSAGE("AVX2 unavailable, cross-backend encode not exercised");
    return;
  }
  const auto img = test_phantom(3, 96, 0.02);
  EncodeParams lossy{CodecMode::Lossy97, 4, 2.0f};

  simd::force_backend(simd::Backend::Scalar);
  const auto lossless_s = encode(img, {});
  const auto lossy_s = encode(img, lossy);
  simd::force_backend(simd::Backend::Avx2);
  const auto lossless_v = encode(img, {});
  const auto lossy_v = encode(img, lossy);
  simd::force_backend(simd::Backend::Scalar);

  CHECK(lossless_v == lossless_s);
  CHECK(lossy_v == lossy_s);
}

// ---- malformed input ----------------------------------------------------

TEST_CASE("encode parameter validation") {
  const auto img = random_image(64, 64, 8, 1);
  CHECK(thrown_code([&] { encode(img, {CodecMode::Lossless53, 7, 0.0f}); }) ==
        Err::DimensionTooSmall);
  CHECK(thrown_code([&] { encode(img, {CodecMode::Lossless53, -1, 0.0f}); }) ==
        Err::DimensionTooSmall);
  CHECK(thrown_code([&] { encode(img, {CodecMode::Lossy97, 3, 0.0f}); }) == Err::UsageError);
  CHECK(thrown_code([&] { encode(img, {CodecMode::Lossy97, 3, -2.0f}); }) == Err::UsageError);

  const auto tiny = random_image(8, 8, 8, 2);
  CHECK(thrown_code([&] { encode(tiny, {CodecMode::Lossless53, 4, 0.0f}); }) ==
        Err::DimensionTooSmall);
}

TEST_CASE("decode header validation") {
  const auto img = random_image(64, 64, 8, 3);
  const auto good = encode(img, {});

  auto patched = [&](size_t off, uint8_t value) {
    auto b = good;
    b[off] = value;
    return b;
  };

  CHECK(thrown_code([&] { decode(patched(0, 'X')); }) == Err::BadMagic);
  CHECK(thrown_code([&] { decode(patched(4, 2)); }) == Err::BadMagic);
  CHECK(thrown_code([&] { decode(patched(5, 9)); }) == Err::HeaderFieldOutOfRange);
  CHECK(thrown_code([&] { decode(patched(15, 12)); }) == Err::HeaderFieldOutOfRange);
  CHECK(thrown_code([&] { decode(patched(20, 9)); }) == Err::HeaderFieldOutOfRange);

  // levels = 7 exceeds both the format cap and floor(log2(64))
  auto deep = good;
  deep[14] = 7;
  deep[20] = 22;
  CHECK(thrown_code([&] { decode(deep); }) == Err::HeaderFieldOutOfRange);

  // zero width
  auto zw = good;
  zw[6] = zw[7] = zw[8] = zw[9] = 0;
  CHECK(thrown_code([&] { decode(zw); }) == Err::HeaderFieldOutOfRange);

  // lossless stream must carry qstep 0
  auto qs = good;
  qs[16] = 0x00;
  qs[17] = 0x00;
  qs[18] = 0x80;
  qs[19] = 0x3f;  // 1.0f
  CHECK(thrown_code([&] { decode(qs); }) == Err::HeaderFieldOutOfRange);

  CHECK(thrown_code([&] { decode({}); }) == Err::BadMagic);
  CHECK(thrown_code([&] { decode({'J', '2'}); }) == Err::BadMagic);
}

TEST_CASE("every truncation of a valid stream fails cleanly") {
  const auto img = random_image(32, 24, 8, 11);
  const auto good = encode(img, {});
  for (size_t len = 0; len < good.size(); ++len) {
    std::vector<uint8_t> cut(good.begin(), good.begin() + len);
    const Err code = thrown_code([&] { decode(cut); });
    CHECK((code == Err::BadMagic || code == Err::CorruptPayload));
  }

  auto padded = good;
  padded.push_back(0);
  CHECK(thrown_code([&] { decode(padded); }) == Err::CorruptPayload);
}

TEST_CASE("single-byte mutations never crash the decoder") {
  const auto img = test_phantom(5, 64, 0.02);
  const auto good = encode(img, {});
  Xoshiro256pp rng(606);
  int decoded = 0, rejected = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    auto bytes = good;
    const size_t off = rng.next_below(bytes.size());
    bytes[off] ^= static_cast<uint8_t>(1 + rng.next_below(255));
    try {
      const auto out = decode(bytes);
      CHECK(out.pixel_count() > 0);
      ++decoded;
    } catch (const Error& e) {
      CHECK(e.cls() == ErrorClass::Data);
      ++rejected;
    }
  }
  // both outcomes should appear across 2000 trials
  CHECK(decoded > 0);
  CHECK(rejected > 0);
}
