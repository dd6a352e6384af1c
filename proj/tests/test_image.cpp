#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "semcrypt/error.hpp"
#include "semcrypt/image.hpp"
#include "semcrypt/phantom.hpp"
#include "semcrypt/rng.hpp"

using namespace semcrypt;

TEST_CASE("normalize window midpoint and clamp") {
  ImageBuffer img = make_image(2, 1, 16);
  img.samples = {128, 5000};

  auto a = normalize_to_8bit(img, Window{128, 256});
  CHECK(a.bit_depth == 8);
  CHECK(a.width == 2);
  CHECK(a.samples[0] == 128);  // 255*128/256 = 127.5, rounds half away from zero

  auto b = normalize_to_8bit(img, Window{100, 1});
  CHECK(b.samples[1] == 255);
}

TEST_CASE("normalize is monotone over a full 12-bit ramp") {
  ImageBuffer ramp = make_image(4096, 1, 16);
  for (uint32_t i = 0; i < 4096; ++i) ramp.samples[i] = static_cast<uint16_t>(i);
  auto out = normalize_to_8bit(ramp, Window{2048, 4096});
  for (uint32_t i = 1; i < 4096; ++i) CHECK(out.samples[i] >= out.samples[i - 1]);
  CHECK(out.samples[0] == 0);
  CHECK(out.samples[4095] == 255);
}

TEST_CASE("normalize monotone for random windows") {
  Xoshiro256pp rng(11);
  for (int t = 0; t < 50; ++t) {
    const Window w{rng.next_f64() * 70000.0 - 2000.0, 1.0 + rng.next_f64() * 70000.0};
    ImageBuffer img = make_image(256, 1, 16);
    for (auto& v : img.samples) v = static_cast<uint16_t>(rng.next_below(65536));
    auto out = normalize_to_8bit(img, w);
    for (uint32_t i = 0; i < 256; ++i) {
      for (uint32_t j = 0; j < 256; ++j) {
        if (img.samples[i] <= img.samples[j]) {
          if (out.samples[i] > out.samples[j]) {
            REQUIRE(out.samples[i] <= out.samples[j]);
          }
        }
      }
    }
  }
}

TEST_CASE("resize identity and constants") {
  Xoshiro256pp rng(3);
  ImageBuffer img = make_image(7, 5, 8);
  for (auto& v : img.samples) v = static_cast<uint16_t>(rng.next_below(256));

  CHECK(resize_bilinear(img, 7, 5) == img);

  ImageBuffer c = make_image(9, 4, 8, 77);
  auto r = resize_bilinear(c, 17, 3);
  for (auto v : r.samples) CHECK(v == 77);
}

TEST_CASE("resize 2x1 to 4x1 matches hand evaluation") {
  // source coord = (i+0.5)*0.5 - 0.5 for i=0..3 gives -0.25, 0.25, 0.75, 1.25;
  // clamped and interpolated over [0,100] that is 0, 25, 75, 100
  ImageBuffer img = make_image(2, 1, 8);
  img.samples = {0, 100};
  auto out = resize_bilinear(img, 4, 1);
  CHECK(out.samples == std::vector<uint16_t>({0, 25, 75, 100}));
}

TEST_CASE("resize output stays within input range") {
  Xoshiro256pp rng(19);
  for (int t = 0; t < 20; ++t) {
    ImageBuffer img = make_image(5 + t, 3 + t, 8);
    for (auto& v : img.samples) v = static_cast<uint16_t>(rng.next_below(256));
    const auto [lo_it, hi_it] = std::minmax_element(img.samples.begin(), img.samples.end());
    auto out = resize_bilinear(img, 2 * t + 3, t + 2);
    for (auto v : out.samples) {
      CHECK(v >= *lo_it);
      CHECK(v <= *hi_it);
    }
  }
}

TEST_CASE("psnr basics") {
  ImageBuffer a = make_image(2, 1, 8);
  a.samples = {0, 0};
  ImageBuffer b = make_image(2, 1, 8);
  b.samples = {0, 16};

  CHECK(psnr(a, a) == std::numeric_limits<double>::infinity());
  CHECK(psnr(a, b) == doctest::Approx(27.059).epsilon(0.001));
  CHECK(psnr(a, b) == psnr(b, a));

  ImageBuffer c = make_image(1, 2, 8);
  c.samples = {0, 0};
  CHECK_THROWS_AS(psnr(a, c), Error);
  try {
    psnr(a, c);
  } catch (const Error& e) {
    CHECK(e.code() == Err::DimensionMismatch);
  }
}

TEST_CASE("pgm round-trips both depths") {
  Xoshiro256pp rng(101);
  for (int depth : {8, 16}) {
    ImageBuffer img = make_image(13, 7, depth);
    for (auto& v : img.samples) {
      v = static_cast<uint16_t>(rng.next_below(depth == 8 ? 256 : 65536));
    }
    CHECK(pgm_decode(pgm_encode(img)) == img);
  }
}

TEST_CASE("pgm header layout is canonical") {
  ImageBuffer img = make_image(2, 2, 8);
  img.samples = {1, 2, 3, 4};
  auto bytes = pgm_encode(img);
  const std::string head(bytes.begin(), bytes.begin() + 11);
  CHECK(head == "P5\n2 2\n255\n");
  CHECK(bytes.size() == 11 + 4);
  CHECK(bytes[11] == 1);
  CHECK(bytes[14] == 4);
}

TEST_CASE("pgm decode rejects malformed input") {
  auto good = pgm_encode(make_image(4, 4, 8, 9));

  auto bad_magic = good;
  bad_magic[1] = '6';
  CHECK_THROWS_AS(pgm_decode(bad_magic), Error);

  auto truncated = good;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(pgm_decode(truncated), Error);
}

TEST_CASE("phantom determinism and class structure") {
  const PhantomSpec spec{PhantomClass::Nodule, 64, 1234, 0.02};
  CHECK(phantom_generate(spec) == phantom_generate(spec));

  const PhantomSpec clear{PhantomClass::ClearField, 64, 9, 0.0};
  auto img = phantom_generate(clear);
  const auto [lo, hi] = std::minmax_element(img.samples.begin(), img.samples.end());
  CHECK(*hi - *lo <= 255);
  CHECK(*hi - *lo > 30);
  // through the body center the vertical gradient runs dark to bright
  CHECK(img.at(32, 0) < img.at(32, 63));
  // left and right margins are air, far darker than the thorax
  CHECK(img.at(0, 32) < 20);
  CHECK(img.at(63, 32) < 20);
  CHECK(img.at(32, 32) > 80);
}

TEST_CASE("nodule phantoms are brighter than clear fields on average") {
  double nodule_sum = 0, clear_sum = 0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    auto nod = phantom_generate({PhantomClass::Nodule, 64, static_cast<uint64_t>(i), 0.03});
    auto clr = phantom_generate({PhantomClass::ClearField, 64, static_cast<uint64_t>(i), 0.03});
    for (auto v : nod.samples) nodule_sum += v;
    for (auto v : clr.samples) clear_sum += v;
  }
  CHECK(nodule_sum > clear_sum);
}

TEST_CASE("phantom class names round-trip") {
  for (auto c : {PhantomClass::Nodule, PhantomClass::LinearOpacity, PhantomClass::ClearField}) {
    CHECK(phantom_class_from_name(phantom_class_name(c)) == c);
  }
  CHECK_THROWS_AS(phantom_class_from_name("sparkle"), Error);
}
