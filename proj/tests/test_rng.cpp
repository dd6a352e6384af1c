#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <vector>

#include "semcrypt/rng.hpp"

using namespace semcrypt;

TEST_CASE("same seed reproduces the same stream") {
  Xoshiro256pp a(12345), b(12345);
  for (int i = 0; i < 1000; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("different seeds diverge") {
  Xoshiro256pp a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.next() == b.next()) ++same;
  }
  CHECK(same == 0);
}

TEST_CASE("next_f32 stays in [0,1) and is roughly uniform") {
  Xoshiro256pp rng(7);
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const float x = rng.next_f32();
    REQUIRE(x >= 0.0f);
    REQUIRE(x < 1.0f);
    sum += x;
  }
  // se of the mean is ~1/sqrt(12n) ~ 0.00065; allow 5 sigma
  CHECK(std::abs(sum / n - 0.5) < 0.0033);
}

TEST_CASE("next_below is in range and unbiased enough") {
  Xoshiro256pp rng(99);
  const uint64_t m = 7;
  std::vector<int> counts(m, 0);
  const int n = 140000;
  for (int i = 0; i < n; ++i) {
    const uint64_t x = rng.next_below(m);
    REQUIRE(x < m);
    ++counts[x];
  }
  const double expect = static_cast<double>(n) / m;
  for (auto c : counts) CHECK(std::abs(c - expect) < 6.0 * std::sqrt(expect));
}

TEST_CASE("next_below handles edge moduli") {
  Xoshiro256pp rng(3);
  CHECK(rng.next_below(1) == 0);
  CHECK(rng.next_below(0) == 0);
}

TEST_CASE("gaussian moments") {
  Xoshiro256pp rng(2024);
  const int n = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_gaussian();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.012);        // ~5 sigma of the sample mean
  CHECK(std::abs(var - 1.0) < 0.017);   // ~5 sigma of the sample variance
}

TEST_CASE("shuffle preserves the multiset and permutes") {
  Xoshiro256pp rng(5);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  auto orig = v;
  rng.shuffle(v.data(), v.size());
  CHECK(v != orig);
  std::sort(v.begin(), v.end());
  CHECK(v == orig);
}

TEST_CASE("derive_seed separates labels and indices") {
  const uint64_t s = 42;
  CHECK(derive_seed(s, 0, 0) != derive_seed(s, 1, 0));
  CHECK(derive_seed(s, 0, 0) != derive_seed(s, 0, 1));
  CHECK(derive_seed(s, 0, 0) == derive_seed(s, 0, 0));
  CHECK(derive_seed(1, 0, 0) != derive_seed(2, 0, 0));
}

TEST_CASE("seeded entropy source is deterministic and exact-length") {
  SeededEntropy e1(77), e2(77);
  uint8_t a[37], b[37];
  e1.fill(a, sizeof a);
  e2.fill(b, sizeof b);
  CHECK(std::equal(a, a + sizeof a, b));
}

TEST_CASE("os entropy produces differing buffers") {
  OsEntropy os;
  uint8_t a[32], b[32];
  os.fill(a, sizeof a);
  os.fill(b, sizeof b);
  CHECK(!std::equal(a, a + sizeof a, b));
}
