#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

namespace semcrypt {

// splitmix64, used only to expand a user seed into xoshiro state.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

// xoshiro256++ (Blackman/Vigna).  Deterministic across platforms; this is the
// only general-purpose RNG in the library so that seeded runs reproduce
// byte-for-byte.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  uint64_t next() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Unbiased integer in [0, m).
  uint64_t next_below(uint64_t m) {
    if (m == 0) return 0;
    const uint64_t lim = UINT64_MAX - (UINT64_MAX % m + 1) % m;
    uint64_t x;
    do {
      x = next();
    } while (x > lim);
    return x % m;
  }

  // Uniform in [0, 1) with 24 bits of precision; exact in float.
  float next_f32() { return static_cast<float>(next() >> 40) * (1.0f / 16777216.0f); }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_f64() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }

  // Standard normal via Box-Muller; generates pairs, caches the second.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = next_f64();
    } while (u1 <= 0.0);
    u2 = next_f64();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  template <class T>
  void shuffle(T* data, size_t n) {
    if (n < 2) return;
    for (size_t i = n - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(next_below(i + 1));
      T tmp = data[i];
      data[i] = data[j];
      data[j] = tmp;
    }
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Derives a child seed from a parent seed and a small label/index pair.
// Used to give every generated image or worker its own stream.
inline uint64_t derive_seed(uint64_t parent, uint64_t label, uint64_t index = 0) {
  SplitMix64 sm(parent ^ (label * 0x9e3779b97f4a7c15ULL));
  uint64_t x = sm.next();
  SplitMix64 sm2(x ^ index);
  return sm2.next();
}

// Source of salts and IVs for the crypto layer.  Production code uses the OS;
// tests and seeded experiments substitute a deterministic stream.
struct EntropySource {
  virtual ~EntropySource() = default;
  virtual void fill(uint8_t* p, size_t n) = 0;
};

// Reads /dev/urandom.  Throws Err::Internal if the device is unavailable.
class OsEntropy : public EntropySource {
 public:
  void fill(uint8_t* p, size_t n) override;
};

class SeededEntropy : public EntropySource {
 public:
  explicit SeededEntropy(uint64_t seed) : rng_(seed) {}

  void fill(uint8_t* p, size_t n) override {
    size_t i = 0;
    while (i + 8 <= n) {
      uint64_t x = rng_.next();
      for (int b = 0; b < 8; ++b) p[i++] = static_cast<uint8_t>(x >> (8 * b));
    }
    if (i < n) {
      uint64_t x = rng_.next();
      for (int b = 0; b < 8 && i < n; ++b) p[i++] = static_cast<uint8_t>(x >> (8 * b));
    }
  }

 private:
  Xoshiro256pp rng_;
};

}  // namespace semcrypt
