#include <cmath>
#include <cstring>

#include "semcrypt/crypto.hpp"

// SHA-256 per FIPS 180-4.  The round constants are the fractional parts of
// the cube roots of the first 64 primes and the initial state the square
// roots of the first 8; both are computed once at startup instead of being
// transcribed, and the FIPS vectors in the tests pin the result.

namespace semcrypt::crypto {
namespace {

struct Sha256Constants {
  uint32_t k[64];
  uint32_t h0[8];

  Sha256Constants() {
    int found = 0;
    for (int cand = 2; found < 64; ++cand) {
      bool prime = true;
      for (int d = 2; d * d <= cand; ++d) {
        if (cand % d == 0) {
          prime = false;
          break;
        }
      }
      if (!prime) continue;
      const long double cr = cbrtl(static_cast<long double>(cand));
      k[found] = static_cast<uint32_t>((cr - floorl(cr)) * 4294967296.0L);
      if (found < 8) {
        const long double sr = sqrtl(static_cast<long double>(cand));
        h0[found] = static_cast<uint32_t>((sr - floorl(sr)) * 4294967296.0L);
      }
      ++found;
    }
  }
};

const Sha256Constants kC;

uint32_t ror(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

}  // namespace

Sha256::Sha256() { std::memcpy(h_, kC.h0, sizeof h_); }

void Sha256::compress(const uint8_t* p) {
  uint32_t w[64];
  for (int t = 0; t < 16; ++t) {
    w[t] = (static_cast<uint32_t>(p[4 * t]) << 24) | (static_cast<uint32_t>(p[4 * t + 1]) << 16) |
           (static_cast<uint32_t>(p[4 * t + 2]) << 8) | p[4 * t + 3];
  }
  for (int t = 16; t < 64; ++t) {
    const uint32_t s0 = ror(w[t - 15], 7) ^ ror(w[t - 15], 18) ^ (w[t - 15] >> 3);
    const uint32_t s1 = ror(w[t - 2], 17) ^ ror(w[t - 2], 19) ^ (w[t - 2] >> 10);
    w[t] = w[t - 16] + s0 + w[t - 7] + s1;
  }

  uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3];
  uint32_t e = h_[4], f = h_[5], g = h_[6], h = h_[7];
  for (int t = 0; t < 64; ++t) {
    const uint32_t S1 = ror(e, 6) ^ ror(e, 11) ^ ror(e, 25);
    const uint32_t ch = (e & f) ^ (~e & g);
    const uint32_t t1 = h + S1 + ch + kC.k[t] + w[t];
    const uint32_t S0 = ror(a, 2) ^ ror(a, 13) ^ ror(a, 22);
    const uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
    const uint32_t t2 = S0 + maj;
    h = g;
    g = f;
    f = e;
    e = d + t1;
    d = c;
    c = b;
    b = a;
    a = t1 + t2;
  }
  h_[0] += a;
  h_[1] += b;
  h_[2] += c;
  h_[3] += d;
  h_[4] += e;
  h_[5] += f;
  h_[6] += g;
  h_[7] += h;
}

void Sha256::update(const uint8_t* data, size_t n) {
  total_ += n;
  while (n > 0) {
    const size_t take = std::min(n, sizeof buf_ - buf_len_);
    std::memcpy(buf_ + buf_len_, data, take);
    buf_len_ += take;
    data += take;
    n -= take;
    if (buf_len_ == sizeof buf_) {
      compress(buf_);
      buf_len_ = 0;
    }
  }
}

Digest Sha256::finish() {
  const uint64_t bit_len = total_ * 8;
  const uint8_t one = 0x80;
  update(&one, 1);
  const uint8_t zero = 0;
  while (buf_len_ != 56) update(&zero, 1);
  uint8_t len_be[8];
  for (int i = 0; i < 8; ++i) len_be[i] = static_cast<uint8_t>(bit_len >> (56 - 8 * i));
  // bypass total_ accounting for the length block itself
  std::memcpy(buf_ + 56, len_be, 8);
  compress(buf_);
  buf_len_ = 0;

  Digest out;
  for (int i = 0; i < 8; ++i) {
    out[4 * i] = static_cast<uint8_t>(h_[i] >> 24);
    out[4 * i + 1] = static_cast<uint8_t>(h_[i] >> 16);
    out[4 * i + 2] = static_cast<uint8_t>(h_[i] >> 8);
    out[4 * i + 3] = static_cast<uint8_t>(h_[i]);
  }
  return out;
}

Digest sha256(const uint8_t* data, size_t n) {
  Sha256 s;
  s.update(data, n);
  return s.finish();
}

Digest sha256(const std::vector<uint8_t>& data) { return sha256(data.data(), data.size()); }

Digest hmac_sha256(const uint8_t* key, size_t key_len, const uint8_t* data, size_t n) {
  uint8_t k[64] = {0};
  if (key_len > 64) {
    const Digest kd = sha256(key, key_len);
    std::memcpy(k, kd.data(), kd.size());
  } else {
    std::memcpy(k, key, key_len);
  }

  uint8_t ipad[64], opad[64];
  for (int i = 0; i < 64; ++i) {
    ipad[i] = static_cast<uint8_t>(k[i] ^ 0x36);
    opad[i] = static_cast<uint8_t>(k[i] ^ 0x5c);
  }

  Sha256 inner;
  inner.update(ipad, 64);
  inner.update(data, n);
  const Digest id = inner.finish();

  Sha256 outer;
  outer.update(opad, 64);
  outer.update(id.data(), id.size());
  return outer.finish();
}

bool ct_equal(const uint8_t* a, const uint8_t* b, size_t n) {
  volatile uint8_t acc = 0;
  for (size_t i = 0; i < n; ++i) acc = static_cast<uint8_t>(acc | (a[i] ^ b[i]));
  return acc == 0;
}

}  // namespace semcrypt::crypto
