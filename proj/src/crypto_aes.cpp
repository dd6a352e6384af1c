#include <cstring>

#include "semcrypt/crypto.hpp"
#include "semcrypt/error.hpp"

// AES-128/256 in CBC mode per FIPS-197 and SP 800-38A.  Byte-oriented
// implementation; the S-box is generated from its algebraic definition
// (GF(2^8) inverse + affine map) and pinned by the NIST vectors in tests.

namespace semcrypt::crypto {
namespace {

uint8_t gf_mul(uint8_t a, uint8_t b) {
  uint8_t r = 0;
  while (b) {
    if (b & 1) r ^= a;
    const bool hi = a & 0x80;
    a = static_cast<uint8_t>(a << 1);
    if (hi) a ^= 0x1b;
    b >>= 1;
  }
  return r;
}

struct AesTables {
  uint8_t sbox[256];
  uint8_t inv_sbox[256];

  AesTables() {
    for (int x = 0; x < 256; ++x) {
      uint8_t inv = 0;
      if (x != 0) {
        for (int y = 1; y < 256; ++y) {
          if (gf_mul(static_cast<uint8_t>(x), static_cast<uint8_t>(y)) == 1) {
            inv = static_cast<uint8_t>(y);
            break;
          }
        }
      }
      // affine transform: b ^ rotl(b,1) ^ rotl(b,2) ^ rotl(b,3) ^ rotl(b,4) ^ 0x63
      auto rotl8 = [](uint8_t v, int n) {
        return static_cast<uint8_t>((v << n) | (v >> (8 - n)));
      };
      sbox[x] = static_cast<uint8_t>(inv ^ rotl8(inv, 1) ^ rotl8(inv, 2) ^ rotl8(inv, 3) ^
                                     rotl8(inv, 4) ^ 0x63);
    }
    for (int x = 0; x < 256; ++x) inv_sbox[sbox[x]] = static_cast<uint8_t>(x);
  }
};

const AesTables kT;

// State bytes indexed [4*col + row], matching the FIPS-197 input ordering.
struct AesKey {
  uint8_t round_keys[15 * 16];
  int rounds;
};

AesKey expand_key(const std::vector<uint8_t>& key) {
  require(key.size() == 16 || key.size() == 32, Err::InvalidKeyLength,
          "AES key must be 16 or 32 bytes");
  const int nk = static_cast<int>(key.size() / 4);
  const int nr = nk + 6;  // 10 or 14

  uint8_t w[60][4];
  std::memcpy(w, key.data(), key.size());

  uint8_t rcon = 1;
  for (int i = nk; i < 4 * (nr + 1); ++i) {
    uint8_t t[4];
    std::memcpy(t, w[i - 1], 4);
    if (i % nk == 0) {
      const uint8_t tmp = t[0];
      t[0] = static_cast<uint8_t>(kT.sbox[t[1]] ^ rcon);
      t[1] = kT.sbox[t[2]];
      t[2] = kT.sbox[t[3]];
      t[3] = kT.sbox[tmp];
      rcon = gf_mul(rcon, 2);
    } else if (nk == 8 && i % nk == 4) {
      for (int j = 0; j < 4; ++j) t[j] = kT.sbox[t[j]];
    }
    for (int j = 0; j < 4; ++j) w[i][j] = static_cast<uint8_t>(w[i - nk][j] ^ t[j]);
  }

  AesKey out;
  out.rounds = nr;
  std::memcpy(out.round_keys, w, static_cast<size_t>(nr + 1) * 16);
  return out;
}

void add_round_key(uint8_t* s, const uint8_t* rk) {
  for (int i = 0; i < 16; ++i) s[i] ^= rk[i];
}

void sub_bytes(uint8_t* s) {
  for (int i = 0; i < 16; ++i) s[i] = kT.sbox[s[i]];
}

void inv_sub_bytes(uint8_t* s) {
  for (int i = 0; i < 16; ++i) s[i] = kT.inv_sbox[s[i]];
}

// Row r of the state lives at indices r, r+4, r+8, r+12; rotate left by r.
void shift_rows(uint8_t* s) {
  uint8_t t = s[1];
  s[1] = s[5]; s[5] = s[9]; s[9] = s[13]; s[13] = t;
  std::swap(s[2], s[10]);
  std::swap(s[6], s[14]);
  t = s[15];
  s[15] = s[11]; s[11] = s[7]; s[7] = s[3]; s[3] = t;
}

void inv_shift_rows(uint8_t* s) {
  uint8_t t = s[13];
  s[13] = s[9]; s[9] = s[5]; s[5] = s[1]; s[1] = t;
  std::swap(s[2], s[10]);
  std::swap(s[6], s[14]);
  t = s[3];
  s[3] = s[7]; s[7] = s[11]; s[11] = s[15]; s[15] = t;
}

void mix_columns(uint8_t* s) {
  for (int c = 0; c < 4; ++c) {
    uint8_t* p = s + 4 * c;
    const uint8_t a0 = p[0], a1 = p[1], a2 = p[2], a3 = p[3];
    p[0] = static_cast<uint8_t>(gf_mul(a0, 2) ^ gf_mul(a1, 3) ^ a2 ^ a3);
    p[1] = static_cast<uint8_t>(a0 ^ gf_mul(a1, 2) ^ gf_mul(a2, 3) ^ a3);
    p[2] = static_cast<uint8_t>(a0 ^ a1 ^ gf_mul(a2, 2) ^ gf_mul(a3, 3));
    p[3] = static_cast<uint8_t>(gf_mul(a0, 3) ^ a1 ^ a2 ^ gf_mul(a3, 2));
  }
}

void inv_mix_columns(uint8_t* s) {
  for (int c = 0; c < 4; ++c) {
    uint8_t* p = s + 4 * c;
    const uint8_t a0 = p[0], a1 = p[1], a2 = p[2], a3 = p[3];
    p[0] = static_cast<uint8_t>(gf_mul(a0, 14) ^ gf_mul(a1, 11) ^ gf_mul(a2, 13) ^ gf_mul(a3, 9));
    p[1] = static_cast<uint8_t>(gf_mul(a0, 9) ^ gf_mul(a1, 14) ^ gf_mul(a2, 11) ^ gf_mul(a3, 13));
    p[2] = static_cast<uint8_t>(gf_mul(a0, 13) ^ gf_mul(a1, 9) ^ gf_mul(a2, 14) ^ gf_mul(a3, 11));
    p[3] = static_cast<uint8_t>(gf_mul(a0, 11) ^ gf_mul(a1, 13) ^ gf_mul(a2, 9) ^ gf_mul(a3, 14));
  }
}

void encrypt_block(const AesKey& k, uint8_t* s) {
  add_round_key(s, k.round_keys);
  for (int r = 1; r < k.rounds; ++r) {
    sub_bytes(s);
    shift_rows(s);
    mix_columns(s);
    add_round_key(s, k.round_keys + 16 * r);
  }
  sub_bytes(s);
  shift_rows(s);
  add_round_key(s, k.round_keys + 16 * k.rounds);
}

void decrypt_block(const AesKey& k, uint8_t* s) {
  add_round_key(s, k.round_keys + 16 * k.rounds);
  for (int r = k.rounds - 1; r >= 1; --r) {
    inv_shift_rows(s);
    inv_sub_bytes(s);
    add_round_key(s, k.round_keys + 16 * r);
    inv_mix_columns(s);
  }
  inv_shift_rows(s);
  inv_sub_bytes(s);
  add_round_key(s, k.round_keys);
}

}  // namespace

std::vector<uint8_t> aes_cbc_encrypt(const std::vector<uint8_t>& plaintext,
                                     const std::vector<uint8_t>& key,
                                     const std::array<uint8_t, 16>& iv) {
  const AesKey k = expand_key(key);

  const size_t pad = 16 - plaintext.size() % 16;
  std::vector<uint8_t> out(plaintext.size() + pad);
  std::memcpy(out.data(), plaintext.data(), plaintext.size());
  std::memset(out.data() + plaintext.size(), static_cast<int>(pad), pad);

  const uint8_t* chain = iv.data();
  for (size_t off = 0; off < out.size(); off += 16) {
    for (int i = 0; i < 16; ++i) out[off + i] ^= chain[i];
    encrypt_block(k, out.data() + off);
    chain = out.data() + off;
  }
  return out;
}

std::vector<uint8_t> aes_cbc_decrypt(const std::vector<uint8_t>& ciphertext,
                                     const std::vector<uint8_t>& key,
                                     const std::array<uint8_t, 16>& iv) {
  require(!ciphertext.empty() && ciphertext.size() % 16 == 0, Err::BadPadding,
          "ciphertext is not a positive multiple of the block size");
  const AesKey k = expand_key(key);

  std::vector<uint8_t> out(ciphertext.size());
  uint8_t chain[16];
  std::memcpy(chain, iv.data(), 16);
  uint8_t block[16];
  for (size_t off = 0; off < ciphertext.size(); off += 16) {
    std::memcpy(block, ciphertext.data() + off, 16);
    decrypt_block(k, block);
    for (int i = 0; i < 16; ++i) out[off + i] = static_cast<uint8_t>(block[i] ^ chain[i]);
    std::memcpy(chain, ciphertext.data() + off, 16);
  }

  const uint8_t pad = out.back();
  require(pad >= 1 && pad <= 16, Err::BadPadding, "bad padding byte");
  for (size_t i = out.size() - pad; i < out.size(); ++i) {
    require(out[i] == pad, Err::BadPadding, "inconsistent padding");
  }
  out.resize(out.size() - pad);
  return out;
}

}  // namespace semcrypt::crypto
