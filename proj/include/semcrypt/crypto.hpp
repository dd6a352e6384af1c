#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "semcrypt/rng.hpp"

namespace semcrypt::crypto {

using Digest = std::array<uint8_t, 32>;

// SHA-256 (FIPS 180-4), streaming interface.
class Sha256 {
 public:
  Sha256();
  void update(const uint8_t* data, size_t n);
  void update(const std::vector<uint8_t>& data) { update(data.data(), data.size()); }
  Digest finish();

 private:
  void compress(const uint8_t* block);

  uint32_t h_[8];
  uint8_t buf_[64];
  size_t buf_len_ = 0;
  uint64_t total_ = 0;
};

Digest sha256(const uint8_t* data, size_t n);
Digest sha256(const std::vector<uint8_t>& data);

// HMAC-SHA-256 (RFC 2104).
Digest hmac_sha256(const uint8_t* key, size_t key_len, const uint8_t* data, size_t n);

// Constant-time equality; runtime independent of where buffers differ.
bool ct_equal(const uint8_t* a, const uint8_t* b, size_t n);

enum class CipherId : uint8_t {
  Aes128Cbc = 1,
  Aes256Cbc = 2,
};

struct KeyMaterial {
  CipherId cipher_id;
  std::vector<uint8_t> enc_key;  // 16 or 32 bytes per cipher_id
  Digest mac_key;
  std::array<uint8_t, 16> salt;
};

// k = SHA-256(passphrase || salt); enc_key = k[0..16) or all of k;
// mac_key = SHA-256(k || 0x01).
KeyMaterial derive_keys(const std::vector<uint8_t>& passphrase,
                        const std::array<uint8_t, 16>& salt, CipherId cipher);

// AES-CBC with PKCS#7 applied inside encrypt / validated inside decrypt.
// Key length selects AES-128 or AES-256.
std::vector<uint8_t> aes_cbc_encrypt(const std::vector<uint8_t>& plaintext,
                                     const std::vector<uint8_t>& key,
                                     const std::array<uint8_t, 16>& iv);
std::vector<uint8_t> aes_cbc_decrypt(const std::vector<uint8_t>& ciphertext,
                                     const std::vector<uint8_t>& key,
                                     const std::array<uint8_t, 16>& iv);

// .semc container: "SEMC" | ver u8=1 | cipher u8 | reserved u16=0 | salt 16 |
// iv 16 | plaintext_len u64 LE | mac 32 | ciphertext.  Encrypt-then-MAC over
// header[0..48) || ciphertext.
inline constexpr size_t kContainerHeaderSize = 80;
inline constexpr size_t kContainerMacOffset = 48;

std::vector<uint8_t> encrypt_container(const std::vector<uint8_t>& payload,
                                       const std::vector<uint8_t>& passphrase, CipherId cipher,
                                       EntropySource& entropy);
std::vector<uint8_t> decrypt_container(const std::vector<uint8_t>& bytes,
                                       const std::vector<uint8_t>& passphrase);

// Header fields needed without the passphrase (leakage audit reads the
// ciphertext section; tools report sizes).  Validates structure only.
struct ContainerInfo {
  CipherId cipher_id;
  std::array<uint8_t, 16> salt;
  std::array<uint8_t, 16> iv;
  uint64_t plaintext_len;
  size_t ciphertext_offset;  // always 80
  size_t ciphertext_len;
};
ContainerInfo parse_container_header(const std::vector<uint8_t>& bytes);

inline std::vector<uint8_t> to_bytes(const std::string& s) {
  return std::vector<uint8_t>(s.begin(), s.end());
}

}  // namespace semcrypt::crypto
