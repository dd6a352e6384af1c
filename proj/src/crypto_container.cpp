#include <cstring>

#include "semcrypt/crypto.hpp"
#include "semcrypt/error.hpp"

namespace semcrypt::crypto {

namespace {

void put_u64_le(uint8_t* p, uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}

uint64_t get_u64_le(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

KeyMaterial derive_keys(const std::vector<uint8_t>& passphrase,
                        const std::array<uint8_t, 16>& salt, CipherId cipher) {
  require(!passphrase.empty(), Err::EmptyPassphrase, "passphrase must not be empty");

  Sha256 h;
  h.update(passphrase.data(), passphrase.size());
  h.update(salt.data(), salt.size());
  const Digest k = h.finish();

  KeyMaterial km;
  km.cipher_id = cipher;
  km.salt = salt;
  km.enc_key.assign(k.begin(), cipher == CipherId::Aes128Cbc ? k.begin() + 16 : k.end());

  Sha256 hm;
  hm.update(k.data(), k.size());
  const uint8_t one = 0x01;
  hm.update(&one, 1);
  km.mac_key = hm.finish();
  return km;
}

std::vector<uint8_t> encrypt_container(const std::vector<uint8_t>& payload,
                                       const std::vector<uint8_t>& passphrase, CipherId cipher,
                                       EntropySource& entropy) {
  require(!payload.empty(), Err::EmptyPayload, "payload must not be empty");
  require(cipher == CipherId::Aes128Cbc || cipher == CipherId::Aes256Cbc, Err::InvalidKeyLength,
          "unknown cipher id");

  std::array<uint8_t, 16> salt, iv;
  entropy.fill(salt.data(), salt.size());
  entropy.fill(iv.data(), iv.size());

  const KeyMaterial km = derive_keys(passphrase, salt, cipher);
  const std::vector<uint8_t> ct = aes_cbc_encrypt(payload, km.enc_key, iv);

  std::vector<uint8_t> out(kContainerHeaderSize + ct.size());
  std::memcpy(out.data(), "SEMC", 4);
  out[4] = 1;  // version
  out[5] = static_cast<uint8_t>(cipher);
  out[6] = 0;
  out[7] = 0;
  std::memcpy(out.data() + 8, salt.data(), 16);
  std::memcpy(out.data() + 24, iv.data(), 16);
  put_u64_le(out.data() + 40, payload.size());
  std::memcpy(out.data() + kContainerHeaderSize, ct.data(), ct.size());

  // MAC over the header up to the mac field, then the ciphertext.
  std::vector<uint8_t> mac_input;
  mac_input.reserve(kContainerMacOffset + ct.size());
  mac_input.insert(mac_input.end(), out.begin(), out.begin() + kContainerMacOffset);
  mac_input.insert(mac_input.end(), ct.begin(), ct.end());
  const Digest mac =
      hmac_sha256(km.mac_key.data(), km.mac_key.size(), mac_input.data(), mac_input.size());
  std::memcpy(out.data() + kContainerMacOffset, mac.data(), mac.size());
  return out;
}

ContainerInfo parse_container_header(const std::vector<uint8_t>& bytes) {
  require(bytes.size() >= 4 && std::memcmp(bytes.data(), "SEMC", 4) == 0, Err::BadMagic,
          "not a SEMC container");
  require(bytes.size() >= kContainerHeaderSize + 16, Err::BadMagic, "container too short");
  require(bytes[4] == 1, Err::BadMagic, "unsupported container version");
  require(bytes[5] == 1 || bytes[5] == 2, Err::BadMagic, "unknown cipher id");

  ContainerInfo info;
  info.cipher_id = static_cast<CipherId>(bytes[5]);
  std::memcpy(info.salt.data(), bytes.data() + 8, 16);
  std::memcpy(info.iv.data(), bytes.data() + 24, 16);
  info.plaintext_len = get_u64_le(bytes.data() + 40);
  info.ciphertext_offset = kContainerHeaderSize;
  info.ciphertext_len = bytes.size() - kContainerHeaderSize;
  require(info.ciphertext_len % 16 == 0, Err::BadMagic, "ciphertext not block-aligned");
  require(info.plaintext_len <= info.ciphertext_len &&
              info.ciphertext_len < info.plaintext_len + 17,
          Err::BadMagic, "plaintext length inconsistent with ciphertext size");
  return info;
}

std::vector<uint8_t> decrypt_container(const std::vector<uint8_t>& bytes,
                                       const std::vector<uint8_t>& passphrase) {
  const ContainerInfo info = parse_container_header(bytes);
  const KeyMaterial km = derive_keys(passphrase, info.salt, info.cipher_id);

  // Verify the MAC before touching the ciphertext with the block cipher.
  std::vector<uint8_t> mac_input;
  mac_input.reserve(kContainerMacOffset + info.ciphertext_len);
  mac_input.insert(mac_input.end(), bytes.begin(), bytes.begin() + kContainerMacOffset);
  mac_input.insert(mac_input.end(), bytes.begin() + info.ciphertext_offset, bytes.end());
  const Digest mac =
      hmac_sha256(km.mac_key.data(), km.mac_key.size(), mac_input.data(), mac_input.size());
  require(ct_equal(mac.data(), bytes.data() + kContainerMacOffset, mac.size()), Err::MacMismatch,
          "authentication failed (tampering or wrong passphrase)");

  const std::vector<uint8_t> ct(bytes.begin() + info.ciphertext_offset, bytes.end());
  std::vector<uint8_t> plain = aes_cbc_decrypt(ct, km.enc_key, info.iv);
  require(plain.size() == info.plaintext_len, Err::BadPadding,
          "plaintext length disagrees with header");
  return plain;
}

}  // namespace semcrypt::crypto
