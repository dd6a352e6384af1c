#pragma once

#include <cstdint>
#include <vector>

namespace semcrypt::codec {

// Adaptive order-0 byte model with 12-bit total frequency.  Shared verbatim
// by encoder and decoder so their state stays in lockstep.
class ByteModel {
 public:
  ByteModel() { freq_.assign(256, 1); }

  // cumulative frequency below s, frequency of s, and current total
  void lookup(uint8_t s, uint32_t& cum, uint32_t& freq, uint32_t& total) const;
  // symbol whose cumulative interval contains target (target < total)
  uint8_t find(uint32_t target, uint32_t& cum, uint32_t& freq) const;
  uint32_t total() const { return total_; }
  void update(uint8_t s);

 private:
  std::vector<uint16_t> freq_;
  uint32_t total_ = 256;

  static constexpr uint32_t kIncrement = 32;
  static constexpr uint32_t kMaxTotal = 1u << 12;
};

// Byte-oriented range coder (carry-less via 64-bit low accumulator,
// 32-bit range, base-256 renormalization).
class RangeEncoder {
 public:
  void encode(uint32_t cum, uint32_t freq, uint32_t total);
  void encode_byte(ByteModel& m, uint8_t s);
  std::vector<uint8_t> finish();

 private:
  void shift_low();

  uint64_t low_ = 0;
  uint32_t range_ = 0xffffffffu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  // Reads from [data, data+n).  Once input is exhausted the decoder feeds
  // itself zero bytes; overread() reports how many, so callers can reject
  // streams that ran dry (bounded, keeps arbitrary input total).
  RangeDecoder(const uint8_t* data, size_t n);

  uint32_t decode_target(uint32_t total);          // value in [0, total)
  void consume(uint32_t cum, uint32_t freq, uint32_t total);
  uint8_t decode_byte(ByteModel& m);
  size_t overread() const { return overread_; }

 private:
  uint8_t next_byte();

  const uint8_t* p_;
  size_t n_;
  size_t pos_ = 0;
  size_t overread_ = 0;
  uint32_t range_ = 0xffffffffu;
  uint32_t code_ = 0;
};

}  // namespace semcrypt::codec
