#include "semcrypt/rangecoder.hpp"

#include "semcrypt/error.hpp"

namespace semcrypt::codec {

void ByteModel::lookup(uint8_t s, uint32_t& cum, uint32_t& freq, uint32_t& total) const {
  uint32_t c = 0;
  for (int i = 0; i < s; ++i) c += freq_[i];
  cum = c;
  freq = freq_[s];
  total = total_;
}

uint8_t ByteModel::find(uint32_t target, uint32_t& cum, uint32_t& freq) const {
  uint32_t c = 0;
  for (int i = 0; i < 256; ++i) {
    if (c + freq_[i] > target) {
      cum = c;
      freq = freq_[i];
      return static_cast<uint8_t>(i);
    }
    c += freq_[i];
  }
  fail(Err::Internal, "range decoder target outside model total");
}

void ByteModel::update(uint8_t s) {
  freq_[s] = static_cast<uint16_t>(freq_[s] + kIncrement);
  total_ += kIncrement;
  if (total_ >= kMaxTotal) {
    total_ = 0;
    for (auto& f : freq_) {
      f = static_cast<uint16_t>((f + 1) >> 1);
      total_ += f;
    }
  }
}

void RangeEncoder::shift_low() {
  if (static_cast<uint32_t>(low_) < 0xff000000u || (low_ >> 32) != 0) {
    const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    out_.push_back(static_cast<uint8_t>(cache_ + carry));
    while (--cache_size_ != 0) out_.push_back(static_cast<uint8_t>(0xff + carry));
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00ffffffull) << 8;
}

void RangeEncoder::encode(uint32_t cum, uint32_t freq, uint32_t total) {
  range_ /= total;
  low_ += static_cast<uint64_t>(cum) * range_;
  range_ *= freq;
  while (range_ < (1u << 24)) {
    shift_low();
    range_ <<= 8;
  }
}

void RangeEncoder::encode_byte(ByteModel& m, uint8_t s) {
  uint32_t cum, freq, total;
  m.lookup(s, cum, freq, total);
  encode(cum, freq, total);
  m.update(s);
}

std::vector<uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(const uint8_t* data, size_t n) : p_(data), n_(n) {
  next_byte();  // leading zero emitted by the encoder's cache priming
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ < n_) return p_[pos_++];
  ++overread_;
  return 0;
}

uint32_t RangeDecoder::decode_target(uint32_t total) {
  range_ /= total;
  uint32_t t = code_ / range_;
  if (t >= total) t = total - 1;
  return t;
}

void RangeDecoder::consume(uint32_t cum, uint32_t freq, uint32_t total) {
  (void)total;
  code_ -= cum * range_;
  range_ *= freq;
  while (range_ < (1u << 24)) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

uint8_t RangeDecoder::decode_byte(ByteModel& m) {
  const uint32_t target = decode_target(m.total());
  uint32_t cum, freq;
  const uint8_t s = m.find(target, cum, freq);
  consume(cum, freq, m.total());
  m.update(s);
  return s;
}

}  // namespace semcrypt::codec
