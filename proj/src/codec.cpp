#include <bit>
#include <cmath>
#include <cstring>
#include <vector>

#include "semcrypt/codec.hpp"
#include "semcrypt/error.hpp"
#include "semcrypt/rangecoder.hpp"

namespace semcrypt::codec {

namespace {

constexpr size_t kFixedHeader = 21;
constexpr uint32_t kMaxDim = 65535;
constexpr uint64_t kMaxPixels = 1ull << 24;
// Ceiling on decoded coefficient magnitude; real streams stay far below it,
// the guard just keeps hostile payloads from overflowing the inverse DWT.
constexpr uint64_t kMaxCoeffMag = 1ull << 30;

struct Subband {
  uint32_t x0, y0, w, h;
  int level;  // decomposition level of the split that produced it; LL carries `levels`
};

// Stream order: LL first, then coarsest-to-finest HL, LH, HH triples.
std::vector<Subband> subband_layout(uint32_t w, uint32_t h, int levels) {
  uint32_t cw[kMaxLevels + 1], ch[kMaxLevels + 1];
  cw[0] = w;
  ch[0] = h;
  for (int l = 1; l <= levels; ++l) {
    cw[l] = (cw[l - 1] + 1) / 2;
    ch[l] = (ch[l - 1] + 1) / 2;
  }
  std::vector<Subband> out;
  out.reserve(3 * levels + 1);
  out.push_back({0, 0, cw[levels], ch[levels], levels});
  for (int l = levels; l >= 1; --l) {
    const uint32_t pw = cw[l - 1], ph = ch[l - 1];
    const uint32_t le = cw[l], he = ch[l];
    out.push_back({le, 0, pw - le, he, l});
    out.push_back({0, he, le, ph - he, l});
    out.push_back({le, he, pw - le, ph - he, l});
  }
  return out;
}

uint64_t zigzag(int64_t c) {
  return c > 0 ? static_cast<uint64_t>(c) * 2 : static_cast<uint64_t>(-c) * 2 - 1;
}

void put_varint(std::vector<uint8_t>& out, uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<uint8_t>(v) | 0x80);
    v >>= 7;
  }
  out.push_back(static_cast<uint8_t>(v));
}

uint64_t get_varint(RangeDecoder& dec, ByteModel& m) {
  uint64_t v = 0;
  int shift = 0;
  for (int i = 0; i < 10; ++i) {
    const uint8_t b = dec.decode_byte(m);
    v |= static_cast<uint64_t>(b & 0x7f) << shift;
    if (!(b & 0x80)) return v;
    shift += 7;
  }
  fail(Err::CorruptPayload, "overlong varint in subband payload");
}

// Run/value token stream for one subband: varint(zero run), then alternating
// varint(zigzag value), varint(zero run), always closing on a run (possibly
// zero).  Returns empty when every coefficient is zero; the stream encodes
// that case as coded_len = 0.
std::vector<uint8_t> tokenize_subband(const int32_t* plane, uint32_t stride, const Subband& b) {
  std::vector<uint8_t> tok;
  bool any = false;
  uint64_t run = 0;
  for (uint32_t y = 0; y < b.h; ++y) {
    const int32_t* row = plane + static_cast<size_t>(b.y0 + y) * stride + b.x0;
    for (uint32_t x = 0; x < b.w; ++x) {
      const int32_t c = row[x];
      if (c == 0) {
        ++run;
        continue;
      }
      put_varint(tok, run);
      run = 0;
      put_varint(tok, zigzag(c));
      any = true;
    }
  }
  if (!any) return {};
  put_varint(tok, run);
  return tok;
}

std::vector<uint8_t> rc_compress(const std::vector<uint8_t>& raw) {
  ByteModel m;
  RangeEncoder enc;
  for (uint8_t b : raw) enc.encode_byte(m, b);
  return enc.finish();
}

void detokenize_subband(const uint8_t* payload, size_t len, int32_t* plane, uint32_t stride,
                        const Subband& b) {
  const uint64_t n = static_cast<uint64_t>(b.w) * b.h;
  auto store = [&](uint64_t pos, int32_t v) {
    const uint32_t y = static_cast<uint32_t>(pos / b.w);
    const uint32_t x = static_cast<uint32_t>(pos % b.w);
    plane[static_cast<size_t>(b.y0 + y) * stride + b.x0 + x] = v;
  };
  if (len == 0) return;  // all-zero subband; plane is prezeroed

  RangeDecoder dec(payload, len);
  ByteModel m;
  uint64_t run = get_varint(dec, m);
  require(run <= n, Err::CorruptPayload, "zero run exceeds subband size");
  uint64_t pos = run;
  while (pos < n) {
    const uint64_t v = get_varint(dec, m);
    require(v != 0, Err::CorruptPayload, "zero encoded as value token");
    const uint64_t mag = (v >> 1) + (v & 1);
    require(mag <= kMaxCoeffMag, Err::CorruptPayload, "coefficient magnitude out of range");
    store(pos, (v & 1) ? -static_cast<int32_t>(mag) : static_cast<int32_t>(mag));
    ++pos;
    run = get_varint(dec, m);
    require(run <= n - pos, Err::CorruptPayload, "zero run exceeds subband size");
    pos += run;
  }
  require(dec.overread() == 0, Err::CorruptPayload, "subband payload ran dry");
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 24));
}

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

CodestreamInfo parse_header(const std::vector<uint8_t>& bytes) {
  require(bytes.size() >= 4 && std::memcmp(bytes.data(), "J2KL", 4) == 0, Err::BadMagic,
          "not a .j2l codestream");
  require(bytes.size() >= kFixedHeader, Err::CorruptPayload, "truncated codestream header");
  require(bytes[4] == 1, Err::BadMagic, "unsupported codestream version");

  CodestreamInfo info{};
  const uint8_t mode = bytes[5];
  require(mode <= 1, Err::HeaderFieldOutOfRange, "unknown codec mode");
  info.mode = static_cast<CodecMode>(mode);
  info.width = read_u32(bytes.data() + 6);
  info.height = read_u32(bytes.data() + 10);
  require(info.width >= 1 && info.width <= kMaxDim && info.height >= 1 && info.height <= kMaxDim,
          Err::HeaderFieldOutOfRange, "image dimensions out of range");
  require(static_cast<uint64_t>(info.width) * info.height <= kMaxPixels,
          Err::HeaderFieldOutOfRange, "pixel count out of range");
  info.levels = bytes[14];
  require(info.levels >= 1 && info.levels <= kMaxLevels, Err::HeaderFieldOutOfRange,
          "decomposition levels out of range");
  require(info.width >= (1u << info.levels) && info.height >= (1u << info.levels),
          Err::HeaderFieldOutOfRange, "levels too deep for image dimensions");
  info.bit_depth = bytes[15];
  require(info.bit_depth == 8 || info.bit_depth == 16, Err::HeaderFieldOutOfRange,
          "bit depth must be 8 or 16");
  info.base_qstep = std::bit_cast<float>(read_u32(bytes.data() + 16));
  if (info.mode == CodecMode::Lossless53) {
    require(info.base_qstep == 0.0f, Err::HeaderFieldOutOfRange,
            "lossless codestream carries a quantizer step");
  } else {
    require(std::isfinite(info.base_qstep) && info.base_qstep > 0.0f,
            Err::HeaderFieldOutOfRange, "quantizer step must be positive");
  }
  info.subband_count = bytes[20];
  require(info.subband_count == 3 * info.levels + 1, Err::HeaderFieldOutOfRange,
          "subband count does not match levels");
  return info;
}

}  // namespace

std::vector<uint8_t> encode(const ImageBuffer& img, const EncodeParams& params) {
  check_image(img);
  const uint32_t w = img.width, h = img.height;
  require(w <= kMaxDim && h <= kMaxDim && static_cast<uint64_t>(w) * h <= kMaxPixels,
          Err::HeaderFieldOutOfRange, "image too large for codestream format");

  const int levels = params.levels == 0 ? default_levels(w, h) : params.levels;
  require(levels >= 1 && levels <= kMaxLevels, Err::DimensionTooSmall, "levels must be in 1..6");
  require(w >= (1u << levels) && h >= (1u << levels), Err::DimensionTooSmall,
          "image too small for requested levels");
  const bool lossy = params.mode == CodecMode::Lossy97;
  if (lossy) {
    require(std::isfinite(params.base_qstep) && params.base_qstep > 0.0f, Err::UsageError,
            "base_qstep must be positive");
  }

  const size_t n = img.pixel_count();
  const int32_t shift = 1 << (img.bit_depth - 1);
  const auto bands = subband_layout(w, h, levels);

  std::vector<int32_t> qplane(n);
  if (lossy) {
    std::vector<float> plane(n);
    for (size_t i = 0; i < n; ++i) plane[i] = static_cast<float>(img.samples[i] - shift);
    dwt97_forward(plane, w, h, levels);
    for (const auto& b : bands) {
      const double step = subband_qstep(params.base_qstep, b.level);
      for (uint32_t y = 0; y < b.h; ++y) {
        const size_t off = static_cast<size_t>(b.y0 + y) * w + b.x0;
        for (uint32_t x = 0; x < b.w; ++x) {
          qplane[off + x] = quantize_coeff(plane[off + x], step);
        }
      }
    }
  } else {
    for (size_t i = 0; i < n; ++i) qplane[i] = img.samples[i] - shift;
    dwt53_forward(qplane, w, h, levels);
  }

  std::vector<uint8_t> out;
  for (char c : {'J', '2', 'K', 'L'}) out.push_back(static_cast<uint8_t>(c));
  out.push_back(1);
  out.push_back(lossy ? 1 : 0);
  put_u32(out, w);
  put_u32(out, h);
  out.push_back(static_cast<uint8_t>(levels));
  out.push_back(static_cast<uint8_t>(img.bit_depth));
  put_u32(out, std::bit_cast<uint32_t>(lossy ? params.base_qstep : 0.0f));
  out.push_back(static_cast<uint8_t>(3 * levels + 1));

  for (const auto& b : bands) {
    const auto tok = tokenize_subband(qplane.data(), w, b);
    if (tok.empty()) {
      put_u32(out, 0);
      continue;
    }
    const auto coded = rc_compress(tok);
    put_u32(out, static_cast<uint32_t>(coded.size()));
    out.insert(out.end(), coded.begin(), coded.end());
  }
  return out;
}

ImageBuffer decode(const std::vector<uint8_t>& bytes) {
  const CodestreamInfo info = parse_header(bytes);
  const uint32_t w = info.width, h = info.height;
  const size_t n = static_cast<size_t>(w) * h;
  const auto bands = subband_layout(w, h, info.levels);

  std::vector<int32_t> qplane(n, 0);
  size_t off = kFixedHeader;
  for (const auto& b : bands) {
    require(bytes.size() - off >= 4, Err::CorruptPayload, "truncated subband table");
    const uint32_t len = read_u32(bytes.data() + off);
    off += 4;
    require(len <= bytes.size() - off, Err::CorruptPayload, "truncated subband payload");
    detokenize_subband(bytes.data() + off, len, qplane.data(), w, b);
    off += len;
  }
  require(off == bytes.size(), Err::CorruptPayload, "trailing bytes after codestream");

  ImageBuffer img = make_image(w, h, info.bit_depth);
  const int32_t shift = 1 << (info.bit_depth - 1);
  const int32_t maxv = static_cast<int32_t>(img.max_value());

  if (info.mode == CodecMode::Lossy97) {
    std::vector<float> plane(n);
    for (const auto& b : bands) {
      const double step = subband_qstep(info.base_qstep, b.level);
      for (uint32_t y = 0; y < b.h; ++y) {
        const size_t o = static_cast<size_t>(b.y0 + y) * w + b.x0;
        for (uint32_t x = 0; x < b.w; ++x) {
          plane[o + x] = dequantize_coeff(qplane[o + x], step);
        }
      }
    }
    dwt97_inverse(plane, w, h, info.levels);
    for (size_t i = 0; i < n; ++i) {
      const long v = std::lround(static_cast<double>(plane[i])) + shift;
      img.samples[i] = static_cast<uint16_t>(std::clamp<long>(v, 0, maxv));
    }
  } else {
    dwt53_inverse(qplane, w, h, info.levels);
    for (size_t i = 0; i < n; ++i) {
      const int64_t v = static_cast<int64_t>(qplane[i]) + shift;
      img.samples[i] = static_cast<uint16_t>(std::clamp<int64_t>(v, 0, maxv));
    }
  }
  return img;
}

CodestreamInfo parse_codestream_header(const std::vector<uint8_t>& bytes) {
  return parse_header(bytes);
}

}  // namespace semcrypt::codec
