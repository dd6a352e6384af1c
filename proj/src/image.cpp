#include "semcrypt/image.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "semcrypt/error.hpp"

namespace semcrypt {

void check_image(const ImageBuffer& img) {
  require(img.width >= 1 && img.height >= 1, Err::Internal, "image dims must be >= 1");
  require(img.bit_depth == 8 || img.bit_depth == 16, Err::Internal, "bit depth must be 8 or 16");
  require(img.samples.size() == img.pixel_count(), Err::Internal, "sample count != width*height");
  if (img.bit_depth == 8) {
    for (uint16_t v : img.samples) {
      require(v <= 255, Err::Internal, "8-bit sample out of range");
    }
  }
}

ImageBuffer make_image(uint32_t w, uint32_t h, int bit_depth, uint16_t fill) {
  ImageBuffer img;
  img.width = w;
  img.height = h;
  img.bit_depth = bit_depth;
  img.samples.assign(static_cast<size_t>(w) * h, fill);
  return img;
}

Window full_range_window(int bit_depth) {
  const double full = bit_depth == 16 ? 65536.0 : 256.0;
  return Window{full / 2.0, full};
}

ImageBuffer normalize_to_8bit(const ImageBuffer& img, const Window& w) {
  check_image(img);
  require(w.width > 0, Err::Internal, "window width must be positive");
  ImageBuffer out = img;
  out.bit_depth = 8;
  const double lo = w.center - w.width / 2.0;
  for (size_t i = 0; i < img.samples.size(); ++i) {
    const double y = 255.0 * (static_cast<double>(img.samples[i]) - lo) / w.width;
    long r = std::lround(y);
    if (r < 0) r = 0;
    if (r > 255) r = 255;
    out.samples[i] = static_cast<uint16_t>(r);
  }
  return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, uint32_t out_w, uint32_t out_h) {
  check_image(img);
  require(out_w >= 1 && out_h >= 1, Err::Internal, "output dims must be >= 1");
  if (out_w == img.width && out_h == img.height) return img;

  ImageBuffer out = make_image(out_w, out_h, img.bit_depth);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  const long max_v = img.max_value();

  for (uint32_t oy = 0; oy < out_h; ++oy) {
    double fy = (oy + 0.5) * sy - 0.5;
    if (fy < 0) fy = 0;
    if (fy > img.height - 1) fy = img.height - 1;
    const uint32_t y0 = static_cast<uint32_t>(fy);
    const uint32_t y1 = y0 + 1 < img.height ? y0 + 1 : y0;
    const double wy = fy - y0;

    for (uint32_t ox = 0; ox < out_w; ++ox) {
      double fx = (ox + 0.5) * sx - 0.5;
      if (fx < 0) fx = 0;
      if (fx > img.width - 1) fx = img.width - 1;
      const uint32_t x0 = static_cast<uint32_t>(fx);
      const uint32_t x1 = x0 + 1 < img.width ? x0 + 1 : x0;
      const double wx = fx - x0;

      const double top = img.at(x0, y0) * (1.0 - wx) + img.at(x1, y0) * wx;
      const double bot = img.at(x0, y1) * (1.0 - wx) + img.at(x1, y1) * wx;
      long r = std::lround(top * (1.0 - wy) + bot * wy);
      if (r < 0) r = 0;
      if (r > max_v) r = max_v;
      out.at(ox, oy) = static_cast<uint16_t>(r);
    }
  }
  return out;
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  require(a.width == b.width && a.height == b.height && a.bit_depth == b.bit_depth,
          Err::DimensionMismatch, "psnr requires matching dims and bit depth");
  check_image(a);
  check_image(b);
  double se = 0;
  for (size_t i = 0; i < a.samples.size(); ++i) {
    const double d = static_cast<double>(a.samples[i]) - b.samples[i];
    se += d * d;
  }
  if (se == 0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(a.samples.size());
  const double mx = a.max_value();
  return 10.0 * std::log10(mx * mx / mse);
}

std::vector<uint8_t> pgm_encode(const ImageBuffer& img) {
  check_image(img);
  char header[64];
  const int maxval = img.bit_depth == 16 ? 65535 : 255;
  const int hn = std::snprintf(header, sizeof header, "P5\n%u %u\n%d\n", img.width, img.height, maxval);
  std::vector<uint8_t> out(header, header + hn);
  out.reserve(out.size() + img.samples.size() * (img.bit_depth == 16 ? 2 : 1));
  for (uint16_t v : img.samples) {
    if (img.bit_depth == 16) {
      out.push_back(static_cast<uint8_t>(v >> 8));  // PGM 16-bit is big-endian
      out.push_back(static_cast<uint8_t>(v & 0xff));
    } else {
      out.push_back(static_cast<uint8_t>(v));
    }
  }
  return out;
}

namespace {

// Reads one PGM header token, skipping whitespace and '#' comments.
long pgm_token(const std::vector<uint8_t>& b, size_t& pos) {
  while (pos < b.size()) {
    const char c = static_cast<char>(b[pos]);
    if (c == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  require(pos < b.size() && b[pos] >= '0' && b[pos] <= '9', Err::CorruptPayload, "bad PGM header token");
  long v = 0;
  while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9') {
    v = v * 10 + (b[pos] - '0');
    require(v <= 1 << 30, Err::CorruptPayload, "PGM header value out of range");
    ++pos;
  }
  return v;
}

}  // namespace

ImageBuffer pgm_decode(const std::vector<uint8_t>& bytes) {
  require(bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5', Err::BadMagic, "not a P5 PGM");
  size_t pos = 2;
  const long w = pgm_token(bytes, pos);
  const long h = pgm_token(bytes, pos);
  const long maxval = pgm_token(bytes, pos);
  require(w >= 1 && h >= 1, Err::HeaderFieldOutOfRange, "PGM dims must be >= 1");
  require(maxval == 255 || maxval == 65535, Err::HeaderFieldOutOfRange, "PGM maxval must be 255 or 65535");
  require(pos < bytes.size(), Err::CorruptPayload, "PGM header not terminated");
  ++pos;  // single whitespace byte after maxval

  ImageBuffer img = make_image(static_cast<uint32_t>(w), static_cast<uint32_t>(h),
                               maxval == 65535 ? 16 : 8);
  const size_t need = img.pixel_count() * (maxval == 65535 ? 2 : 1);
  require(bytes.size() - pos >= need, Err::CorruptPayload, "PGM pixel payload truncated");
  for (size_t i = 0; i < img.pixel_count(); ++i) {
    if (maxval == 65535) {
      img.samples[i] = static_cast<uint16_t>((bytes[pos] << 8) | bytes[pos + 1]);
      pos += 2;
    } else {
      img.samples[i] = bytes[pos++];
    }
  }
  return img;
}

std::vector<uint8_t> read_file(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) fail(Err::IoError, "cannot open " + path);
  std::fseek(f, 0, SEEK_END);
  const long sz = std::ftell(f);
  if (sz < 0) {
    std::fclose(f);
    fail(Err::IoError, "cannot stat " + path);
  }
  std::fseek(f, 0, SEEK_SET);
  std::vector<uint8_t> out(static_cast<size_t>(sz));
  const size_t got = out.empty() ? 0 : std::fread(out.data(), 1, out.size(), f);
  std::fclose(f);
  require(got == out.size(), Err::IoError, "short read from " + path);
  return out;
}

void write_file(const std::string& path, const uint8_t* data, size_t n) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(Err::IoError, "cannot create " + path);
  const size_t put = n == 0 ? 0 : std::fwrite(data, 1, n, f);
  const int rc = std::fclose(f);
  require(put == n && rc == 0, Err::IoError, "short write to " + path);
}

void write_file(const std::string& path, const std::vector<uint8_t>& data) {
  write_file(path, data.data(), data.size());
}

void pgm_write_file(const ImageBuffer& img, const std::string& path) {
  write_file(path, pgm_encode(img));
}

ImageBuffer pgm_read_file(const std::string& path) { return pgm_decode(read_file(path)); }

}  // namespace semcrypt
