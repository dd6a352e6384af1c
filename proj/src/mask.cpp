#include <algorithm>
#include <cctype>
#include <numeric>
#include <string>

#include "semcrypt/crypto.hpp"
#include "semcrypt/error.hpp"
#include "semcrypt/mask.hpp"

namespace semcrypt {

namespace {

// SHA-256(key || counter) keystream, counter little-endian u64 starting at 0,
// consumed byte by byte across block boundaries.
class Keystream {
 public:
  explicit Keystream(const MaskKey& k) : key_(k.key) {}

  uint8_t next_byte() {
    if (off_ == 32) refill();
    return block_[off_++];
  }

  // Uniform draw in [0, m) by rejection: read the minimal number of bytes
  // whose range covers m (little-endian), retry draws past the largest
  // multiple of m.
  uint64_t next_below(uint64_t m) {
    if (m <= 1) return 0;
    int nbytes = 0;
    uint64_t span = 1;
    while (span < m) {
      span <<= 8;
      ++nbytes;
    }
    const uint64_t limit = span - span % m;
    for (;;) {
      uint64_t v = 0;
      for (int i = 0; i < nbytes; ++i) v |= static_cast<uint64_t>(next_byte()) << (8 * i);
      if (v < limit) return v % m;
    }
  }

 private:
  void refill() {
    uint8_t buf[40];
    std::copy(key_.begin(), key_.end(), buf);
    for (int i = 0; i < 8; ++i) buf[32 + i] = static_cast<uint8_t>(counter_ >> (8 * i));
    block_ = crypto::sha256(buf, sizeof buf);
    ++counter_;
    off_ = 0;
  }

  std::array<uint8_t, 32> key_;
  uint64_t counter_ = 0;
  crypto::Digest block_{};
  size_t off_ = 32;
};

// Pixel position inside a block after k clockwise quarter turns.
inline void rotate_pos(uint32_t b, uint8_t k, uint32_t y, uint32_t x, uint32_t& oy,
                       uint32_t& ox) {
  switch (k & 3) {
    case 0: oy = y; ox = x; break;
    case 1: oy = x; ox = b - 1 - y; break;
    case 2: oy = b - 1 - y; ox = b - 1 - x; break;
    default: oy = b - 1 - x; ox = y; break;
  }
}

void check_plan_against(const ImageBuffer& img, const MaskPlan& plan) {
  check_image(img);
  require(plan.block_size >= 1, Err::BlockSizeMismatch, "block size must be positive");
  require(plan.blocks_x * plan.block_size == img.width &&
              plan.blocks_y * plan.block_size == img.height,
          Err::BlockSizeMismatch, "plan geometry does not match image");
  const size_t n = static_cast<size_t>(plan.blocks_x) * plan.blocks_y;
  require(plan.permutation.size() == n && plan.rotations.size() == n &&
              plan.negations.size() == n,
          Err::BlockSizeMismatch, "plan schedules do not match block count");
}

MaskPlan inverse_plan(const MaskPlan& plan) {
  MaskPlan inv;
  inv.block_size = plan.block_size;
  inv.blocks_x = plan.blocks_x;
  inv.blocks_y = plan.blocks_y;
  const size_t n = plan.block_count();
  inv.permutation.resize(n);
  inv.rotations.resize(n);
  inv.negations.resize(n);
  for (size_t s = 0; s < n; ++s) {
    const uint32_t d = plan.permutation[s];
    require(d < n, Err::BlockSizeMismatch, "plan permutation out of range");
    inv.permutation[d] = static_cast<uint32_t>(s);
    inv.rotations[d] = static_cast<uint8_t>((4 - plan.rotations[s]) & 3);
    // negation is pointwise and commutes with the position ops
    inv.negations[d] = plan.negations[s];
  }
  return inv;
}

}  // namespace

MaskPlan derive_mask_plan(const MaskKey& k, uint32_t width, uint32_t height,
                          uint32_t block_size) {
  require(block_size >= 1, Err::BlockSizeMismatch, "block size must be positive");
  require(width >= 1 && height >= 1, Err::BlockSizeMismatch, "empty image");
  require(width % block_size == 0 && height % block_size == 0, Err::BlockSizeMismatch,
          "block size must divide both image dimensions");

  MaskPlan plan;
  plan.block_size = block_size;
  plan.blocks_x = width / block_size;
  plan.blocks_y = height / block_size;
  const size_t n = static_cast<size_t>(plan.blocks_x) * plan.blocks_y;

  Keystream ks(k);

  plan.permutation.resize(n);
  std::iota(plan.permutation.begin(), plan.permutation.end(), 0u);
  for (size_t i = n; i-- > 1;) {
    const uint64_t j = ks.next_below(i + 1);
    std::swap(plan.permutation[i], plan.permutation[j]);
  }

  plan.rotations.resize(n);
  uint8_t rot_byte = 0;
  for (size_t i = 0; i < n; ++i) {
    if (i % 4 == 0) rot_byte = ks.next_byte();
    plan.rotations[i] = static_cast<uint8_t>((rot_byte >> (2 * (i % 4))) & 3);
  }

  plan.negations.resize(n);
  uint8_t neg_byte = 0;
  for (size_t i = 0; i < n; ++i) {
    if (i % 8 == 0) neg_byte = ks.next_byte();
    plan.negations[i] = static_cast<uint8_t>((neg_byte >> (i % 8)) & 1);
  }

  return plan;
}

ImageBuffer apply_mask(const ImageBuffer& img, const MaskPlan& plan) {
  check_plan_against(img, plan);
  const uint32_t b = plan.block_size;
  const uint32_t maxv = img.max_value();
  ImageBuffer out = make_image(img.width, img.height, img.bit_depth);

  const size_t n = plan.block_count();
  for (size_t s = 0; s < n; ++s) {
    const uint32_t d = plan.permutation[s];
    require(d < n, Err::BlockSizeMismatch, "plan permutation out of range");
    const uint32_t sx = static_cast<uint32_t>(s) % plan.blocks_x * b;
    const uint32_t sy = static_cast<uint32_t>(s) / plan.blocks_x * b;
    const uint32_t dx = d % plan.blocks_x * b;
    const uint32_t dy = d / plan.blocks_x * b;
    const uint8_t rot = plan.rotations[s];
    const bool neg = plan.negations[s] != 0;
    for (uint32_t y = 0; y < b; ++y) {
      for (uint32_t x = 0; x < b; ++x) {
        uint32_t oy, ox;
        rotate_pos(b, rot, y, x, oy, ox);
        uint16_t v = img.at(sx + x, sy + y);
        if (neg) v = static_cast<uint16_t>(maxv - v);
        out.samples[static_cast<size_t>(dy + oy) * out.width + dx + ox] = v;
      }
    }
  }
  return out;
}

ImageBuffer invert_mask(const ImageBuffer& img, const MaskPlan& plan) {
  check_plan_against(img, plan);
  return apply_mask(img, inverse_plan(plan));
}

MaskKey mask_key_from_string(const std::string& s) {
  MaskKey k;
  auto hexval = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (s.size() == 64) {
    bool all_hex = true;
    for (char c : s) all_hex = all_hex && hexval(c) >= 0;
    if (all_hex) {
      for (size_t i = 0; i < 32; ++i) {
        k.key[i] = static_cast<uint8_t>(hexval(s[2 * i]) * 16 + hexval(s[2 * i + 1]));
      }
      return k;
    }
  }
  require(!s.empty(), Err::UsageError, "mask key must not be empty");
  k.key = crypto::sha256(reinterpret_cast<const uint8_t*>(s.data()), s.size());
  return k;
}

}  // namespace semcrypt
