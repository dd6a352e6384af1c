#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "semcrypt/image.hpp"

namespace semcrypt {

// Keyed block scramble standing in for inference on protected images.  This
// is a privacy transform, not a cipher: it hides global anatomy while leaving
// block-local texture for a model to learn.  See docs/SECURITY.md.

struct MaskKey {
  std::array<uint8_t, 32> key{};
};

struct MaskPlan {
  uint32_t block_size = 8;
  uint32_t blocks_x = 0;
  uint32_t blocks_y = 0;
  std::vector<uint32_t> permutation;  // destination block index per source block
  std::vector<uint8_t> rotations;     // quarter turns clockwise (0..3) per source block
  std::vector<uint8_t> negations;     // 1 = v -> MAX - v, per source block

  size_t block_count() const { return permutation.size(); }
  bool operator==(const MaskPlan&) const = default;
};

// Expands SHA-256(key || counter) keystream blocks into a permutation
// (Fisher-Yates over rejection-sampled uniform draws), then per-block
// rotations, then negation flags, in that order.
MaskPlan derive_mask_plan(const MaskKey& k, uint32_t width, uint32_t height,
                          uint32_t block_size);

// Moves each source block to permutation[src], rotating then negating it.
ImageBuffer apply_mask(const ImageBuffer& img, const MaskPlan& plan);

// Exact inverse of apply_mask.
ImageBuffer invert_mask(const ImageBuffer& img, const MaskPlan& plan);

// 64 hex digits decode to the raw key; anything else is hashed, so the env
// var can hold either form.
MaskKey mask_key_from_string(const std::string& s);

}  // namespace semcrypt
