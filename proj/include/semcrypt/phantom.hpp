#pragma once

#include <cstdint>
#include <string>

#include "semcrypt/image.hpp"

namespace semcrypt {

// Synthetic chest-film stand-ins.  Three separable classes on a common
// lung-field gradient; everything derives from the seed.
enum class PhantomClass : int {
  Nodule = 0,        // bright filled disc
  LinearOpacity = 1, // bright band at a random angle
  ClearField = 2,    // gradient + noise only
};

struct PhantomSpec {
  PhantomClass class_label = PhantomClass::ClearField;
  uint32_t size = 64;        // square, >= 16
  uint64_t seed = 0;
  double noise_sigma = 0.0;  // fraction of MAX, in [0,1)
};

const char* phantom_class_name(PhantomClass c);
// Accepts "nodule", "linear", "linear-opacity", "clear", "clear-field"
// (case-insensitive); throws Err::UsageError otherwise.
PhantomClass phantom_class_from_name(const std::string& name);

// Deterministic for a fixed spec.  Output is 8-bit, size x size.
ImageBuffer phantom_generate(const PhantomSpec& spec);

}  // namespace semcrypt
