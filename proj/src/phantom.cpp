#include "semcrypt/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "semcrypt/error.hpp"
#include "semcrypt/rng.hpp"

namespace semcrypt {

const char* phantom_class_name(PhantomClass c) {
  switch (c) {
    case PhantomClass::Nodule: return "nodule";
    case PhantomClass::LinearOpacity: return "linear-opacity";
    case PhantomClass::ClearField: return "clear-field";
  }
  return "unknown";
}

PhantomClass phantom_class_from_name(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "nodule") return PhantomClass::Nodule;
  if (s == "linear" || s == "linear-opacity") return PhantomClass::LinearOpacity;
  if (s == "clear" || s == "clear-field") return PhantomClass::ClearField;
  fail(Err::UsageError, "unknown phantom class: " + name);
}

ImageBuffer phantom_generate(const PhantomSpec& spec) {
  require(spec.size >= 16, Err::Internal, "phantom size must be >= 16");
  require(spec.noise_sigma >= 0.0 && spec.noise_sigma < 1.0, Err::Internal,
          "noise_sigma must be in [0,1)");

  const uint32_t n = spec.size;
  const double MAX = 255.0;
  Xoshiro256pp rng(derive_seed(spec.seed, static_cast<uint64_t>(spec.class_label)));

  // Radiograph frame: an elliptical thorax silhouette over near-black air,
  // with the mid-gray lung-field gradient (0.35*MAX at the apex to 0.55*MAX
  // at the base) inside the silhouette.  Chest films carry exactly this
  // layout, and the dark surround is what keeps plaintext/ciphertext SSIM
  // near zero: luminance similarity against byte noise collapses there.
  const double air = 0.03 * MAX;
  const double bx = 0.50 * n, by = 0.55 * n;
  const double ax = 0.32 * n, ay = 0.62 * n;
  std::vector<double> body(static_cast<size_t>(n) * n);
  std::vector<double> val(static_cast<size_t>(n) * n);
  for (uint32_t y = 0; y < n; ++y) {
    const double g = MAX * (0.35 + 0.20 * (static_cast<double>(y) / (n - 1)));
    for (uint32_t x = 0; x < n; ++x) {
      const double d = std::hypot((x - bx) / ax, (y - by) / ay);
      const double t = std::clamp((1.0 - d) / 0.06, 0.0, 1.0);
      body[static_cast<size_t>(y) * n + x] = t;
      val[static_cast<size_t>(y) * n + x] = air + t * (g - air);
    }
  }

  if (spec.class_label == PhantomClass::Nodule) {
    // Disc center in the central half, radius uniform in [size/10, size/5],
    // soft edge over ~12% of the radius.
    const double cx = n * (0.25 + 0.5 * rng.next_f64());
    const double cy = n * (0.25 + 0.5 * rng.next_f64());
    const double r = n / 10.0 + (n / 5.0 - n / 10.0) * rng.next_f64();
    const double edge = std::max(1.0, 0.12 * r);
    for (uint32_t y = 0; y < n; ++y) {
      for (uint32_t x = 0; x < n; ++x) {
        const double d = std::hypot(x - cx, y - cy);
        const double f = std::clamp((r - d) / edge, 0.0, 1.0);
        const size_t i = static_cast<size_t>(y) * n + x;
        val[i] += body[i] * 0.35 * MAX * f;
      }
    }
  } else if (spec.class_label == PhantomClass::LinearOpacity) {
    // Band through a point in the central half at a uniform angle.
    const double px = n * (0.25 + 0.5 * rng.next_f64());
    const double py = n * (0.25 + 0.5 * rng.next_f64());
    const double theta = std::numbers::pi * rng.next_f64();
    const double nx = std::cos(theta);
    const double ny = std::sin(theta);
    const double half_t = n / 24.0 + (n / 10.0 - n / 24.0) * rng.next_f64();
    const double edge = std::max(1.0, 0.25 * half_t);
    for (uint32_t y = 0; y < n; ++y) {
      for (uint32_t x = 0; x < n; ++x) {
        const double d = std::abs(nx * (x - px) + ny * (y - py));
        const double f = std::clamp((half_t - d) / edge, 0.0, 1.0);
        const size_t i = static_cast<size_t>(y) * n + x;
        val[i] += body[i] * 0.30 * MAX * f;
      }
    }
  }

  ImageBuffer img = make_image(n, n, 8);
  const double sigma = spec.noise_sigma * MAX;
  for (size_t i = 0; i < val.size(); ++i) {
    double v = val[i];
    if (sigma > 0) v += sigma * rng.next_gaussian();
    long r = std::lround(v);
    if (r < 0) r = 0;
    if (r > 255) r = 255;
    img.samples[i] = static_cast<uint16_t>(r);
  }
  return img;
}

}  // namespace semcrypt
