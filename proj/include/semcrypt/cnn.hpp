#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "semcrypt/error.hpp"
#include "semcrypt/image.hpp"
#include "semcrypt/mask.hpp"
#include "semcrypt/simd.hpp"

// Small fixed-architecture CNN with hand-written backprop.  The layer math is
// templated on the scalar type: training and inference instantiate float (the
// float path runs on the dispatched SIMD kernels), while gradient checking
// instantiates double, where central differences at eps=1e-4 are actually
// resolvable.  Both instantiations share every formula.

namespace semcrypt::cnn {

enum class LayerKind : uint8_t {
  Conv = 1,     // 3x3, stride 1, zero-pad 1
  Relu = 2,
  Pool = 3,     // 2x2 max, stride 2
  Flatten = 4,
  Dense = 5,
};

template <typename T>
struct Tensor {
  size_t n = 0, c = 0, h = 0, w = 0;  // NCHW, row-major
  std::vector<T> v;

  Tensor() = default;
  Tensor(size_t n_, size_t c_, size_t h_, size_t w_)
      : n(n_), c(c_), h(h_), w(w_), v(n_ * c_ * h_ * w_, T(0)) {}

  size_t count() const { return n * c * h * w; }
  T* row(size_t in, size_t ic, size_t y) { return v.data() + ((in * c + ic) * h + y) * w; }
  const T* row(size_t in, size_t ic, size_t y) const {
    return v.data() + ((in * c + ic) * h + y) * w;
  }
  bool operator==(const Tensor&) const = default;
};

// Conv uses (out_ch, in_ch) with w laid out [out][in][3][3]; Dense uses
// (out_dim, in_dim) with w laid out [out][in].  Relu/Pool/Flatten carry no
// state and keep both dims zero.
template <typename T>
struct Layer {
  LayerKind kind;
  size_t out_dim = 0, in_dim = 0;
  std::vector<T> w, b;
};

template <typename T>
struct Network {
  std::vector<Layer<T>> layers;
};

template <typename T>
struct ForwardCache {
  std::vector<Tensor<T>> input;                 // input of each layer
  std::vector<std::vector<uint32_t>> argmax;    // per layer; filled for Pool
};

template <typename T>
struct Grads {
  std::vector<std::vector<T>> w, b;  // aligned with Network::layers
};

namespace detail {

inline void axpy(float* y, const float* x, float a, size_t n) {
  simd::active().axpy_f32(y, x, a, n);
}
inline float dot(const float* a, const float* b, size_t n) {
  return simd::active().dot_f32(a, b, n);
}
inline void relu(float* y, const float* x, size_t n) { simd::active().relu_f32(y, x, n); }
inline void relu_grad(float* g, const float* x, size_t n) {
  simd::active().relu_grad_f32(g, x, n);
}

template <typename T>
void axpy(T* y, const T* x, T a, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}
template <typename T>
T dot(const T* a, const T* b, size_t n) {
  T s = 0;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}
template <typename T>
void relu(T* y, const T* x, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}
template <typename T>
void relu_grad(T* g, const T* x, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    if (!(x[i] > T(0))) g[i] = T(0);
  }
}

// Valid output-column span for a 3x3 tap at horizontal offset kx in {0,1,2}
// with zero padding: input column ix = ox + kx - 1 must land in [0, w).
inline void tap_span(size_t kx, size_t w, size_t& lo, size_t& hi) {
  lo = kx == 0 ? 1 : 0;
  hi = kx == 2 ? w - 1 : w;
}

}  // namespace detail

template <typename T>
Tensor<T> conv_forward(const Layer<T>& l, const Tensor<T>& x) {
  require(x.c == l.in_dim, Err::ShapeMismatch,
          "conv expects " + std::to_string(l.in_dim) + " channels, got " + std::to_string(x.c));
  require(x.h >= 1 && x.w >= 1, Err::ShapeMismatch, "conv input is empty");
  Tensor<T> y(x.n, l.out_dim, x.h, x.w);
  for (size_t in = 0; in < x.n; ++in) {
    for (size_t co = 0; co < l.out_dim; ++co) {
      for (size_t oy = 0; oy < x.h; ++oy) {
        T* yr = y.row(in, co, oy);
        std::fill(yr, yr + x.w, l.b[co]);
      }
      for (size_t ci = 0; ci < l.in_dim; ++ci) {
        const T* wk = l.w.data() + (co * l.in_dim + ci) * 9;
        for (size_t ky = 0; ky < 3; ++ky) {
          for (size_t kx = 0; kx < 3; ++kx) {
            const T wv = wk[ky * 3 + kx];
            size_t lo, hi;
            detail::tap_span(kx, x.w, lo, hi);
            for (size_t oy = 0; oy < x.h; ++oy) {
              const size_t iy = oy + ky;
              if (iy < 1 || iy > x.h) continue;  // iy-1 in [0, h)
              detail::axpy(y.row(in, co, oy) + lo, x.row(in, ci, iy - 1) + lo + kx - 1, wv,
                           hi - lo);
            }
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> conv_backward(const Layer<T>& l, const Tensor<T>& x, const Tensor<T>& dy,
                        std::vector<T>& dw, std::vector<T>& db) {
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  for (size_t in = 0; in < x.n; ++in) {
    for (size_t co = 0; co < l.out_dim; ++co) {
      for (size_t oy = 0; oy < x.h; ++oy) {
        const T* dyr = dy.row(in, co, oy);
        T s = 0;
        for (size_t ox = 0; ox < x.w; ++ox) s += dyr[ox];
        db[co] += s;
      }
      for (size_t ci = 0; ci < l.in_dim; ++ci) {
        T* dwk = dw.data() + (co * l.in_dim + ci) * 9;
        const T* wk = l.w.data() + (co * l.in_dim + ci) * 9;
        for (size_t ky = 0; ky < 3; ++ky) {
          for (size_t kx = 0; kx < 3; ++kx) {
            size_t lo, hi;
            detail::tap_span(kx, x.w, lo, hi);
            const T wv = wk[ky * 3 + kx];
            T acc = 0;
            for (size_t oy = 0; oy < x.h; ++oy) {
              const size_t iy = oy + ky;
              if (iy < 1 || iy > x.h) continue;
              acc += detail::dot(dy.row(in, co, oy) + lo, x.row(in, ci, iy - 1) + lo + kx - 1,
                                 hi - lo);
              detail::axpy(dx.row(in, ci, iy - 1) + lo + kx - 1, dy.row(in, co, oy) + lo, wv,
                           hi - lo);
            }
            dwk[ky * 3 + kx] += acc;
          }
        }
      }
    }
  }
  return dx;
}

template <typename T>
Tensor<T> pool_forward(const Tensor<T>& x, std::vector<uint32_t>* argmax) {
  require(x.h % 2 == 0 && x.w % 2 == 0, Err::ShapeMismatch, "pool needs even dims");
  Tensor<T> y(x.n, x.c, x.h / 2, x.w / 2);
  if (argmax) argmax->assign(y.count(), 0);
  size_t oi = 0;
  for (size_t in = 0; in < x.n; ++in) {
    for (size_t ic = 0; ic < x.c; ++ic) {
      for (size_t oy = 0; oy < y.h; ++oy) {
        const T* r0 = x.row(in, ic, 2 * oy);
        const T* r1 = x.row(in, ic, 2 * oy + 1);
        T* yr = y.row(in, ic, oy);
        for (size_t ox = 0; ox < y.w; ++ox, ++oi) {
          // fixed scan order; first maximum wins on ties
          const T cand[4] = {r0[2 * ox], r0[2 * ox + 1], r1[2 * ox], r1[2 * ox + 1]};
          size_t best = 0;
          for (size_t k = 1; k < 4; ++k) {
            if (cand[k] > cand[best]) best = k;
          }
          yr[ox] = cand[best];
          if (argmax) {
            const size_t iy = 2 * oy + best / 2, ix = 2 * ox + best % 2;
            (*argmax)[oi] = static_cast<uint32_t>((x.row(in, ic, iy) - x.v.data()) + ix);
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> pool_backward(const Tensor<T>& x, const Tensor<T>& dy,
                        const std::vector<uint32_t>& argmax) {
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  for (size_t i = 0; i < dy.count(); ++i) dx.v[argmax[i]] += dy.v[i];
  return dx;
}

template <typename T>
Tensor<T> dense_forward(const Layer<T>& l, const Tensor<T>& x) {
  const size_t d = x.c * x.h * x.w;
  require(d == l.in_dim, Err::ShapeMismatch,
          "dense expects " + std::to_string(l.in_dim) + " inputs, got " + std::to_string(d));
  Tensor<T> y(x.n, l.out_dim, 1, 1);
  for (size_t in = 0; in < x.n; ++in) {
    const T* xr = x.v.data() + in * d;
    T* yr = y.v.data() + in * l.out_dim;
    for (size_t k = 0; k < l.out_dim; ++k) {
      yr[k] = detail::dot(l.w.data() + k * d, xr, d) + l.b[k];
    }
  }
  return y;
}

template <typename T>
Tensor<T> dense_backward(const Layer<T>& l, const Tensor<T>& x, const Tensor<T>& dy,
                         std::vector<T>& dw, std::vector<T>& db) {
  const size_t d = l.in_dim;
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  for (size_t in = 0; in < x.n; ++in) {
    const T* xr = x.v.data() + in * d;
    const T* dyr = dy.v.data() + in * l.out_dim;
    T* dxr = dx.v.data() + in * d;
    for (size_t k = 0; k < l.out_dim; ++k) {
      db[k] += dyr[k];
      detail::axpy(dw.data() + k * d, xr, dyr[k], d);
      detail::axpy(dxr, l.w.data() + k * d, dyr[k], d);
    }
  }
  return dx;
}

// Runs the stack, returning logits of shape (batch, classes, 1, 1).  The
// cache, when supplied, stores each layer's input for the backward pass.
template <typename T>
Tensor<T> forward(const Network<T>& net, const Tensor<T>& batch, ForwardCache<T>* cache = nullptr) {
  require(!net.layers.empty(), Err::ShapeMismatch, "empty network");
  require(batch.n >= 1, Err::ShapeMismatch, "empty batch");
  if (cache) {
    cache->input.clear();
    cache->argmax.assign(net.layers.size(), {});
  }
  Tensor<T> x = batch;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const Layer<T>& l = net.layers[i];
    if (cache) cache->input.push_back(x);
    switch (l.kind) {
      case LayerKind::Conv: x = conv_forward(l, x); break;
      case LayerKind::Relu: {
        Tensor<T> y(x.n, x.c, x.h, x.w);
        detail::relu(y.v.data(), x.v.data(), x.count());
        x = std::move(y);
        break;
      }
      case LayerKind::Pool: x = pool_forward(x, cache ? &cache->argmax[i] : nullptr); break;
      case LayerKind::Flatten: {
        Tensor<T> y(x.n, x.c * x.h * x.w, 1, 1);
        y.v = x.v;
        x = std::move(y);
        break;
      }
      case LayerKind::Dense: x = dense_forward(l, x); break;
    }
  }
  return x;
}

// In-place row softmax over (n, k, 1, 1) logits.
template <typename T>
void softmax_rows(Tensor<T>& t) {
  const size_t k = t.c;
  for (size_t in = 0; in < t.n; ++in) {
    T* r = t.v.data() + in * k;
    T m = r[0];
    for (size_t j = 1; j < k; ++j) m = std::max(m, r[j]);
    T sum = 0;
    for (size_t j = 0; j < k; ++j) {
      r[j] = std::exp(r[j] - m);
      sum += r[j];
    }
    for (size_t j = 0; j < k; ++j) r[j] /= sum;
  }
}

// Mean softmax cross-entropy and its gradient w.r.t. the logits.
template <typename T>
T softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                        Tensor<T>* dlogits) {
  require(logits.n == labels.size(), Err::ShapeMismatch, "labels do not match batch");
  const size_t k = logits.c;
  Tensor<T> p = logits;
  softmax_rows(p);
  T loss = 0;
  for (size_t in = 0; in < logits.n; ++in) {
    const int lab = labels[in];
    require(lab >= 0 && static_cast<size_t>(lab) < k, Err::ShapeMismatch, "label out of range");
    loss -= std::log(std::max(p.v[in * k + lab], std::numeric_limits<T>::min()));
  }
  loss /= static_cast<T>(logits.n);
  if (dlogits) {
    *dlogits = std::move(p);
    const T inv = T(1) / static_cast<T>(logits.n);
    for (size_t in = 0; in < logits.n; ++in) {
      for (size_t j = 0; j < k; ++j) dlogits->v[in * k + j] *= inv;
      dlogits->v[in * k + labels[in]] -= inv;
    }
  }
  return loss;
}

template <typename T>
Grads<T> make_grads(const Network<T>& net) {
  Grads<T> g;
  for (const auto& l : net.layers) {
    g.w.emplace_back(l.w.size(), T(0));
    g.b.emplace_back(l.b.size(), T(0));
  }
  return g;
}

// Full forward/backward pass; accumulates into a fresh gradient set.
template <typename T>
T loss_and_grads(const Network<T>& net, const Tensor<T>& batch, const std::vector<int>& labels,
                 Grads<T>& out) {
  ForwardCache<T> cache;
  Tensor<T> logits = forward(net, batch, &cache);
  Tensor<T> d;
  const T loss = softmax_cross_entropy(logits, labels, &d);
  out = make_grads(net);
  for (size_t i = net.layers.size(); i-- > 0;) {
    const Layer<T>& l = net.layers[i];
    const Tensor<T>& x = cache.input[i];
    switch (l.kind) {
      case LayerKind::Conv: d = conv_backward(l, x, d, out.w[i], out.b[i]); break;
      case LayerKind::Relu: detail::relu_grad(d.v.data(), x.v.data(), d.count()); break;
      case LayerKind::Pool: d = pool_backward(x, d, cache.argmax[i]); break;
      case LayerKind::Flatten: {
        Tensor<T> dx(x.n, x.c, x.h, x.w);
        dx.v = d.v;
        d = std::move(dx);
        break;
      }
      case LayerKind::Dense: d = dense_backward(l, x, d, out.w[i], out.b[i]); break;
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// float-instantiated production API (cnn.cpp)

using Model = Network<float>;

enum class Domain : uint8_t { Plain = 0, Masked = 1, CipherControl = 2 };

const char* domain_name(Domain d);
Domain domain_from_name(const std::string& name);

struct DatasetSpec {
  size_t train_per_class = 200;
  size_t test_per_class = 100;
  double noise_sigma = 0.01;
  uint32_t image_size = 64;
};

struct TrainConfig {
  int epochs = 10;
  size_t batch_size = 32;
  float learning_rate = 0.01f;
  float momentum = 0.9f;
  uint64_t seed = 7;
  DatasetSpec dataset;
  Domain domain = Domain::Plain;
  // One mask key is shared across the whole experiment by default; per-image
  // keys destroy the cross-image block statistics and push the masked arm
  // toward the cipher control.
  bool per_image_mask_keys = false;
};

struct Dataset {
  Tensor<float> x;          // (count, 1, size, size), values in [-1, 1]
  std::vector<int> labels;  // class per image
};

struct EvalReport {
  double accuracy = 0;
  double macro_f1 = 0;
  double macro_auc = 0;
  std::vector<double> precision, recall, f1, auc;  // per class
  std::vector<std::vector<size_t>> confusion;      // [true][predicted]
};

// Conv(8) -> ReLU -> Pool -> Conv(16) -> ReLU -> Pool -> Flatten -> Dense(3),
// shaped for square inputs of the given size; weights start at zero.
Model make_default_model(uint32_t image_size = 64, size_t classes = 3);

// He-uniform fan-in init for conv/dense weights, zero biases, drawn in layer
// order from a stream derived from the seed.
void he_init(Model& m, uint64_t seed);

// Phantom corpus for one experiment arm.  Image i of class c draws its own
// phantom seed from (seed, split, c, i); the domain transform is applied
// before float conversion.  Returns {train, test}.
std::pair<Dataset, Dataset> build_datasets(const TrainConfig& cfg);

// Mask key the Masked arm uses: SHA-256 over a fixed label, the seed, and
// (when per-image keys are on) the image index.  Exposed so a model trained
// here can score externally masked images.
MaskKey experiment_mask_key(uint64_t seed, uint64_t image_index = 0, bool per_image = false);

// Single image as a network input batch, zero-centered the same way the
// training corpus is.
Tensor<float> image_to_input(const ImageBuffer& img);

// SGD with momentum over shuffled batches; deterministic for a fixed config.
Model train(const TrainConfig& cfg);

EvalReport evaluate(const Model& m, const Dataset& data);

// Mann-Whitney one-vs-rest AUC with midrank tie handling, exposed for the
// rank-oracle tests.  is_pos marks the positive class per score.
double auc_midrank(const std::vector<double>& scores, const std::vector<bool>& is_pos);

// "TCNN" | version u8 | layer count u8 | per layer: kind u8, dims u32 x4 LE,
// then f32 LE weights and biases for Conv/Dense.
std::vector<uint8_t> save_model(const Model& m);
Model load_model(const std::vector<uint8_t>& bytes);

}  // namespace semcrypt::cnn
