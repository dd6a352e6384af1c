#include "semcrypt/cnn.hpp"

#include <bit>
#include <cstring>
#include <numeric>

#include "semcrypt/crypto.hpp"
#include "semcrypt/leakage.hpp"
#include "semcrypt/mask.hpp"
#include "semcrypt/phantom.hpp"
#include "semcrypt/rng.hpp"

namespace semcrypt::cnn {

namespace {

// derive_seed labels for the independent streams of one experiment
constexpr uint64_t kTagInit = 0x11;
constexpr uint64_t kTagShuffle = 0x12;
constexpr uint64_t kTagTrainImage = 0x13;
constexpr uint64_t kTagTestImage = 0x14;
constexpr uint64_t kTagCipherIv = 0x15;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<uint8_t>& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }

struct Reader {
  const std::vector<uint8_t>& d;
  size_t pos = 0;

  uint8_t u8() {
    require(pos < d.size(), Err::ShapeHeaderMismatch, "model file truncated");
    return d[pos++];
  }
  uint32_t u32() {
    require(pos + 4 <= d.size(), Err::ShapeHeaderMismatch, "model file truncated");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(d[pos++]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
};

// Applies the arm's transform and converts to zero-centered [-1,1] floats.
void append_image(Dataset& ds, size_t slot, const ImageBuffer& img, const TrainConfig& cfg,
                  uint64_t image_index) {
  ImageBuffer out;
  switch (cfg.domain) {
    case Domain::Plain: out = img; break;
    case Domain::Masked: {
      const MaskKey k = experiment_mask_key(cfg.seed, image_index, cfg.per_image_mask_keys);
      out = apply_mask(img, derive_mask_plan(k, img.width, img.height, 8));
      break;
    }
    case Domain::CipherControl: {
      // true ciphertext of this image's pixels, rendered back as an image:
      // the negative control carries class labels but no usable signal
      std::vector<uint8_t> px(img.samples.begin(), img.samples.end());
      SeededEntropy entropy(derive_seed(cfg.seed, kTagCipherIv, image_index));
      const auto container = crypto::encrypt_container(
          px, crypto::to_bytes("semcrypt.cipher-control"), crypto::CipherId::Aes128Cbc, entropy);
      const std::vector<uint8_t> ct(container.begin() + crypto::kContainerHeaderSize,
                                    container.end());
      out = leakage::render_cipher_as_image(ct, img.width, img.height);
      break;
    }
  }
  float* dst = ds.x.v.data() + slot * ds.x.c * ds.x.h * ds.x.w;
  const float scale = 2.0f / static_cast<float>(out.max_value());
  for (size_t i = 0; i < out.samples.size(); ++i)
    dst[i] = static_cast<float>(out.samples[i]) * scale - 1.0f;
}

Dataset build_split(const TrainConfig& cfg, size_t per_class, uint64_t image_tag) {
  const uint32_t size = cfg.dataset.image_size;
  const size_t total = per_class * 3;
  Dataset ds;
  ds.x = Tensor<float>(total, 1, size, size);
  ds.labels.resize(total);
  size_t slot = 0;
  for (int c = 0; c < 3; ++c) {
    for (size_t i = 0; i < per_class; ++i, ++slot) {
      PhantomSpec spec;
      spec.class_label = static_cast<PhantomClass>(c);
      spec.size = size;
      spec.seed = derive_seed(cfg.seed, image_tag, slot);
      spec.noise_sigma = cfg.dataset.noise_sigma;
      const ImageBuffer img = phantom_generate(spec);
      ds.labels[slot] = c;
      // image_index stays unique across splits so per-image mask keys and
      // cipher IVs never repeat between train and test
      append_image(ds, slot, img, cfg, image_tag * 1000000 + slot);
    }
  }
  return ds;
}

void validate(const TrainConfig& cfg) {
  require(cfg.learning_rate > 0, Err::UsageError, "learning_rate must be positive");
  require(cfg.batch_size >= 1, Err::UsageError, "batch_size must be at least 1");
  require(cfg.epochs >= 0, Err::UsageError, "epochs must be non-negative");
  require(cfg.dataset.image_size >= 16 && cfg.dataset.image_size % 4 == 0, Err::UsageError,
          "image_size must be a multiple of 4, at least 16");
  require(cfg.dataset.train_per_class >= 1 && cfg.dataset.test_per_class >= 1, Err::UsageError,
          "dataset must have at least one image per class");
}

}  // namespace

MaskKey experiment_mask_key(uint64_t seed, uint64_t image_index, bool per_image) {
  std::vector<uint8_t> buf = crypto::to_bytes("semcrypt.experiment.mask-key");
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<uint8_t>(seed >> (8 * i)));
  if (per_image) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<uint8_t>(image_index >> (8 * i)));
  }
  MaskKey k;
  k.key = crypto::sha256(buf);
  return k;
}

Tensor<float> image_to_input(const ImageBuffer& img) {
  require(img.width > 0 && img.height > 0, Err::EmptyInput, "image is empty");
  Tensor<float> x(1, 1, img.height, img.width);
  const float scale = 2.0f / static_cast<float>(img.max_value());
  for (size_t i = 0; i < img.samples.size(); ++i) {
    x.v[i] = static_cast<float>(img.samples[i]) * scale - 1.0f;
  }
  return x;
}

const char* domain_name(Domain d) {
  switch (d) {
    case Domain::Plain: return "plain";
    case Domain::Masked: return "masked";
    case Domain::CipherControl: return "cipher";
  }
  return "unknown";
}

Domain domain_from_name(const std::string& name) {
  if (name == "plain") return Domain::Plain;
  if (name == "masked") return Domain::Masked;
  if (name == "cipher" || name == "cipher-control") return Domain::CipherControl;
  fail(Err::UsageError, "unknown domain: " + name);
}

Model make_default_model(uint32_t image_size, size_t classes) {
  require(image_size % 4 == 0 && image_size >= 4, Err::UsageError,
          "image_size must be a multiple of 4");
  Model m;
  auto conv = [](size_t out, size_t in) {
    Layer<float> l;
    l.kind = LayerKind::Conv;
    l.out_dim = out;
    l.in_dim = in;
    l.w.assign(out * in * 9, 0.0f);
    l.b.assign(out, 0.0f);
    return l;
  };
  auto bare = [](LayerKind k) {
    Layer<float> l;
    l.kind = k;
    return l;
  };
  m.layers.push_back(conv(8, 1));
  m.layers.push_back(bare(LayerKind::Relu));
  m.layers.push_back(bare(LayerKind::Pool));
  m.layers.push_back(conv(16, 8));
  m.layers.push_back(bare(LayerKind::Relu));
  m.layers.push_back(bare(LayerKind::Pool));
  m.layers.push_back(bare(LayerKind::Flatten));
  Layer<float> d;
  d.kind = LayerKind::Dense;
  d.out_dim = classes;
  d.in_dim = 16 * (image_size / 4) * (image_size / 4);
  d.w.assign(d.out_dim * d.in_dim, 0.0f);
  d.b.assign(d.out_dim, 0.0f);
  m.layers.push_back(d);
  return m;
}

void he_init(Model& m, uint64_t seed) {
  Xoshiro256pp rng(derive_seed(seed, kTagInit));
  for (auto& l : m.layers) {
    if (l.kind != LayerKind::Conv && l.kind != LayerKind::Dense) continue;
    const size_t fan_in = l.kind == LayerKind::Conv ? l.in_dim * 9 : l.in_dim;
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& w : l.w) w = static_cast<float>((2.0 * rng.next_f64() - 1.0) * limit);
    std::fill(l.b.begin(), l.b.end(), 0.0f);
  }
}

std::pair<Dataset, Dataset> build_datasets(const TrainConfig& cfg) {
  validate(cfg);
  return {build_split(cfg, cfg.dataset.train_per_class, kTagTrainImage),
          build_split(cfg, cfg.dataset.test_per_class, kTagTestImage)};
}

Model train(const TrainConfig& cfg) {
  validate(cfg);
  Dataset ds = build_split(cfg, cfg.dataset.train_per_class, kTagTrainImage);
  Model m = make_default_model(cfg.dataset.image_size);
  he_init(m, cfg.seed);

  Grads<float> vel = make_grads(m);
  Grads<float> g;
  Xoshiro256pp shuffle_rng(derive_seed(cfg.seed, kTagShuffle));
  std::vector<size_t> order(ds.labels.size());
  std::iota(order.begin(), order.end(), size_t{0});
  const size_t plane = ds.x.c * ds.x.h * ds.x.w;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order.data(), order.size());
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t bn = std::min(cfg.batch_size, order.size() - start);
      Tensor<float> batch(bn, ds.x.c, ds.x.h, ds.x.w);
      std::vector<int> labels(bn);
      for (size_t i = 0; i < bn; ++i) {
        const size_t src = order[start + i];
        std::memcpy(batch.v.data() + i * plane, ds.x.v.data() + src * plane,
                    plane * sizeof(float));
        labels[i] = ds.labels[src];
      }
      loss_and_grads(m, batch, labels, g);
      for (size_t li = 0; li < m.layers.size(); ++li) {
        auto step = [&](std::vector<float>& w, std::vector<float>& v,
                        const std::vector<float>& grad) {
          for (size_t j = 0; j < w.size(); ++j) {
            v[j] = cfg.momentum * v[j] - cfg.learning_rate * grad[j];
            w[j] += v[j];
          }
        };
        step(m.layers[li].w, vel.w[li], g.w[li]);
        step(m.layers[li].b, vel.b[li], g.b[li]);
      }
    }
  }
  return m;
}

double auc_midrank(const std::vector<double>& scores, const std::vector<bool>& is_pos) {
  require(scores.size() == is_pos.size(), Err::ShapeMismatch, "scores/labels length mismatch");
  size_t pos = 0;
  for (bool p : is_pos) pos += p;
  const size_t neg = scores.size() - pos;
  require(pos > 0 && neg > 0, Err::SingleClassDataset, "AUC needs both classes");

  std::vector<size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    // ranks are 1-based; every member of the tie group gets the mid rank
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) {
      if (is_pos[idx[k]]) rank_sum_pos += mid;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

EvalReport evaluate(const Model& m, const Dataset& data) {
  require(!data.labels.empty(), Err::EmptyInput, "empty dataset");
  require(data.x.n == data.labels.size(), Err::ShapeMismatch, "labels do not match images");

  size_t classes = 0;
  for (const auto& l : m.layers) {
    if (l.kind == LayerKind::Dense || l.kind == LayerKind::Conv) classes = l.out_dim;
  }
  require(classes >= 2, Err::ShapeMismatch, "model has no output layer");

  std::vector<int> distinct = data.labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  require(distinct.size() >= 2, Err::SingleClassDataset, "AUC undefined on one class");

  // shard into batches; all reductions are order-independent counts/sums
  const size_t plane = data.x.c * data.x.h * data.x.w;
  std::vector<double> probs(data.x.n * classes);
  std::vector<int> pred(data.x.n);
  const size_t batch_size = 64;
  for (size_t start = 0; start < data.x.n; start += batch_size) {
    const size_t bn = std::min(batch_size, data.x.n - start);
    Tensor<float> batch(bn, data.x.c, data.x.h, data.x.w);
    std::memcpy(batch.v.data(), data.x.v.data() + start * plane,
                bn * plane * sizeof(float));
    Tensor<float> p = forward(m, batch);
    require(p.c == classes, Err::ShapeMismatch, "logit width mismatch");
    softmax_rows(p);
    for (size_t i = 0; i < bn; ++i) {
      size_t best = 0;
      for (size_t k = 0; k < classes; ++k) {
        const double v = p.v[i * classes + k];
        probs[(start + i) * classes + k] = v;
        if (v > p.v[i * classes + best]) best = k;
      }
      pred[start + i] = static_cast<int>(best);
    }
  }

  EvalReport r;
  r.confusion.assign(classes, std::vector<size_t>(classes, 0));
  size_t correct = 0;
  for (size_t i = 0; i < data.labels.size(); ++i) {
    r.confusion[static_cast<size_t>(data.labels[i])][static_cast<size_t>(pred[i])]++;
    if (pred[i] == data.labels[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(data.labels.size());

  r.precision.assign(classes, 0);
  r.recall.assign(classes, 0);
  r.f1.assign(classes, 0);
  r.auc.assign(classes, 0);
  double f1_sum = 0, auc_sum = 0;
  size_t auc_classes = 0;
  for (size_t c = 0; c < classes; ++c) {
    size_t tp = r.confusion[c][c], fp = 0, fn = 0;
    for (size_t o = 0; o < classes; ++o) {
      if (o == c) continue;
      fp += r.confusion[o][c];
      fn += r.confusion[c][o];
    }
    r.precision[c] = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall[c] = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double pr = r.precision[c] + r.recall[c];
    r.f1[c] = pr > 0 ? 2.0 * r.precision[c] * r.recall[c] / pr : 0.0;
    f1_sum += r.f1[c];

    // one-vs-rest AUC for classes present with both outcomes
    std::vector<double> scores(data.labels.size());
    std::vector<bool> is_pos(data.labels.size());
    size_t pos = 0;
    for (size_t i = 0; i < data.labels.size(); ++i) {
      scores[i] = probs[i * classes + c];
      is_pos[i] = data.labels[i] == static_cast<int>(c);
      pos += is_pos[i];
    }
    if (pos > 0 && pos < data.labels.size()) {
      r.auc[c] = auc_midrank(scores, is_pos);
      auc_sum += r.auc[c];
      ++auc_classes;
    }
  }
  r.macro_f1 = f1_sum / static_cast<double>(classes);
  r.macro_auc = auc_classes ? auc_sum / static_cast<double>(auc_classes) : 0.0;
  return r;
}

std::vector<uint8_t> save_model(const Model& m) {
  require(m.layers.size() <= 255, Err::Internal, "too many layers to serialize");
  std::vector<uint8_t> out;
  for (char c : {'T', 'C', 'N', 'N'}) out.push_back(static_cast<uint8_t>(c));
  out.push_back(1);  // version
  out.push_back(static_cast<uint8_t>(m.layers.size()));
  for (const auto& l : m.layers) {
    out.push_back(static_cast<uint8_t>(l.kind));
    switch (l.kind) {
      case LayerKind::Conv:
        put_u32(out, static_cast<uint32_t>(l.out_dim));
        put_u32(out, static_cast<uint32_t>(l.in_dim));
        put_u32(out, 3);
        put_u32(out, 3);
        break;
      case LayerKind::Dense:
        put_u32(out, static_cast<uint32_t>(l.out_dim));
        put_u32(out, static_cast<uint32_t>(l.in_dim));
        put_u32(out, 0);
        put_u32(out, 0);
        break;
      default:
        for (int i = 0; i < 4; ++i) put_u32(out, 0);
        break;
    }
    for (float w : l.w) put_f32(out, w);
    for (float b : l.b) put_f32(out, b);
  }
  return out;
}

Model load_model(const std::vector<uint8_t>& bytes) {
  require(bytes.size() >= 6, Err::BadMagic, "not a model file");
  require(bytes[0] == 'T' && bytes[1] == 'C' && bytes[2] == 'N' && bytes[3] == 'N', Err::BadMagic,
          "bad magic");
  require(bytes[4] == 1, Err::BadMagic, "unsupported model version");

  Reader rd{bytes, 5};
  const size_t count = rd.u8();
  require(count >= 1, Err::ShapeHeaderMismatch, "model has no layers");

  Model m;
  size_t channels = 0;  // 0 until the first parameterized layer pins it
  for (size_t li = 0; li < count; ++li) {
    const uint8_t kind_raw = rd.u8();
    require(kind_raw >= 1 && kind_raw <= 5, Err::ShapeHeaderMismatch, "unknown layer kind");
    Layer<float> l;
    l.kind = static_cast<LayerKind>(kind_raw);
    uint32_t dims[4];
    for (auto& d : dims) d = rd.u32();
    switch (l.kind) {
      case LayerKind::Conv: {
        require(dims[2] == 3 && dims[3] == 3, Err::ShapeHeaderMismatch, "conv kernel must be 3x3");
        require(dims[0] >= 1 && dims[0] <= 4096 && dims[1] >= 1 && dims[1] <= 4096,
                Err::ShapeHeaderMismatch, "conv channel count out of range");
        require(channels == 0 || channels == dims[1], Err::ShapeHeaderMismatch,
                "conv input channels do not compose");
        l.out_dim = dims[0];
        l.in_dim = dims[1];
        channels = dims[0];
        break;
      }
      case LayerKind::Dense: {
        require(dims[2] == 0 && dims[3] == 0, Err::ShapeHeaderMismatch, "bad dense dims");
        require(dims[0] >= 1 && dims[0] <= 65536 && dims[1] >= 1 && dims[1] <= (1u << 26),
                Err::ShapeHeaderMismatch, "dense size out of range");
        require(channels == 0 || dims[1] % channels == 0, Err::ShapeHeaderMismatch,
                "dense width does not compose with conv channels");
        l.out_dim = dims[0];
        l.in_dim = dims[1];
        break;
      }
      default:
        require(dims[0] == 0 && dims[1] == 0 && dims[2] == 0 && dims[3] == 0,
                Err::ShapeHeaderMismatch, "stateless layer carries dims");
        break;
    }
    if (l.kind == LayerKind::Conv || l.kind == LayerKind::Dense) {
      const size_t nw =
          l.kind == LayerKind::Conv ? l.out_dim * l.in_dim * 9 : l.out_dim * l.in_dim;
      l.w.resize(nw);
      l.b.resize(l.out_dim);
      for (auto& w : l.w) w = rd.f32();
      for (auto& b : l.b) b = rd.f32();
    }
    m.layers.push_back(std::move(l));
  }
  require(rd.pos == bytes.size(), Err::ShapeHeaderMismatch, "trailing bytes after model");
  return m;
}

}  // namespace semcrypt::cnn
