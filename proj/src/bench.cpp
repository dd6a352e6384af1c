#include "semcrypt/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "semcrypt/codec.hpp"
#include "semcrypt/crypto.hpp"
#include "semcrypt/error.hpp"
#include "semcrypt/mask.hpp"
#include "semcrypt/phantom.hpp"
#include "semcrypt/rng.hpp"

namespace semcrypt::bench {

namespace {

constexpr uint64_t kTagBenchEntropy = 0x31;
constexpr uint64_t kTagBenchMaskKey = 0x32;

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// nearest-rank percentile on a sorted copy
double p95_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t rank = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
  return v[rank - 1];
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Times fn() as the median of `reps` runs after one untimed warm-up; the
// warm-up result is the one kept for the data flow.
template <typename F>
auto timed_median(int reps, double& out_ms, F&& fn) {
  auto result = fn();
  std::vector<double> samples;
  samples.reserve(static_cast<size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    auto again = fn();
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    (void)again;
  }
  out_ms = median_of(std::move(samples));
  return result;
}

void append_num(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  out += buf;
}

}  // namespace

BenchReport run_pipeline_bench(const CorpusSpec& corpus, int repetitions,
                               const cnn::Model& model) {
  require(repetitions >= 3, Err::UsageError, "bench needs at least 3 repetitions");
  require(corpus.image_size >= 16 && corpus.image_size % 8 == 0, Err::UsageError,
          "bench image size must be a multiple of 8, at least 16");

  MaskKey mask_key;
  {
    Xoshiro256pp rng(derive_seed(corpus.seed, kTagBenchMaskKey));
    for (auto& b : mask_key.key) b = static_cast<uint8_t>(rng.next_below(256));
  }
  const MaskPlan plan = derive_mask_plan(mask_key, corpus.image_size, corpus.image_size, 8);
  const std::vector<uint8_t> passphrase = crypto::to_bytes("semcrypt.bench");
  codec::EncodeParams enc_params;
  enc_params.mode = codec::CodecMode::Lossy97;

  BenchReport report;
  for (size_t i = 0; i < corpus.count; ++i) {
    BenchRow row;
    {
      char id[32];
      std::snprintf(id, sizeof id, "img-%04zu", i);
      row.image_id = id;
    }
    PhantomSpec spec;
    spec.class_label = static_cast<PhantomClass>(i % 3);
    spec.size = corpus.image_size;
    spec.seed = derive_seed(corpus.seed, 0x30, i);
    spec.noise_sigma = corpus.noise_sigma;
    const ImageBuffer img = phantom_generate(spec);
    row.raw_bytes = img.samples.size() * (img.bit_depth > 8 ? 2 : 1);

    try {
      const auto j2l = timed_median(repetitions, row.t_compress_ms,
                                    [&] { return codec::encode(img, enc_params); });
      row.j2l_bytes = j2l.size();

      // the IV source is reseeded per run so every repetition does identical work
      const uint64_t entropy_seed = derive_seed(corpus.seed, kTagBenchEntropy, i);
      const auto container = timed_median(repetitions, row.t_encrypt_ms, [&] {
        SeededEntropy entropy(entropy_seed);
        return crypto::encrypt_container(j2l, passphrase, crypto::CipherId::Aes128Cbc, entropy);
      });
      row.semc_bytes = container.size();

      timed_median(repetitions, row.t_decrypt_ms,
                   [&] { return crypto::decrypt_container(container, passphrase); });

      const ImageBuffer masked =
          timed_median(repetitions, row.t_mask_ms, [&] { return apply_mask(img, plan); });

      const cnn::Tensor<float> batch = cnn::image_to_input(masked);
      timed_median(repetitions, row.t_infer_ms, [&] { return cnn::forward(model, batch); });
    } catch (const Error& e) {
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }

  std::vector<const BenchRow*> clean;
  for (const auto& r : report.rows) {
    if (r.error.empty()) clean.push_back(&r);
  }
  if (!clean.empty()) {
    auto aggregate = [&](const std::string& label, auto&& reduce) {
      AggregateRow a;
      a.label = label;
      auto col = [&](auto&& field) {
        std::vector<double> v;
        v.reserve(clean.size());
        for (const BenchRow* r : clean) v.push_back(static_cast<double>(field(*r)));
        return reduce(std::move(v));
      };
      a.raw_bytes = col([](const BenchRow& r) { return r.raw_bytes; });
      a.j2l_bytes = col([](const BenchRow& r) { return r.j2l_bytes; });
      a.semc_bytes = col([](const BenchRow& r) { return r.semc_bytes; });
      a.t_compress_ms = col([](const BenchRow& r) { return r.t_compress_ms; });
      a.t_encrypt_ms = col([](const BenchRow& r) { return r.t_encrypt_ms; });
      a.t_decrypt_ms = col([](const BenchRow& r) { return r.t_decrypt_ms; });
      a.t_mask_ms = col([](const BenchRow& r) { return r.t_mask_ms; });
      a.t_infer_ms = col([](const BenchRow& r) { return r.t_infer_ms; });
      report.aggregates.push_back(std::move(a));
    };
    aggregate("mean", [](std::vector<double> v) { return mean_of(v); });
    aggregate("median", [](std::vector<double> v) { return median_of(std::move(v)); });
    aggregate("p95", [](std::vector<double> v) { return p95_of(std::move(v)); });
  }
  return report;
}

std::string to_csv(const BenchReport& report) {
  std::string out =
      "image_id,raw_bytes,j2l_bytes,semc_bytes,t_compress_ms,t_encrypt_ms,t_decrypt_ms,"
      "t_mask_ms,t_infer_ms,error\n";
  for (const auto& r : report.rows) {
    out += r.image_id;
    out += ',' + std::to_string(r.raw_bytes);
    out += ',' + std::to_string(r.j2l_bytes);
    out += ',' + std::to_string(r.semc_bytes);
    for (double t : {r.t_compress_ms, r.t_encrypt_ms, r.t_decrypt_ms, r.t_mask_ms, r.t_infer_ms}) {
      out += ',';
      append_num(out, t);
    }
    out += ',';
    for (char c : r.error) out += (c == ',' || c == '\n') ? ';' : c;
    out += '\n';
  }
  for (const auto& a : report.aggregates) {
    out += a.label;
    for (double v : {a.raw_bytes, a.j2l_bytes, a.semc_bytes, a.t_compress_ms, a.t_encrypt_ms,
                     a.t_decrypt_ms, a.t_mask_ms, a.t_infer_ms}) {
      out += ',';
      append_num(out, v);
    }
    out += ",\n";
  }
  return out;
}

}  // namespace semcrypt::bench
