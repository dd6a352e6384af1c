#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semcrypt/cnn.hpp"

// Pipeline latency/storage harness.  Every corpus image flows
// phantom -> compress -> encrypt -> decrypt -> mask -> infer, each stage
// wall-clock timed as the median of `repetitions` runs after one untimed
// warm-up.  Sizes and ids are deterministic for a fixed seed; only the
// timing columns vary between runs.

namespace semcrypt::bench {

struct CorpusSpec {
  size_t count = 100;
  uint32_t image_size = 128;  // must match the model's input and divide by the mask block
  double noise_sigma = 0.01;
  uint64_t seed = 7;
};

struct BenchRow {
  std::string image_id;
  size_t raw_bytes = 0;
  size_t j2l_bytes = 0;
  size_t semc_bytes = 0;
  double t_compress_ms = 0;
  double t_encrypt_ms = 0;
  double t_decrypt_ms = 0;
  double t_mask_ms = 0;
  double t_infer_ms = 0;
  // A stage failure aborts the row here: earlier columns keep their values,
  // later ones stay zero, and the message lands in this column.
  std::string error;
};

struct AggregateRow {
  std::string label;  // mean, median, p95
  double raw_bytes = 0;
  double j2l_bytes = 0;
  double semc_bytes = 0;
  double t_compress_ms = 0;
  double t_encrypt_ms = 0;
  double t_decrypt_ms = 0;
  double t_mask_ms = 0;
  double t_infer_ms = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;             // one per corpus image
  std::vector<AggregateRow> aggregates;   // over rows without errors; empty if none
};

// pre: repetitions >= 3 (median-of-reps per stage).  The model's input size
// must match corpus.image_size; a mismatch surfaces as per-row error entries.
BenchReport run_pipeline_bench(const CorpusSpec& corpus, int repetitions,
                               const cnn::Model& model);

// Header + per-image rows + aggregate rows, columns in BenchRow field order.
std::string to_csv(const BenchReport& report);

}  // namespace semcrypt::bench
