#include "semcrypt/cli.hpp"

#include <termios.h>
#include <unistd.h>

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "semcrypt/bench.hpp"
#include "semcrypt/cnn.hpp"
#include "semcrypt/codec.hpp"
#include "semcrypt/crypto.hpp"
#include "semcrypt/dicom.hpp"
#include "semcrypt/error.hpp"
#include "semcrypt/image.hpp"
#include "semcrypt/leakage.hpp"
#include "semcrypt/mask.hpp"
#include "semcrypt/phantom.hpp"
#include "semcrypt/rng.hpp"
#include "semcrypt/vault.hpp"

namespace semcrypt::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Seeds for the experiment's leakage fixtures, disjoint from the dataset and
// bench tag spaces.
constexpr uint64_t kTagLeakPhantom = 0x21;
constexpr uint64_t kTagLeakEntropy = 0x22;

struct Global {
  bool json = false;
  bool quiet = false;
  uint64_t seed = 7;
};

void log_line(const Global& g, const std::string& s) {
  if (!g.quiet) std::fprintf(stderr, "semcrypt: %s\n", s.c_str());
}

std::string fmtf(const char* fmt, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

// One result object (or text block) per invocation, always on stdout.
void emit(const Global& g, const json& j, const std::string& text) {
  if (g.json) {
    std::fprintf(stdout, "%s\n", j.dump().c_str());
  } else if (!text.empty()) {
    std::fprintf(stdout, "%s", text.c_str());
    if (text.back() != '\n') std::fputc('\n', stdout);
  }
}

// Secrets come from the named environment variable, or an echo-off prompt
// when stdin is a terminal.  Never from argv: process listings leak it.
std::string secret_from(const std::string& env_name, const char* what) {
  if (const char* v = std::getenv(env_name.c_str())) {
    require(v[0] != '\0', Err::UsageError, env_name + " is set but empty");
    return v;
  }
  if (isatty(STDIN_FILENO) == 1) {
    std::fprintf(stderr, "%s: ", what);
    std::fflush(stderr);
    termios saved{};
    const bool have_tty = tcgetattr(STDIN_FILENO, &saved) == 0;
    if (have_tty) {
      termios noecho = saved;
      noecho.c_lflag &= ~static_cast<tcflag_t>(ECHO);
      tcsetattr(STDIN_FILENO, TCSAFLUSH, &noecho);
    }
    std::string line;
    std::getline(std::cin, line);
    if (have_tty) tcsetattr(STDIN_FILENO, TCSAFLUSH, &saved);
    std::fputc('\n', stderr);
    require(!line.empty(), Err::UsageError, std::string("empty ") + what);
    return line;
  }
  fail(Err::UsageError,
       env_name + " is not set (secrets are read from the environment or a prompt, never argv)");
}

void write_text(const std::string& path, const std::string& s) {
  write_file(path, reinterpret_cast<const uint8_t*>(s.data()), s.size());
}

crypto::CipherId cipher_from_name(const std::string& s) {
  if (s == "aes128" || s == "aes-128" || s == "aes128cbc") return crypto::CipherId::Aes128Cbc;
  if (s == "aes256" || s == "aes-256" || s == "aes256cbc") return crypto::CipherId::Aes256Cbc;
  fail(Err::UsageError, "unknown cipher: " + s + " (expected aes128 or aes256)");
}

codec::CodecMode mode_from_name(const std::string& s) {
  if (s == "lossless" || s == "5/3" || s == "53") return codec::CodecMode::Lossless53;
  if (s == "lossy" || s == "9/7" || s == "97") return codec::CodecMode::Lossy97;
  fail(Err::UsageError, "unknown mode: " + s + " (expected lossless or lossy)");
}

const char* mode_label(codec::CodecMode m) {
  return m == codec::CodecMode::Lossless53 ? "lossless 5/3" : "lossy 9/7";
}

std::string class_label(size_t i) {
  if (i < 3) return phantom_class_name(static_cast<PhantomClass>(i));
  return "class-" + std::to_string(i);
}

size_t raw_pixel_bytes(const ImageBuffer& img) {
  return img.pixel_count() * (img.bit_depth > 8 ? 2 : 1);
}

// ---- model I/O and prediction -------------------------------------------

cnn::Model load_model_file(const std::string& path) { return cnn::load_model(read_file(path)); }

struct Prediction {
  size_t index = 0;
  std::vector<double> posteriors;
};

Prediction predict(const cnn::Model& m, const ImageBuffer& img) {
  cnn::Tensor<float> p = cnn::forward(m, cnn::image_to_input(img));
  cnn::softmax_rows(p);
  Prediction out;
  for (size_t i = 0; i < p.v.size(); ++i) {
    out.posteriors.push_back(p.v[i]);
    if (p.v[i] > p.v[out.index]) out.index = i;
  }
  return out;
}

json prediction_json(const Prediction& p) {
  return json{{"class", class_label(p.index)},
              {"index", p.index},
              {"posteriors", p.posteriors}};
}

std::string prediction_text(const Prediction& p) {
  std::string s = fmtf("%s (p=%.3f), posteriors [", class_label(p.index).c_str(),
                       p.posteriors[p.index]);
  for (size_t i = 0; i < p.posteriors.size(); ++i) {
    if (i) s += ", ";
    s += fmtf("%.3f", p.posteriors[i]);
  }
  s += "]";
  return s;
}

// ---- evaluation reports ---------------------------------------------------

std::string metrics_csv(const cnn::EvalReport& r) {
  std::string out = "metric,class,value\n";
  auto row = [&](const char* metric, const std::string& cls, double v) {
    out += metric;
    out += ',';
    out += cls;
    out += ',';
    out += fmtf("%.6f", v);
    out += '\n';
  };
  row("accuracy", "", r.accuracy);
  row("macro_f1", "", r.macro_f1);
  row("macro_auc", "", r.macro_auc);
  for (size_t i = 0; i < r.precision.size(); ++i) row("precision", class_label(i), r.precision[i]);
  for (size_t i = 0; i < r.recall.size(); ++i) row("recall", class_label(i), r.recall[i]);
  for (size_t i = 0; i < r.f1.size(); ++i) row("f1", class_label(i), r.f1[i]);
  for (size_t i = 0; i < r.auc.size(); ++i) row("auc", class_label(i), r.auc[i]);
  for (size_t t = 0; t < r.confusion.size(); ++t) {
    for (size_t p = 0; p < r.confusion[t].size(); ++p) {
      out += "confusion," + class_label(t) + "->" + class_label(p) + ',' +
             std::to_string(r.confusion[t][p]) + '\n';
    }
  }
  return out;
}

json eval_json(const cnn::EvalReport& r) {
  std::vector<std::string> classes;
  for (size_t i = 0; i < r.precision.size(); ++i) classes.push_back(class_label(i));
  return json{{"accuracy", r.accuracy},   {"macro_f1", r.macro_f1}, {"macro_auc", r.macro_auc},
              {"precision", r.precision}, {"recall", r.recall},     {"f1", r.f1},
              {"auc", r.auc},             {"confusion", r.confusion}, {"classes", classes}};
}

json leakage_json(const leakage::LeakageReport& r) {
  return json{{"ssim_plain_vs_cipher", r.ssim_plain_vs_cipher},
              {"ssim_plain_vs_masked", r.ssim_plain_vs_masked},
              {"phash_distance", r.phash_distance},
              {"cipher_entropy", r.cipher_entropy},
              {"histogram_chi2_pvalue", r.histogram_chi2_pvalue},
              {"ssim_ok", r.ssim_ok},
              {"phash_ok", r.phash_ok},
              {"entropy_ok", r.entropy_ok},
              {"chi2_ok", r.chi2_ok},
              {"pass", r.pass}};
}

std::string leakage_csv(const leakage::LeakageReport& r) {
  std::string out =
      "ssim_plain_vs_cipher,ssim_plain_vs_masked,phash_distance,cipher_entropy,"
      "histogram_chi2_pvalue,ssim_ok,phash_ok,entropy_ok,chi2_ok,pass\n";
  auto b = [](bool v) { return v ? "true" : "false"; };
  out += fmtf("%.6f,%.6f,%d,%.6f,%.6g,%s,%s,%s,%s,%s\n", r.ssim_plain_vs_cipher,
              r.ssim_plain_vs_masked, r.phash_distance, r.cipher_entropy,
              r.histogram_chi2_pvalue, b(r.ssim_ok), b(r.phash_ok), b(r.entropy_ok), b(r.chi2_ok),
              b(r.pass));
  return out;
}

// The ciphertext section when the file is a .semc container, the whole file
// otherwise, so the audit can run on raw cipher dumps too.
std::vector<uint8_t> cipher_payload(const std::vector<uint8_t>& bytes) {
  if (bytes.size() >= crypto::kContainerHeaderSize && bytes[0] == 'S' && bytes[1] == 'E' &&
      bytes[2] == 'M' && bytes[3] == 'C') {
    const auto info = crypto::parse_container_header(bytes);
    return std::vector<uint8_t>(bytes.begin() + static_cast<long>(info.ciphertext_offset),
                                bytes.end());
  }
  return bytes;
}

// Mask key for `mask`/`unmask`/`compare`: the env var when present, else for
// compare the deterministic experiment key so shipped models work unmodified.
MaskKey mask_key_or_experiment(const Global& g, const std::string& env_name) {
  if (const char* v = std::getenv(env_name.c_str())) {
    require(v[0] != '\0', Err::UsageError, env_name + " is set but empty");
    return mask_key_from_string(v);
  }
  log_line(g, fmtf("%s not set, using the experiment mask key for seed %llu", env_name.c_str(),
                   static_cast<unsigned long long>(g.seed)));
  return cnn::experiment_mask_key(g.seed);
}

// ---- experiment ------------------------------------------------------------

struct ExperimentFiles {
  std::vector<std::string> names;
  json summary;
};

cnn::TrainConfig arm_config(const Global& g, cnn::Domain domain, size_t train_per_class,
                            size_t test_per_class, uint32_t size, double noise, int epochs) {
  cnn::TrainConfig cfg;
  cfg.seed = g.seed;
  cfg.domain = domain;
  cfg.epochs = epochs;
  cfg.dataset.train_per_class = train_per_class;
  cfg.dataset.test_per_class = test_per_class;
  cfg.dataset.image_size = size;
  cfg.dataset.noise_sigma = noise;
  return cfg;
}

json run_leakage_cases(const Global& g) {
  // Audit-scale fixtures: 256 px keeps the ciphertext large enough for the
  // entropy and chi-square gates to be meaningful.
  const MaskKey key = cnn::experiment_mask_key(g.seed);
  json cases = json::array();
  bool all_pass = true;
  for (int c = 0; c < 3; ++c) {
    PhantomSpec spec;
    spec.class_label = static_cast<PhantomClass>(c);
    spec.size = 256;
    spec.seed = derive_seed(g.seed, kTagLeakPhantom, static_cast<uint64_t>(c));
    spec.noise_sigma = 0.03;
    const ImageBuffer plain = phantom_generate(spec);

    std::vector<uint8_t> px(plain.samples.begin(), plain.samples.end());
    SeededEntropy entropy(derive_seed(g.seed, kTagLeakEntropy, static_cast<uint64_t>(c)));
    const auto container = crypto::encrypt_container(
        px, crypto::to_bytes("semcrypt.experiment.leakage"), crypto::CipherId::Aes128Cbc, entropy);
    const std::vector<uint8_t> ct(container.begin() + crypto::kContainerHeaderSize,
                                  container.end());

    const ImageBuffer masked =
        apply_mask(plain, derive_mask_plan(key, plain.width, plain.height, 8));
    const leakage::LeakageReport rep = leakage::audit(plain, ct, masked);
    all_pass = all_pass && rep.pass;
    json entry = leakage_json(rep);
    entry["class"] = class_label(static_cast<size_t>(c));
    cases.push_back(std::move(entry));
  }
  return json{{"cases", std::move(cases)}, {"pass", all_pass}};
}

ExperimentFiles run_experiment(const Global& g, const std::string& out_dir, size_t train_per_class,
                               size_t test_per_class, uint32_t size, double noise, int epochs) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(!ec, Err::IoError, "cannot create " + out_dir + ": " + ec.message());

  ExperimentFiles files;
  std::string summary = "arm,accuracy,macro_f1,macro_auc\n";
  json arms = json::object();
  for (cnn::Domain domain :
       {cnn::Domain::Plain, cnn::Domain::Masked, cnn::Domain::CipherControl}) {
    const std::string arm = cnn::domain_name(domain);
    log_line(g, "training " + arm + " arm");
    const cnn::TrainConfig cfg =
        arm_config(g, domain, train_per_class, test_per_class, size, noise, epochs);
    const cnn::Model model = cnn::train(cfg);
    const cnn::EvalReport rep = cnn::evaluate(model, cnn::build_datasets(cfg).second);

    const std::string model_name = "model_" + arm + ".tcnn";
    const std::string metrics_name = "metrics_" + arm + ".csv";
    write_file(out_dir + "/" + model_name, cnn::save_model(model));
    write_text(out_dir + "/" + metrics_name, metrics_csv(rep));
    files.names.push_back(model_name);
    files.names.push_back(metrics_name);

    summary += arm + fmtf(",%.6f,%.6f,%.6f\n", rep.accuracy, rep.macro_f1, rep.macro_auc);
    arms[arm] = {{"accuracy", rep.accuracy}, {"macro_f1", rep.macro_f1},
                 {"macro_auc", rep.macro_auc}};
  }
  write_text(out_dir + "/summary.csv", summary);
  files.names.push_back("summary.csv");

  log_line(g, "running leakage audit");
  const json leak = run_leakage_cases(g);
  write_text(out_dir + "/leakage.json", leak.dump(2) + "\n");
  files.names.push_back("leakage.json");

  files.summary = json{{"out_dir", out_dir},
                       {"seed", g.seed},
                       {"arms", std::move(arms)},
                       {"leakage_pass", leak.at("pass").get<bool>()},
                       {"files", files.names}};
  return files;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  Global g;

  CLI::App app{"privacy-preserving medical imaging pipeline"};
  app.name("semcrypt");
  app.require_subcommand(1);
  app.add_flag("--json", g.json, "emit one JSON object on stdout");
  app.add_flag("--quiet", g.quiet, "suppress log lines on stderr");
  app.add_option("--seed", g.seed, "seed for every seeded stage")->capture_default_str();

  // ingest ------------------------------------------------------------------
  struct {
    std::string in, out;
  } ingest_o;
  auto* c_ingest = app.add_subcommand("ingest", "parse a DICOM file and extract its raster");
  c_ingest->fallthrough();
  c_ingest->add_option("file", ingest_o.in, "DICOM input")->required();
  c_ingest->add_option("--out", ingest_o.out, "write the raster as PGM");
  c_ingest->callback([&] {
    const dicom::DicomDataset ds = dicom::parse_dicom(read_file(ingest_o.in));
    const ImageBuffer img = dicom::extract_image(ds);
    const auto win = dicom::extract_window(ds);
    const char* ts = ds.transfer_syntax == dicom::TransferSyntax::ExplicitVRLittleEndian
                         ? "explicit-vr-le"
                         : "implicit-vr-le";
    std::string patient;
    if (const auto* el = ds.find(0x0010, 0x0020)) patient = dicom::element_text(*el);
    if (!ingest_o.out.empty()) pgm_write_file(img, ingest_o.out);

    json j{{"width", img.width},   {"height", img.height},       {"bit_depth", img.bit_depth},
           {"transfer_syntax", ts}, {"elements", ds.elements.size()}};
    if (!patient.empty()) j["patient_id"] = patient;
    if (win) j["window"] = {{"center", win->center}, {"width", win->width}};
    if (!ingest_o.out.empty()) j["out"] = ingest_o.out;

    std::string text = fmtf("%ux%u %d-bit, %s, %zu elements", img.width, img.height,
                            img.bit_depth, ts, ds.elements.size());
    if (!patient.empty()) text += ", patient \"" + patient + "\"";
    if (!ingest_o.out.empty()) text += "\nwrote " + ingest_o.out;
    emit(g, j, text);
  });

  // phantom -----------------------------------------------------------------
  struct {
    std::string klass, out;
    uint32_t size = 64;
    double noise = 0.0;
  } phantom_o;
  auto* c_phantom = app.add_subcommand("phantom", "generate a synthetic test image");
  c_phantom->fallthrough();
  c_phantom->add_option("--class", phantom_o.klass, "nodule | linear-opacity | clear-field")
      ->required();
  c_phantom->add_option("--size", phantom_o.size, "square size in pixels")->capture_default_str();
  c_phantom->add_option("--noise", phantom_o.noise, "gaussian noise sigma, fraction of max")
      ->capture_default_str();
  c_phantom->add_option("--out", phantom_o.out, "output PGM")->required();
  c_phantom->callback([&] {
    PhantomSpec spec;
    spec.class_label = phantom_class_from_name(phantom_o.klass);
    spec.size = phantom_o.size;
    spec.seed = g.seed;
    spec.noise_sigma = phantom_o.noise;
    const ImageBuffer img = phantom_generate(spec);
    pgm_write_file(img, phantom_o.out);
    emit(g,
         json{{"class", phantom_class_name(spec.class_label)},
              {"size", spec.size},
              {"seed", spec.seed},
              {"out", phantom_o.out}},
         fmtf("wrote %s %ux%u (seed %llu) to %s", phantom_class_name(spec.class_label), spec.size,
              spec.size, static_cast<unsigned long long>(spec.seed), phantom_o.out.c_str()));
  });

  // compress ----------------------------------------------------------------
  struct {
    std::string in, out, mode = "lossless";
    int levels = 0;
    float qstep = 12.0f;
  } comp_o;
  auto* c_comp = app.add_subcommand("compress", "wavelet-compress a PGM image");
  c_comp->fallthrough();
  c_comp->add_option("in", comp_o.in, "input PGM")->required();
  c_comp->add_option("out", comp_o.out, "output codestream")->required();
  c_comp->add_option("--mode", comp_o.mode, "lossless | lossy")->capture_default_str();
  c_comp->add_option("--levels", comp_o.levels, "decomposition levels (0 = auto)")
      ->capture_default_str();
  c_comp->add_option("--qstep", comp_o.qstep, "base quantizer step (lossy only)")
      ->capture_default_str();
  c_comp->callback([&] {
    const ImageBuffer img = pgm_read_file(comp_o.in);
    codec::EncodeParams params;
    params.mode = mode_from_name(comp_o.mode);
    params.levels = comp_o.levels;
    params.base_qstep = comp_o.qstep;
    const std::vector<uint8_t> code = codec::encode(img, params);
    write_file(comp_o.out, code);
    const auto info = codec::parse_codestream_header(code);
    const size_t raw = raw_pixel_bytes(img);
    const double ratio = static_cast<double>(raw) / static_cast<double>(code.size());
    emit(g,
         json{{"raw", raw},
              {"compressed", code.size()},
              {"ratio", ratio},
              {"mode", mode_label(info.mode)},
              {"levels", info.levels},
              {"out", comp_o.out}},
         fmtf("%zu -> %zu bytes (%.2f:1, %s, %d levels)", raw, code.size(), ratio,
              mode_label(info.mode), info.levels));
  });

  // decompress ----------------------------------------------------------------
  struct {
    std::string in, out;
  } decomp_o;
  auto* c_decomp = app.add_subcommand("decompress", "decode a codestream back to PGM");
  c_decomp->fallthrough();
  c_decomp->add_option("in", decomp_o.in, "input codestream")->required();
  c_decomp->add_option("out", decomp_o.out, "output PGM")->required();
  c_decomp->callback([&] {
    const std::vector<uint8_t> code = read_file(decomp_o.in);
    const auto info = codec::parse_codestream_header(code);
    const ImageBuffer img = codec::decode(code);
    pgm_write_file(img, decomp_o.out);
    emit(g,
         json{{"width", img.width},
              {"height", img.height},
              {"bit_depth", img.bit_depth},
              {"mode", mode_label(info.mode)},
              {"levels", info.levels},
              {"out", decomp_o.out}},
         fmtf("wrote %ux%u %d-bit to %s (%s, %d levels)", img.width, img.height, img.bit_depth,
              decomp_o.out.c_str(), mode_label(info.mode), info.levels));
  });

  // encrypt / decrypt ---------------------------------------------------------
  struct {
    std::string in, out, pass_env = "SEMC_PASS", cipher = "aes128";
  } enc_o;
  auto* c_enc = app.add_subcommand("encrypt", "seal a file in an encrypted container");
  c_enc->fallthrough();
  c_enc->add_option("in", enc_o.in, "payload file")->required();
  c_enc->add_option("out", enc_o.out, "output container")->required();
  c_enc->add_option("--pass-env", enc_o.pass_env, "environment variable holding the passphrase")
      ->capture_default_str();
  c_enc->add_option("--cipher", enc_o.cipher, "aes128 | aes256")->capture_default_str();
  c_enc->callback([&] {
    const std::vector<uint8_t> payload = read_file(enc_o.in);
    const std::string pass = secret_from(enc_o.pass_env, "passphrase");
    OsEntropy entropy;
    const std::vector<uint8_t> container = crypto::encrypt_container(
        payload, crypto::to_bytes(pass), cipher_from_name(enc_o.cipher), entropy);
    write_file(enc_o.out, container);
    emit(g,
         json{{"plaintext", payload.size()},
              {"container", container.size()},
              {"cipher", enc_o.cipher},
              {"out", enc_o.out}},
         fmtf("%zu -> %zu bytes (%s, +%zu container overhead)", payload.size(), container.size(),
              enc_o.cipher.c_str(), container.size() - payload.size()));
  });

  struct {
    std::string in, out, pass_env = "SEMC_PASS";
  } dec_o;
  auto* c_dec = app.add_subcommand("decrypt", "open an encrypted container");
  c_dec->fallthrough();
  c_dec->add_option("in", dec_o.in, "input container")->required();
  c_dec->add_option("out", dec_o.out, "output payload file")->required();
  c_dec->add_option("--pass-env", dec_o.pass_env, "environment variable holding the passphrase")
      ->capture_default_str();
  c_dec->callback([&] {
    const std::vector<uint8_t> container = read_file(dec_o.in);
    const std::string pass = secret_from(dec_o.pass_env, "passphrase");
    const std::vector<uint8_t> payload =
        crypto::decrypt_container(container, crypto::to_bytes(pass));
    write_file(dec_o.out, payload);
    emit(g, json{{"container", container.size()}, {"plaintext", payload.size()},
                 {"out", dec_o.out}},
         fmtf("%zu -> %zu bytes", container.size(), payload.size()));
  });

  // mask / unmask -------------------------------------------------------------
  struct MaskOpts {
    std::string in, out, key_env = "SEMC_MASK_KEY";
    uint32_t block = 8;
  };
  MaskOpts mask_o, unmask_o;
  auto add_mask_cmd = [&](const char* name, const char* desc, MaskOpts& o, bool invert) {
    auto* c = app.add_subcommand(name, desc);
    c->fallthrough();
    c->add_option("in", o.in, "input PGM")->required();
    c->add_option("out", o.out, "output PGM")->required();
    c->add_option("--key-env", o.key_env, "environment variable holding the mask key")
        ->capture_default_str();
    c->add_option("--block", o.block, "block size in pixels")->capture_default_str();
    c->callback([&g, &o, invert] {
      const ImageBuffer img = pgm_read_file(o.in);
      const MaskKey key = mask_key_from_string(secret_from(o.key_env, "mask key"));
      const MaskPlan plan = derive_mask_plan(key, img.width, img.height, o.block);
      const ImageBuffer out = invert ? invert_mask(img, plan) : apply_mask(img, plan);
      pgm_write_file(out, o.out);
      emit(g,
           json{{"width", img.width},
                {"height", img.height},
                {"block", plan.block_size},
                {"blocks", plan.block_count()},
                {"out", o.out}},
           fmtf("%s %ux%u with %ux%u blocks (%zu blocks) -> %s", invert ? "unmasked" : "masked",
                img.width, img.height, plan.block_size, plan.block_size, plan.block_count(),
                o.out.c_str()));
    });
  };
  add_mask_cmd("mask", "apply the keyed block mask to an image", mask_o, false);
  add_mask_cmd("unmask", "invert the keyed block mask", unmask_o, true);

  // train ----------------------------------------------------------------------
  struct {
    std::string domain = "plain", out;
    int epochs = cnn::TrainConfig{}.epochs;
    size_t batch = cnn::TrainConfig{}.batch_size;
    float lr = cnn::TrainConfig{}.learning_rate;
    size_t train_per_class = cnn::DatasetSpec{}.train_per_class;
    size_t test_per_class = cnn::DatasetSpec{}.test_per_class;
    uint32_t size = cnn::DatasetSpec{}.image_size;
    double noise = cnn::DatasetSpec{}.noise_sigma;
  } train_o;
  auto* c_train = app.add_subcommand("train", "train a classifier on the phantom corpus");
  c_train->fallthrough();
  c_train->add_option("--domain", train_o.domain, "plain | masked | cipher")
      ->capture_default_str();
  c_train->add_option("--out", train_o.out, "output model file")->required();
  c_train->add_option("--epochs", train_o.epochs)->capture_default_str();
  c_train->add_option("--batch", train_o.batch)->capture_default_str();
  c_train->add_option("--lr", train_o.lr)->capture_default_str();
  c_train->add_option("--train-per-class", train_o.train_per_class)->capture_default_str();
  c_train->add_option("--test-per-class", train_o.test_per_class)->capture_default_str();
  c_train->add_option("--size", train_o.size, "corpus image size")->capture_default_str();
  c_train->add_option("--noise", train_o.noise, "corpus noise sigma")->capture_default_str();
  c_train->callback([&] {
    cnn::TrainConfig cfg = arm_config(g, cnn::domain_from_name(train_o.domain),
                                      train_o.train_per_class, train_o.test_per_class,
                                      train_o.size, train_o.noise, train_o.epochs);
    cfg.batch_size = train_o.batch;
    cfg.learning_rate = train_o.lr;
    log_line(g, "training " + train_o.domain + " arm (" +
                    std::to_string(3 * cfg.dataset.train_per_class) + " images, " +
                    std::to_string(cfg.epochs) + " epochs)");
    const cnn::Model model = cnn::train(cfg);
    write_file(train_o.out, cnn::save_model(model));
    const cnn::EvalReport rep = cnn::evaluate(model, cnn::build_datasets(cfg).second);
    json j = eval_json(rep);
    j["domain"] = train_o.domain;
    j["out"] = train_o.out;
    emit(g, j,
         fmtf("%s: accuracy %.4f, macro_f1 %.4f, macro_auc %.4f -> %s", train_o.domain.c_str(),
              rep.accuracy, rep.macro_f1, rep.macro_auc, train_o.out.c_str()));
  });

  // infer -----------------------------------------------------------------------
  struct {
    std::string model, image;
  } infer_o;
  auto* c_infer = app.add_subcommand("infer", "classify one image with a trained model");
  c_infer->fallthrough();
  c_infer->add_option("--model", infer_o.model, "model file")->required();
  c_infer->add_option("image", infer_o.image, "input PGM")->required();
  c_infer->callback([&] {
    const cnn::Model model = load_model_file(infer_o.model);
    const Prediction p = predict(model, pgm_read_file(infer_o.image));
    emit(g, prediction_json(p), prediction_text(p));
  });

  // evaluate ----------------------------------------------------------------------
  struct {
    std::string model, domain = "plain", report = "csv", out;
    size_t test_per_class = cnn::DatasetSpec{}.test_per_class;
    uint32_t size = cnn::DatasetSpec{}.image_size;
    double noise = cnn::DatasetSpec{}.noise_sigma;
  } eval_o;
  auto* c_eval = app.add_subcommand("evaluate", "score a model on a fresh test corpus");
  c_eval->fallthrough();
  c_eval->add_option("--model", eval_o.model, "model file")->required();
  c_eval->add_option("--domain", eval_o.domain, "plain | masked | cipher")->capture_default_str();
  c_eval->add_option("--report", eval_o.report, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  c_eval->add_option("--out", eval_o.out, "write the report to a file instead of stdout");
  c_eval->add_option("--test-per-class", eval_o.test_per_class)->capture_default_str();
  c_eval->add_option("--size", eval_o.size, "corpus image size")->capture_default_str();
  c_eval->add_option("--noise", eval_o.noise, "corpus noise sigma")->capture_default_str();
  c_eval->callback([&] {
    const cnn::Model model = load_model_file(eval_o.model);
    cnn::TrainConfig cfg = arm_config(g, cnn::domain_from_name(eval_o.domain), 1,
                                      eval_o.test_per_class, eval_o.size, eval_o.noise, 0);
    const cnn::EvalReport rep = cnn::evaluate(model, cnn::build_datasets(cfg).second);
    const bool as_json = g.json || eval_o.report == "json";
    const std::string body = as_json ? eval_json(rep).dump() + "\n" : metrics_csv(rep);
    if (!eval_o.out.empty()) {
      write_text(eval_o.out, body);
      emit(g, json{{"out", eval_o.out}, {"accuracy", rep.accuracy}},
           fmtf("wrote %s (accuracy %.4f)", eval_o.out.c_str(), rep.accuracy));
    } else {
      std::fputs(body.c_str(), stdout);
    }
  });

  // audit ---------------------------------------------------------------------------
  struct {
    std::string plain, cipher, masked, report = "json";
  } audit_o;
  auto* c_audit = app.add_subcommand("audit", "leakage metrics for one plain/cipher/masked trio");
  c_audit->fallthrough();
  c_audit->add_option("--plain", audit_o.plain, "plaintext PGM")->required();
  c_audit->add_option("--cipher", audit_o.cipher, "container or raw ciphertext dump")->required();
  c_audit->add_option("--masked", audit_o.masked, "masked PGM")->required();
  c_audit->add_option("--report", audit_o.report, "json | csv")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  c_audit->callback([&] {
    const ImageBuffer plain = pgm_read_file(audit_o.plain);
    const ImageBuffer masked = pgm_read_file(audit_o.masked);
    const std::vector<uint8_t> ct = cipher_payload(read_file(audit_o.cipher));
    const leakage::LeakageReport rep = leakage::audit(plain, ct, masked);
    if (g.json || audit_o.report == "json") {
      std::fprintf(stdout, "%s\n", leakage_json(rep).dump().c_str());
    } else {
      std::fputs(leakage_csv(rep).c_str(), stdout);
    }
    log_line(g, rep.pass ? "leakage audit: pass" : "leakage audit: FAIL");
  });

  // vault ---------------------------------------------------------------------------
  auto* c_vault = app.add_subcommand("vault", "policy-gated encrypted object store");
  c_vault->require_subcommand(1);
  c_vault->fallthrough();
  struct {
    std::string dir, principal, id, file, out;
  } vault_o;

  auto* c_vput = c_vault->add_subcommand("put", "store a file under an object id");
  c_vput->fallthrough();
  c_vput->add_option("--vault", vault_o.dir, "vault directory")->required();
  c_vput->add_option("--as", vault_o.principal, "acting principal")->required();
  c_vput->add_option("id", vault_o.id, "object id")->required();
  c_vput->add_option("file", vault_o.file, "payload file")->required();
  c_vput->callback([&] {
    vault::SystemClock clock;
    vault::Vault v(vault_o.dir, clock);
    const std::vector<uint8_t> bytes = read_file(vault_o.file);
    v.put(vault_o.id, bytes, vault_o.principal);
    emit(g, json{{"id", vault_o.id}, {"bytes", bytes.size()}, {"principal", vault_o.principal}},
         fmtf("stored %s (%zu bytes) as %s", vault_o.id.c_str(), bytes.size(),
              vault_o.principal.c_str()));
  });

  auto* c_vget = c_vault->add_subcommand("get", "retrieve an object to a file");
  c_vget->fallthrough();
  c_vget->add_option("--vault", vault_o.dir, "vault directory")->required();
  c_vget->add_option("--as", vault_o.principal, "acting principal")->required();
  c_vget->add_option("id", vault_o.id, "object id")->required();
  c_vget->add_option("--out", vault_o.out, "output file")->required();
  c_vget->callback([&] {
    vault::SystemClock clock;
    vault::Vault v(vault_o.dir, clock);
    const std::vector<uint8_t> bytes = v.get(vault_o.id, vault_o.principal);
    write_file(vault_o.out, bytes);
    emit(g, json{{"id", vault_o.id}, {"bytes", bytes.size()}, {"out", vault_o.out}},
         fmtf("retrieved %s (%zu bytes) -> %s", vault_o.id.c_str(), bytes.size(),
              vault_o.out.c_str()));
  });

  auto* c_vverify = c_vault->add_subcommand("verify-audit", "recheck the audit hash chain");
  c_vverify->fallthrough();
  c_vverify->add_option("--vault", vault_o.dir, "vault directory")->required();
  c_vverify->callback([&] {
    vault::SystemClock clock;
    vault::Vault v(vault_o.dir, clock);
    const vault::AuditVerdict verdict = v.verify_audit();
    const size_t entries = verdict.ok ? v.read_audit().size() : 0;
    require(verdict.ok, Err::CorruptPayload,
            "audit chain broken at entry " + std::to_string(verdict.first_bad));
    emit(g, json{{"ok", true}, {"entries", entries}},
         fmtf("audit chain ok (%zu entries)", entries));
  });

  // bench ----------------------------------------------------------------------------
  struct {
    size_t n = bench::CorpusSpec{}.count;
    int reps = 5;
    uint32_t size = bench::CorpusSpec{}.image_size;
    double noise = bench::CorpusSpec{}.noise_sigma;
    std::string out = "bench.csv", model;
  } bench_o;
  auto* c_bench = app.add_subcommand("bench", "time the pipeline stages over a phantom corpus");
  c_bench->fallthrough();
  c_bench->add_option("--n", bench_o.n, "corpus size")->capture_default_str();
  c_bench->add_option("--reps", bench_o.reps, "timed repetitions per stage (median kept)")
      ->capture_default_str();
  c_bench->add_option("--size", bench_o.size, "image size")->capture_default_str();
  c_bench->add_option("--noise", bench_o.noise, "phantom noise sigma")->capture_default_str();
  c_bench->add_option("--out", bench_o.out, "output CSV")->capture_default_str();
  c_bench->add_option("--model", bench_o.model, "time this model (default: fresh he-init)");
  c_bench->callback([&] {
    bench::CorpusSpec corpus;
    corpus.count = bench_o.n;
    corpus.image_size = bench_o.size;
    corpus.noise_sigma = bench_o.noise;
    corpus.seed = g.seed;
    cnn::Model model;
    if (!bench_o.model.empty()) {
      model = load_model_file(bench_o.model);
    } else {
      model = cnn::make_default_model(corpus.image_size);
      cnn::he_init(model, g.seed);
    }
    log_line(g, fmtf("benchmarking %zu images at %u px, %d reps", corpus.count, corpus.image_size,
                     bench_o.reps));
    const bench::BenchReport report = bench::run_pipeline_bench(corpus, bench_o.reps, model);
    write_text(bench_o.out, bench::to_csv(report));
    size_t errors = 0;
    for (const auto& r : report.rows) {
      if (!r.error.empty()) ++errors;
    }
    emit(g, json{{"out", bench_o.out}, {"rows", report.rows.size()}, {"errors", errors}},
         fmtf("wrote %s (%zu rows, %zu errors)", bench_o.out.c_str(), report.rows.size(),
              errors));
  });

  // protect --------------------------------------------------------------------------
  struct {
    std::string in, out, pass_env = "SEMC_PASS", mode = "lossless", cipher = "aes128";
  } protect_o;
  auto* c_protect =
      app.add_subcommand("protect", "ingest, compress, and encrypt a DICOM file in one step");
  c_protect->fallthrough();
  c_protect->add_option("in", protect_o.in, "DICOM input")->required();
  c_protect->add_option("out", protect_o.out, "output container")->required();
  c_protect->add_option("--pass-env", protect_o.pass_env,
                        "environment variable holding the passphrase")
      ->capture_default_str();
  c_protect->add_option("--mode", protect_o.mode, "lossless | lossy")->capture_default_str();
  c_protect->add_option("--cipher", protect_o.cipher, "aes128 | aes256")->capture_default_str();
  c_protect->callback([&] {
    const ImageBuffer img = dicom::extract_image(dicom::parse_dicom(read_file(protect_o.in)));
    codec::EncodeParams params;
    params.mode = mode_from_name(protect_o.mode);
    const std::vector<uint8_t> code = codec::encode(img, params);
    const std::string pass = secret_from(protect_o.pass_env, "passphrase");
    OsEntropy entropy;
    const std::vector<uint8_t> container = crypto::encrypt_container(
        code, crypto::to_bytes(pass), cipher_from_name(protect_o.cipher), entropy);
    write_file(protect_o.out, container);
    // Size summary is the command's contract, so it prints in both modes.
    const json j{{"raw", raw_pixel_bytes(img)},
                 {"compressed", code.size()},
                 {"encrypted", container.size()}};
    std::fprintf(stdout, "%s\n", j.dump().c_str());
    log_line(g, "wrote " + protect_o.out);
  });

  // compare --------------------------------------------------------------------------
  struct {
    std::string model, masked_model, key_env = "SEMC_MASK_KEY", image;
    uint32_t block = 8;
  } compare_o;
  auto* c_compare =
      app.add_subcommand("compare", "predict on the plain and masked variants of one image");
  c_compare->fallthrough();
  c_compare->add_option("--model", compare_o.model, "model for the plain variant")->required();
  c_compare->add_option("--masked-model", compare_o.masked_model,
                        "model for the masked variant (default: --model)");
  c_compare->add_option("--key-env", compare_o.key_env,
                        "mask key environment variable (default falls back to the experiment key)")
      ->capture_default_str();
  c_compare->add_option("--block", compare_o.block, "mask block size")->capture_default_str();
  c_compare->add_option("image", compare_o.image, "input PGM")->required();
  c_compare->callback([&] {
    const cnn::Model plain_model = load_model_file(compare_o.model);
    const cnn::Model masked_model = compare_o.masked_model.empty()
                                        ? plain_model
                                        : load_model_file(compare_o.masked_model);
    const ImageBuffer img = pgm_read_file(compare_o.image);
    const MaskKey key = mask_key_or_experiment(g, compare_o.key_env);
    const ImageBuffer masked =
        apply_mask(img, derive_mask_plan(key, img.width, img.height, compare_o.block));
    const Prediction p_plain = predict(plain_model, img);
    const Prediction p_masked = predict(masked_model, masked);
    const bool agree = p_plain.index == p_masked.index;
    emit(g,
         json{{"plain", prediction_json(p_plain)},
              {"masked", prediction_json(p_masked)},
              {"agree", agree}},
         "plain : " + prediction_text(p_plain) + "\nmasked: " + prediction_text(p_masked) +
             "\nagreement: " + (agree ? "yes" : "no"));
  });

  // experiment -----------------------------------------------------------------------
  struct {
    std::string out_dir = "experiment-out";
    size_t train_per_class = cnn::DatasetSpec{}.train_per_class;
    size_t test_per_class = cnn::DatasetSpec{}.test_per_class;
    uint32_t size = cnn::DatasetSpec{}.image_size;
    double noise = cnn::DatasetSpec{}.noise_sigma;
    int epochs = cnn::TrainConfig{}.epochs;
  } exp_o;
  auto* c_exp = app.add_subcommand(
      "experiment", "train the plain/masked/cipher arms and write the full report set");
  c_exp->fallthrough();
  c_exp->add_option("--out-dir", exp_o.out_dir, "output directory")->capture_default_str();
  c_exp->add_option("--train-per-class", exp_o.train_per_class)->capture_default_str();
  c_exp->add_option("--test-per-class", exp_o.test_per_class)->capture_default_str();
  c_exp->add_option("--size", exp_o.size, "corpus image size")->capture_default_str();
  c_exp->add_option("--noise", exp_o.noise, "corpus noise sigma")->capture_default_str();
  c_exp->add_option("--epochs", exp_o.epochs)->capture_default_str();
  c_exp->callback([&] {
    const ExperimentFiles files =
        run_experiment(g, exp_o.out_dir, exp_o.train_per_class, exp_o.test_per_class, exp_o.size,
                       exp_o.noise, exp_o.epochs);
    std::string text = "arm     accuracy  macro_f1  macro_auc\n";
    for (const char* arm : {"plain", "masked", "cipher"}) {
      const json& a = files.summary.at("arms").at(arm);
      text += fmtf("%-7s %.4f    %.4f    %.4f\n", arm, a.at("accuracy").get<double>(),
                   a.at("macro_f1").get<double>(), a.at("macro_auc").get<double>());
    }
    text += fmtf("leakage audit: %s\n",
                 files.summary.at("leakage_pass").get<bool>() ? "pass" : "FAIL");
    text += fmtf("wrote %zu files to %s", files.names.size(), exp_o.out_dir.c_str());
    emit(g, files.summary, text);
  });

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const Error& e) {
    if (g.json) {
      const json j{{"error", {{"code", e.exit_code()}, {"name", error_name(e.code())},
                              {"message", e.what()}}}};
      std::fprintf(stdout, "%s\n", j.dump().c_str());
    }
    if (!g.quiet) std::fprintf(stderr, "semcrypt: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    if (g.json) {
      const json j{{"error", {{"code", 5}, {"name", "Internal"}, {"message", e.what()}}}};
      std::fprintf(stdout, "%s\n", j.dump().c_str());
    }
    if (!g.quiet) std::fprintf(stderr, "semcrypt: internal error: %s\n", e.what());
    return 5;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace semcrypt::cli
