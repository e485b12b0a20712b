#include "ekey/ekey.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "bdnn/model_io.hpp"
#include "bdnn/network.hpp"
#include "bdnn/synthetic.hpp"
#include "bdnn/trainer.hpp"
#include "core/digest.hpp"
#include "core/error.hpp"
#include "core/image_io.hpp"
#include "corpus/corpus.hpp"
#include "evaluator/evaluator.hpp"
#include "exact/exact_discriminators.hpp"
#include "phash/phash.hpp"
#include "scanner/scanner.hpp"
#include "sealer/cipher.hpp"
#include "sealer/sealer.hpp"

struct ek_key {
  ekey::KeyMaterial key;
};
struct ek_model {
  ekey::bdnn::NetworkModel model;
};
struct ek_discriminator {
  std::unique_ptr<ekey::Discriminator> impl;
};
struct ek_thresholds {
  ekey::eval::EvaThresholds t;
};
struct ek_corpus {
  ekey::corpus::Corpus corpus;
};
struct ek_report {
  ekey::eval::EvaReport report;
  std::size_t sample_failures = 0;
};
struct ek_scan_report {
  ekey::scan::ScanReport report;
};

namespace {

using ekey::Error;
using ekey::ErrorCode;

thread_local std::string t_last_error;
thread_local std::int64_t t_last_offset = -1;

ek_status fail(ErrorCode code, std::string message, std::int64_t offset = -1) {
  t_last_error = std::move(message);
  t_last_offset = offset;
  return static_cast<ek_status>(code);
}

template <typename F>
ek_status guarded(F&& body) noexcept {
  try {
    body();
    return EK_OK;
  } catch (const Error& e) {
    return fail(e.code(), e.what(),
                e.offset() ? static_cast<std::int64_t>(*e.offset()) : std::int64_t{-1});
  } catch (const std::bad_alloc&) {
    return fail(ErrorCode::Internal, "out of memory");
  } catch (const std::exception& e) {
    return fail(ErrorCode::Internal, e.what());
  } catch (...) {
    return fail(ErrorCode::Internal, "unknown exception");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void give_buffer(const std::vector<std::uint8_t>& bytes, uint8_t** out, size_t* out_len) {
  auto* buf = static_cast<uint8_t*>(std::malloc(bytes.empty() ? 1 : bytes.size()));
  if (!buf) throw std::bad_alloc();
  if (!bytes.empty()) std::memcpy(buf, bytes.data(), bytes.size());
  *out = buf;
  *out_len = bytes.size();
}

std::span<const std::uint8_t> view(const uint8_t* data, size_t len) {
  require(data || len == 0, "null buffer with nonzero length");
  return {data, len};
}

ek_key* wrap(ekey::KeyMaterial k) { return new ek_key{std::move(k)}; }

ekey::KeyMaterial derive(const ek_discriminator* d, const ekey::AttributeSample& s) {
  require(d, "null discriminator");
  return d->impl->derive(s);
}

ekey::AttributeSample sample_from_bytes(const ek_discriminator* d, std::vector<std::uint8_t> bytes,
                                        std::string source_id) {
  if (d->impl->input_kind() == ekey::SampleKind::Image) {
    ekey::AttributeSample s;
    s.kind = ekey::SampleKind::Image;
    s.source_id = std::move(source_id);
    s.image = ekey::decode_image(bytes);
    s.bytes = std::move(bytes);
    return s;
  }
  if (d->impl->input_kind() == ekey::SampleKind::Text) {
    return ekey::AttributeSample::text(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
        ekey::Label::Unlabeled, std::move(source_id));
  }
  return ekey::AttributeSample::file(std::move(bytes), ekey::Label::Unlabeled, std::move(source_id));
}

}  // namespace

extern "C" {

const char* ek_version(void) { return EKEY_VERSION_STRING; }

const char* ek_status_name(ek_status status) {
  return ekey::error_code_name(static_cast<ErrorCode>(status));
}

const char* ek_last_error(void) { return t_last_error.c_str(); }
int64_t ek_last_error_offset(void) { return t_last_offset; }

void ek_buffer_free(uint8_t* buffer) { std::free(buffer); }
void ek_string_free(char* str) { std::free(str); }

// ---- keys

ek_status ek_key_from_hex(const char* hex, int discriminator, ek_key** out) {
  return guarded([&] {
    require(hex && out, "null argument");
    if (discriminator < 0 || discriminator > 255 ||
        !ekey::is_valid_discriminator(static_cast<std::uint8_t>(discriminator))) {
      throw Error(ErrorCode::InvalidArgument, "discriminator id must be 1..4");
    }
    *out = wrap(ekey::from_hex(hex, static_cast<ekey::DiscriminatorId>(discriminator)));
  });
}

ek_status ek_key_to_hex(const ek_key* key, char** out) {
  return guarded([&] {
    require(key && out, "null argument");
    *out = dup_string(ekey::to_hex(key->key));
  });
}

size_t ek_key_width(const ek_key* key) { return key ? key->key.width() : 0; }
int ek_key_discriminator(const ek_key* key) {
  return key ? static_cast<int>(key->key.discriminator()) : 0;
}
int ek_key_equal(const ek_key* a, const ek_key* b) { return a && b && a->key == b->key ? 1 : 0; }
void ek_key_free(ek_key* key) { delete key; }

// ---- discriminators

ek_status ek_discriminator_vt(const char* guid, ek_discriminator** out) {
  return guarded([&] {
    require(guid && out, "null argument");
    *out = new ek_discriminator{std::make_unique<ekey::exact::ValueTransferDiscriminator>(guid)};
  });
}

ek_status ek_discriminator_hash(const char* algo, ek_discriminator** out) {
  return guarded([&] {
    require(algo && out, "null argument");
    *out = new ek_discriminator{
        std::make_unique<ekey::exact::HashDiscriminator>(ekey::parse_hash_algo(algo))};
  });
}

ek_status ek_discriminator_phash(ek_discriminator** out) {
  return guarded([&] {
    require(out, "null argument");
    *out = new ek_discriminator{std::make_unique<ekey::phash::PerceptualHashDiscriminator>()};
  });
}

ek_status ek_discriminator_bdnn(const ek_model* model, ek_discriminator** out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = new ek_discriminator{std::make_unique<ekey::bdnn::BdnnDiscriminator>(model->model)};
  });
}

int ek_discriminator_id(const ek_discriminator* d) {
  return d ? static_cast<int>(d->impl->id()) : 0;
}
const char* ek_discriminator_name(const ek_discriminator* d) {
  return d ? ekey::discriminator_name(d->impl->id()) : "";
}
size_t ek_discriminator_key_width(const ek_discriminator* d) { return d ? d->impl->key_width() : 0; }
void ek_discriminator_free(ek_discriminator* d) { delete d; }

ek_status ek_derive_text(const ek_discriminator* d, const char* text, ek_key** out) {
  return guarded([&] {
    require(d && text && out, "null argument");
    const std::string_view sv(text);
    *out = wrap(derive(d, sample_from_bytes(d, {sv.begin(), sv.end()}, std::string(sv))));
  });
}

ek_status ek_derive_bytes(const ek_discriminator* d, const uint8_t* data, size_t len, ek_key** out) {
  return guarded([&] {
    require(d && out, "null argument");
    const auto v = view(data, len);
    *out = wrap(derive(d, sample_from_bytes(d, {v.begin(), v.end()}, {})));
  });
}

ek_status ek_derive_file(const ek_discriminator* d, const char* path, ek_key** out) {
  return guarded([&] {
    require(d && path && out, "null argument");
    auto bytes = ekey::read_file(path);
    try {
      *out = wrap(derive(d, sample_from_bytes(d, std::move(bytes), path)));
    } catch (const Error& e) {
      throw Error(e.code(), std::string(path) + ": " + e.what(), e.offset());
    }
  });
}

ek_status ek_derive_pixels(const ek_discriminator* d, uint32_t width, uint32_t height,
                           uint32_t channels, const uint8_t* pixels, ek_key** out) {
  return guarded([&] {
    require(d && out, "null argument");
    const auto px = view(pixels, std::size_t{width} * height * channels);
    ekey::Bitmap image(width, height, channels, std::vector<std::uint8_t>(px.begin(), px.end()));
    *out = wrap(derive(d, ekey::AttributeSample::from_image(std::move(image))));
  });
}

ek_status ek_digest_hex(const char* algo, const uint8_t* data, size_t len, char** out) {
  return guarded([&] {
    require(algo && out, "null argument");
    *out = dup_string(ekey::hex_encode(ekey::digest(ekey::parse_hash_algo(algo), view(data, len))));
  });
}

// ---- sealer

ek_status ek_seal(const uint8_t* payload, size_t payload_len, const ek_key* key,
                  const uint64_t* seed, uint8_t** out, size_t* out_len) {
  return guarded([&] {
    require(key && out && out_len, "null argument");
    *out = nullptr;
    *out_len = 0;
    const auto suite = ekey::seal::suite_for_width(key->key.width());
    ekey::seal::SealedContainer c;
    if (seed) {
      ekey::Rng rng(*seed);
      c = ekey::seal::seal(view(payload, payload_len), key->key, suite, rng);
    } else {
      c = ekey::seal::seal(view(payload, payload_len), key->key, suite);
    }
    give_buffer(c.serialize(), out, out_len);
  });
}

ek_status ek_unseal(const uint8_t* container, size_t container_len, const ek_key* key,
                    uint8_t** out, size_t* out_len) {
  return guarded([&] {
    require(key && out && out_len, "null argument");
    *out = nullptr;
    *out_len = 0;
    const auto c = ekey::seal::SealedContainer::parse(view(container, container_len));
    give_buffer(ekey::seal::unseal(c, key->key), out, out_len);
  });
}

ek_status ek_key_check(const uint8_t* container, size_t container_len, const ek_key* key,
                       int* accepted) {
  return guarded([&] {
    require(key && accepted, "null argument");
    const auto c = ekey::seal::SealedContainer::parse(view(container, container_len));
    *accepted = ekey::seal::key_check(c, key->key) ? 1 : 0;
  });
}

ek_status ek_container_info_get(const uint8_t* container, size_t container_len,
                                ek_container_info* info) {
  return guarded([&] {
    require(info, "null argument");
    const auto c = ekey::seal::SealedContainer::parse(view(container, container_len));
    ek_container_info i{};
    i.version = c.version;
    i.suite = static_cast<uint8_t>(c.suite);
    i.discriminator = static_cast<uint8_t>(c.discriminator);
    i.key_bits = ekey::seal::suite_key_bits(c.suite);
    i.ciphertext_len = c.ciphertext.size();
    std::memcpy(i.salt, c.salt.data(), 16);
    std::memcpy(i.iv, c.iv.data(), 16);
    *info = i;
  });
}

uint64_t ek_aes_block_operations(void) { return ekey::seal::aes_block_operations(); }

// ---- thresholds

ek_status ek_thresholds_profile(const char* name, ek_thresholds** out) {
  return guarded([&] {
    require(name && out, "null argument");
    *out = new ek_thresholds{ekey::eval::profile_by_name(name)};
  });
}

ek_status ek_thresholds_custom(const char* x, const char* y, const char* z, const char* w,
                               ek_thresholds** out) {
  return guarded([&] {
    require(x && y && z && w && out, "null argument");
    ekey::eval::EvaThresholds t{ekey::eval::parse_probability(x), ekey::eval::parse_probability(y),
                                ekey::eval::parse_probability(z), ekey::eval::parse_probability(w)};
    t.validate();
    *out = new ek_thresholds{std::move(t)};
  });
}

void ek_thresholds_free(ek_thresholds* t) { delete t; }

ek_status ek_judge(const char* p_in, const char* p_out, const char* p_sta, const char* p_acc,
                   const ek_thresholds* t, int* pass) {
  return guarded([&] {
    require(p_in && p_out && p_sta && p_acc && t && pass, "null argument");
    using ekey::eval::parse_probability;
    ekey::eval::EvaInputs in{parse_probability(p_in), parse_probability(p_out),
                             parse_probability(p_sta), parse_probability(p_acc),
                             ekey::KeyMaterial::zeros(128, ekey::DiscriminatorId::ValueTransfer)};
    *pass = ekey::eval::passes(in, t->t) ? 1 : 0;
  });
}

// ---- corpora and evaluation

ek_status ek_corpus_load(const char* manifest_path, ek_corpus** out) {
  return guarded([&] {
    require(manifest_path && out, "null argument");
    *out = new ek_corpus{ekey::corpus::load_corpus(manifest_path)};
  });
}

size_t ek_corpus_size(const ek_corpus* c) { return c ? c->corpus.samples.size() : 0; }

size_t ek_corpus_count(const ek_corpus* c, ek_label label) {
  return c ? c->corpus.count(static_cast<ekey::Label>(label)) : 0;
}

ek_status ek_corpus_split(const ek_corpus* c, double train_fraction, uint64_t seed,
                          ek_corpus** train, ek_corpus** test) {
  return guarded([&] {
    require(c && train && test, "null argument");
    auto [a, b] = ekey::corpus::split(c->corpus, train_fraction, seed);
    auto ta = std::make_unique<ek_corpus>(ek_corpus{std::move(a)});
    auto tb = std::make_unique<ek_corpus>(ek_corpus{std::move(b)});
    *train = ta.release();
    *test = tb.release();
  });
}

void ek_corpus_free(ek_corpus* c) { delete c; }

ek_status ek_corpus_write_synthetic(const char* dir, uint32_t positives, uint32_t negatives,
                                    uint64_t seed, char** manifest_path) {
  return guarded([&] {
    require(dir && manifest_path, "null argument");
    const auto p = ekey::bdnn::write_synthetic_corpus(dir, positives, negatives, seed);
    *manifest_path = dup_string(p.string());
  });
}

ek_status ek_evaluate(const ek_corpus* c, const ek_discriminator* d, const ek_thresholds* t,
                      unsigned jobs, const char* p_in, ek_report** out) {
  return guarded([&] {
    require(c && d && t && out, "null argument");
    ekey::corpus::EvaluateOptions opts;
    opts.jobs = jobs == 0 ? 1 : jobs;
    if (p_in) opts.p_in = ekey::eval::parse_probability(p_in);
    auto res = ekey::corpus::evaluate_corpus(c->corpus, *d->impl, t->t, opts);
    *out = new ek_report{std::move(res.report), res.failures.size()};
  });
}

int ek_report_pass(const ek_report* r) { return r && r->report.pass ? 1 : 0; }

ek_status ek_report_get(const ek_report* r, const char* name, char** out) {
  return guarded([&] {
    require(r && name && out, "null argument");
    using ekey::eval::format_probability;
    const auto& rep = r->report;
    const std::string_view n(name);
    std::string v;
    if (n == "p_in") v = format_probability(rep.p_in);
    else if (n == "p_out") v = format_probability(rep.p_out);
    else if (n == "p_sta") v = format_probability(rep.p_sta);
    else if (n == "p_acc") v = format_probability(rep.p_acc);
    else if (n == "x") v = format_probability(rep.thresholds.x);
    else if (n == "y") v = format_probability(rep.thresholds.y);
    else if (n == "z") v = format_probability(rep.thresholds.z);
    else if (n == "w") v = format_probability(rep.thresholds.w);
    else if (n == "key") v = ekey::to_hex(rep.chosen_key);
    else if (n == "positives") v = std::to_string(rep.positives);
    else if (n == "negatives") v = std::to_string(rep.negatives);
    else if (n == "failures") v = std::to_string(rep.failures);
    else if (n == "tie") v = rep.tie ? "1" : "0";
    else if (n == "verdict") v = rep.pass ? "pass" : "fail";
    else throw Error(ErrorCode::InvalidArgument, "unknown report field '" + std::string(n) + "'");
    *out = dup_string(v);
  });
}

ek_status ek_report_text(const ek_report* r, char** out) {
  return guarded([&] {
    require(r && out, "null argument");
    *out = dup_string(ekey::eval::format_report(r->report));
  });
}

ek_status ek_report_record(const ek_report* r, char** out) {
  return guarded([&] {
    require(r && out, "null argument");
    *out = dup_string(ekey::eval::format_record(r->report));
  });
}

ek_status ek_report_parse(const char* line, ek_report** out) {
  return guarded([&] {
    require(line && out, "null argument");
    auto rep = ekey::eval::parse_record(line);
    *out = new ek_report{std::move(rep), 0};
  });
}

size_t ek_report_sample_failures(const ek_report* r) { return r ? r->sample_failures : 0; }
void ek_report_free(ek_report* r) { delete r; }

// ---- B-DNN models

void ek_train_config_default(ek_train_config* cfg) {
  if (!cfg) return;
  const ekey::bdnn::TrainConfig d;
  cfg->epochs = d.epochs;
  cfg->batch_size = d.batch_size;
  cfg->learning_rate = d.learning_rate;
  cfg->momentum = d.momentum;
  cfg->dropout_rate = d.dropout_rate;
  cfg->binarization_lambda = d.binarization_lambda;
  cfg->seed = d.seed;
}

ek_status ek_train(const ek_corpus* c, const ek_train_config* cfg, ek_epoch_callback cb, void* user,
                   ek_model** out) {
  return guarded([&] {
    require(c && out, "null argument");
    ekey::bdnn::TrainConfig tc;
    if (cfg) {
      tc.epochs = cfg->epochs;
      tc.batch_size = cfg->batch_size;
      tc.learning_rate = cfg->learning_rate;
      tc.momentum = cfg->momentum;
      tc.dropout_rate = cfg->dropout_rate;
      tc.binarization_lambda = cfg->binarization_lambda;
      tc.seed = cfg->seed;
    }
    ekey::bdnn::EpochCallback on_epoch;
    if (cb) {
      on_epoch = [cb, user](const ekey::bdnn::EpochStats& s) {
        cb(s.epoch, s.mean_loss, s.train_accuracy, user);
      };
    }
    *out = new ek_model{ekey::bdnn::train(c->corpus.samples, tc, on_epoch)};
  });
}

ek_status ek_model_load(const char* path, ek_model** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new ek_model{ekey::bdnn::load_model(path)};
  });
}

ek_status ek_model_save(const ek_model* m, const char* path) {
  return guarded([&] {
    require(m && path, "null argument");
    ekey::bdnn::save_model(m->model, path);
  });
}

size_t ek_model_parameter_count(const ek_model* m) { return m ? m->model.parameter_count() : 0; }
void ek_model_free(ek_model* m) { delete m; }

// ---- scanner

ek_status ek_scan(const uint8_t* container, size_t container_len, const ek_scan_source* source,
                  const ek_discriminator* d, const char* output_path, ek_scan_report** out) {
  return guarded([&] {
    require(source && source->root && d && output_path && out, "null argument");
    require(source->kind >= EK_SOURCE_TEXT && source->kind <= EK_SOURCE_IMAGES, "bad source kind");
    const auto c = ekey::seal::SealedContainer::parse(view(container, container_len));
    ekey::scan::CandidateSource src;
    src.kind = static_cast<ekey::scan::SourceKind>(source->kind);
    src.root = source->root;
    if (source->filter) src.filter = source->filter;
    src.limit = source->limit;
    if (src.limit == 0) throw Error(ErrorCode::InvalidArgument, "candidate limit must be positive");
    auto rep = ekey::scan::scan(c, src, *d->impl, ekey::scan::file_sink(output_path));
    *out = new ek_scan_report{std::move(rep)};
  });
}

int ek_scan_matched(const ek_scan_report* r) { return r && r->report.matched ? 1 : 0; }
int ek_scan_aborted(const ek_scan_report* r) { return r && r->report.aborted ? 1 : 0; }
size_t ek_scan_attempted(const ek_scan_report* r) { return r ? r->report.attempted : 0; }

ek_status ek_scan_match_source(const ek_scan_report* r, char** out) {
  return guarded([&] {
    require(r && out, "null argument");
    *out = dup_string(r->report.matched ? r->report.matched->source_id : std::string());
  });
}

ek_status ek_scan_report_text(const ek_scan_report* r, char** out) {
  return guarded([&] {
    require(r && out, "null argument");
    *out = dup_string(ekey::scan::format_scan_report(r->report));
  });
}

void ek_scan_report_free(ek_scan_report* r) { delete r; }

}  // extern "C"
