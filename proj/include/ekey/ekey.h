/* C interface to the ekey environmental-keying toolkit.
 *
 * Every fallible call returns an ek_status. On failure a message (and, for
 * decode errors, a byte offset) is kept per thread and can be read with
 * ek_last_error() until the next failing call on that thread. Objects handed
 * out through an out-pointer are owned by the caller and released with the
 * matching *_free function; buffers and strings with ek_buffer_free() and
 * ek_string_free(). Out-pointers are left untouched on failure.
 */
#ifndef EKEY_EKEY_H
#define EKEY_EKEY_H

#include <stddef.h>
#include <stdint.h>

#if defined(EKEY_BUILDING_LIBRARY)
#define EK_API __attribute__((visibility("default")))
#else
#define EK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Stable numeric values; the CLI uses them as process exit codes. */
typedef enum ek_status {
  EK_OK = 0,
  EK_E_INVALID_ARGUMENT = 1,
  EK_E_IO = 2,
  EK_E_INVALID_INPUT = 3,
  EK_E_KEY_MISMATCH = 4,
  EK_E_MAC_MISMATCH = 5,
  EK_E_PAD_CORRUPT = 6,
  EK_E_FORMAT = 7,
  EK_E_CHECKSUM = 8,
  EK_E_DECODE = 9,
  EK_E_SHAPE = 10,
  EK_E_TRAINING = 11,
  EK_E_DISCRIMINATOR_MISMATCH = 12,
  EK_E_UNSUPPORTED = 13,
  EK_E_INTERNAL = 14
} ek_status;

typedef enum ek_label { EK_POSITIVE = 0, EK_NEGATIVE = 1, EK_UNLABELED = 2 } ek_label;

typedef enum ek_source_kind { EK_SOURCE_TEXT = 0, EK_SOURCE_FILES = 1, EK_SOURCE_IMAGES = 2 } ek_source_kind;

typedef struct ek_key ek_key;
typedef struct ek_model ek_model;
typedef struct ek_discriminator ek_discriminator;
typedef struct ek_thresholds ek_thresholds;
typedef struct ek_corpus ek_corpus;
typedef struct ek_report ek_report;
typedef struct ek_scan_report ek_scan_report;

EK_API const char* ek_version(void);
EK_API const char* ek_status_name(ek_status status);
EK_API const char* ek_last_error(void);
/* -1 when the last error carried no offset. */
EK_API int64_t ek_last_error_offset(void);

EK_API void ek_buffer_free(uint8_t* buffer);
EK_API void ek_string_free(char* str);

/* ---- keys ---------------------------------------------------------------- */

/* 32 or 64 hex digits; discriminator is the id (1..4) the key is tagged with,
 * which seal() records in the container. */
EK_API ek_status ek_key_from_hex(const char* hex, int discriminator, ek_key** out);
EK_API ek_status ek_key_to_hex(const ek_key* key, char** out);
EK_API size_t ek_key_width(const ek_key* key);
EK_API int ek_key_discriminator(const ek_key* key);
EK_API int ek_key_equal(const ek_key* a, const ek_key* b);
EK_API void ek_key_free(ek_key* key);

/* ---- discriminators ------------------------------------------------------ */

EK_API ek_status ek_discriminator_vt(const char* guid, ek_discriminator** out);
/* algo: "md5" or "sha256". */
EK_API ek_status ek_discriminator_hash(const char* algo, ek_discriminator** out);
EK_API ek_status ek_discriminator_phash(ek_discriminator** out);
EK_API ek_status ek_discriminator_bdnn(const ek_model* model, ek_discriminator** out);
EK_API int ek_discriminator_id(const ek_discriminator* d);
/* "vt", "hash", "bdnn" or "phash". */
EK_API const char* ek_discriminator_name(const ek_discriminator* d);
EK_API size_t ek_discriminator_key_width(const ek_discriminator* d);
EK_API void ek_discriminator_free(ek_discriminator* d);

/* Derives from a text attribute (the SSID for vt). */
EK_API ek_status ek_derive_text(const ek_discriminator* d, const char* text, ek_key** out);
/* Derives from raw file content; image discriminators decode it first. */
EK_API ek_status ek_derive_bytes(const ek_discriminator* d, const uint8_t* data, size_t len,
                                 ek_key** out);
EK_API ek_status ek_derive_file(const ek_discriminator* d, const char* path, ek_key** out);
/* Row-major 8-bit pixels; channels is 1 or 3. */
EK_API ek_status ek_derive_pixels(const ek_discriminator* d, uint32_t width, uint32_t height,
                                  uint32_t channels, const uint8_t* pixels, ek_key** out);

/* Lower-case hex digest of data; algo is md5, sha1, sha256 or sha512. */
EK_API ek_status ek_digest_hex(const char* algo, const uint8_t* data, size_t len, char** out);

/* ---- sealer -------------------------------------------------------------- */

typedef struct ek_container_info {
  uint8_t version;
  uint8_t suite;
  uint8_t discriminator;
  size_t key_bits;
  size_t ciphertext_len;
  uint8_t salt[16];
  uint8_t iv[16];
} ek_container_info;

/* Seals payload under key. Salt and IV come from the system CSPRNG, or from a
 * seeded generator when seed is non-NULL (reproducible test fixtures only). */
EK_API ek_status ek_seal(const uint8_t* payload, size_t payload_len, const ek_key* key,
                         const uint64_t* seed, uint8_t** out, size_t* out_len);
/* Returns the payload only when every check passed; nothing otherwise. */
EK_API ek_status ek_unseal(const uint8_t* container, size_t container_len, const ek_key* key,
                           uint8_t** out, size_t* out_len);
EK_API ek_status ek_key_check(const uint8_t* container, size_t container_len, const ek_key* key,
                              int* accepted);
EK_API ek_status ek_container_info_get(const uint8_t* container, size_t container_len,
                                       ek_container_info* info);
/* Process-wide count of AES blocks processed. */
EK_API uint64_t ek_aes_block_operations(void);

/* ---- thresholds and judgment --------------------------------------------- */

/* "exact" or "learned". */
EK_API ek_status ek_thresholds_profile(const char* name, ek_thresholds** out);
/* Probabilities as "1/2^128", "2^-128", "95/100", "0.005", "0" or "1". */
EK_API ek_status ek_thresholds_custom(const char* x, const char* y, const char* z, const char* w,
                                      ek_thresholds** out);
EK_API void ek_thresholds_free(ek_thresholds* t);

/* Judges analytic inputs; *pass is 1 or 0. */
EK_API ek_status ek_judge(const char* p_in, const char* p_out, const char* p_sta,
                          const char* p_acc, const ek_thresholds* t, int* pass);

/* ---- corpora and evaluation ---------------------------------------------- */

EK_API ek_status ek_corpus_load(const char* manifest_path, ek_corpus** out);
EK_API size_t ek_corpus_size(const ek_corpus* c);
EK_API size_t ek_corpus_count(const ek_corpus* c, ek_label label);
EK_API ek_status ek_corpus_split(const ek_corpus* c, double train_fraction, uint64_t seed,
                                 ek_corpus** train, ek_corpus** test);
EK_API void ek_corpus_free(ek_corpus* c);

/* Writes the synthetic two-class image corpus; *manifest_path receives the
 * manifest location. */
EK_API ek_status ek_corpus_write_synthetic(const char* dir, uint32_t positives,
                                           uint32_t negatives, uint64_t seed,
                                           char** manifest_path);

/* p_in may be NULL for the default. jobs 0 is treated as 1. */
EK_API ek_status ek_evaluate(const ek_corpus* c, const ek_discriminator* d, const ek_thresholds* t,
                             unsigned jobs, const char* p_in, ek_report** out);
EK_API int ek_report_pass(const ek_report* r);
/* name: p_in, p_out, p_sta, p_acc, x, y, z, w, key, positives, negatives,
 * failures, tie, verdict. */
EK_API ek_status ek_report_get(const ek_report* r, const char* name, char** out);
EK_API ek_status ek_report_text(const ek_report* r, char** out);
/* One tab-separated EVA1 line without a newline. */
EK_API ek_status ek_report_record(const ek_report* r, char** out);
/* Parses an EVA1 line and re-judges it; EK_E_FORMAT if the stored verdict
 * disagrees with the recomputed one. */
EK_API ek_status ek_report_parse(const char* line, ek_report** out);
EK_API size_t ek_report_sample_failures(const ek_report* r);
EK_API void ek_report_free(ek_report* r);

/* ---- B-DNN models -------------------------------------------------------- */

typedef struct ek_train_config {
  uint32_t epochs;
  uint32_t batch_size;
  double learning_rate;
  double momentum;
  double dropout_rate;
  double binarization_lambda;
  uint64_t seed;
} ek_train_config;

typedef void (*ek_epoch_callback)(uint32_t epoch, double mean_loss, double train_accuracy,
                                  void* user);

EK_API void ek_train_config_default(ek_train_config* cfg);
EK_API ek_status ek_train(const ek_corpus* c, const ek_train_config* cfg, ek_epoch_callback cb,
                          void* user, ek_model** out);
EK_API ek_status ek_model_load(const char* path, ek_model** out);
EK_API ek_status ek_model_save(const ek_model* m, const char* path);
EK_API size_t ek_model_parameter_count(const ek_model* m);
EK_API void ek_model_free(ek_model* m);

/* ---- scanner ------------------------------------------------------------- */

typedef struct ek_scan_source {
  ek_source_kind kind;
  const char* root;
  const char* filter; /* fnmatch pattern; NULL means "*" */
  size_t limit;
} ek_scan_source;

/* On a match the payload is written to output_path (atomically); otherwise
 * nothing is created there. A scan that finds nothing still returns EK_OK. */
EK_API ek_status ek_scan(const uint8_t* container, size_t container_len,
                         const ek_scan_source* source, const ek_discriminator* d,
                         const char* output_path, ek_scan_report** out);
EK_API int ek_scan_matched(const ek_scan_report* r);
EK_API int ek_scan_aborted(const ek_scan_report* r);
EK_API size_t ek_scan_attempted(const ek_scan_report* r);
/* Empty string when nothing matched. */
EK_API ek_status ek_scan_match_source(const ek_scan_report* r, char** out);
EK_API ek_status ek_scan_report_text(const ek_scan_report* r, char** out);
EK_API void ek_scan_report_free(ek_scan_report* r);

#ifdef __cplusplus
}
#endif

#endif
