#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/attribute.hpp"
#include "core/discriminator.hpp"
#include "core/error.hpp"
#include "evaluator/evaluator.hpp"

namespace ekey::corpus {

// Where the samples came from. Labels come from the manifest lines only.
struct ManifestInfo {
  std::filesystem::path path;
  std::optional<std::uint64_t> seed;
  SampleKind kind = SampleKind::Text;
  std::string label_rule = "manifest label column";
};

struct Corpus {
  std::vector<AttributeSample> samples;
  ManifestInfo manifest;

  std::size_t count(Label label) const;
};

// Plain-text manifest, one entry per line:
//
//   #ekey-manifest 1          optional format line
//   #seed 42                  optional; samples are shuffled with this seed
//   #kind text|file|image     default text
//   positive<TAB>value
//   negative<TAB>value
//
// For text manifests value is the literal UTF-8 attribute (the rest of the
// line). For file and image manifests it is a path, relative paths resolving
// against the manifest's directory. Other '#' lines and blank lines are
// ignored. Any unreadable file or undecodable image fails the whole load.
Corpus load_corpus(const std::filesystem::path& manifest_path);
Corpus parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                      const std::filesystem::path& manifest_path = {});

// Label-stratified, seed-deterministic, disjoint. The train side gets
// round(n * fraction) samples, apportioned across labels by largest
// remainder. Error{InvalidArgument} if either side would be empty.
std::pair<Corpus, Corpus> split(const Corpus& corpus, double train_fraction, std::uint64_t seed);

struct SampleFailure {
  std::size_t index = 0;
  std::string source_id;
  ErrorCode code = ErrorCode::Internal;
  std::string message;
};

struct EvaluateOptions {
  // Worker threads for key derivation; results do not depend on it.
  unsigned jobs = 1;
  // Declared P_in. When absent: 2^-(bit length of the shortest positive) for
  // the exact-match discriminators, 2^-(key width) for the typed ones.
  std::optional<eval::Rational> p_in;
};

struct CorpusEvaluation {
  eval::EvaReport report;
  std::vector<SampleFailure> failures;
};

// Derives a key for every labeled sample, fills positive and negative
// histograms and judges them. A failing derivation is recorded and counted as
// a sentinel non-key; it never aborts the run.
CorpusEvaluation evaluate_corpus(const Corpus& corpus, const Discriminator& discriminator,
                                 const eval::EvaThresholds& thresholds,
                                 const EvaluateOptions& options = {});

}  // namespace ekey::corpus
