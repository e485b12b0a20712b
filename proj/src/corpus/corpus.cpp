#include "corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "core/image_io.hpp"
#include "core/random.hpp"

namespace ekey::corpus {

std::size_t Corpus::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(), [label](const auto& s) { return s.label == label; }));
}

namespace {

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::uint64_t parse_seed(std::string_view text, std::size_t line_no) {
  std::uint64_t v = 0;
  if (text.empty()) throw Error(ErrorCode::InvalidInput, "empty #seed on line " + std::to_string(line_no));
  for (char c : text) {
    if (c < '0' || c > '9') {
      throw Error(ErrorCode::InvalidInput, "bad #seed on line " + std::to_string(line_no));
    }
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

AttributeSample load_entry(SampleKind kind, Label label, std::string_view value,
                           const std::filesystem::path& base_dir) {
  if (kind == SampleKind::Text) return AttributeSample::text(value, label, std::string(value));
  std::filesystem::path p(value);
  if (p.is_relative()) p = base_dir / p;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(p, ec)) {
    throw Error(ErrorCode::Io, "corpus entry not found: '" + p.string() + "'");
  }
  auto bytes = read_file(p);
  if (kind == SampleKind::File) {
    if (bytes.empty()) throw Error(ErrorCode::InvalidInput, "corpus file is empty: '" + p.string() + "'");
    return AttributeSample::file(std::move(bytes), label, std::string(value));
  }
  AttributeSample s;
  s.kind = SampleKind::Image;
  s.label = label;
  s.source_id = std::string(value);
  try {
    s.image = decode_image(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), p.string() + ": " + e.what(), e.offset());
  }
  s.bytes = std::move(bytes);
  return s;
}

}  // namespace

Corpus parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                      const std::filesystem::path& manifest_path) {
  Corpus corpus;
  corpus.manifest.path = manifest_path;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = trim_cr(text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.rfind("#seed ", 0) == 0) {
        corpus.manifest.seed = parse_seed(line.substr(6), line_no);
      } else if (line.rfind("#kind ", 0) == 0) {
        if (!corpus.samples.empty()) {
          throw Error(ErrorCode::InvalidInput, "#kind must precede entries (line " +
                                                   std::to_string(line_no) + ")");
        }
        corpus.manifest.kind = parse_sample_kind(line.substr(6));
      } else if (line.rfind("#ekey-manifest ", 0) == 0 && line.substr(15) != "1") {
        throw Error(ErrorCode::Unsupported, "unsupported manifest version on line " +
                                                std::to_string(line_no));
      }
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::InvalidInput,
                  "manifest line " + std::to_string(line_no) + " lacks label<TAB>value");
    }
    const Label label = parse_label(line.substr(0, tab));
    corpus.samples.push_back(load_entry(corpus.manifest.kind, label, line.substr(tab + 1), base_dir));
  }
  if (corpus.manifest.seed) {
    Rng rng(*corpus.manifest.seed);
    rng.shuffle(corpus.samples);
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest '" + manifest_path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), manifest_path.parent_path(), manifest_path);
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train fraction must lie in (0, 1)");
  }
  const std::size_t n = corpus.samples.size();
  const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  if (target == 0 || target == n) {
    throw Error(ErrorCode::InvalidArgument, "train fraction " + std::to_string(train_fraction) +
                                                " leaves one side of a " + std::to_string(n) +
                                                "-sample split empty");
  }

  // Strata indexed by Label: Positive, Negative, Unlabeled.
  std::vector<std::size_t> members[3];
  for (std::size_t i = 0; i < n; ++i) members[static_cast<int>(corpus.samples[i].label)].push_back(i);

  // Largest-remainder apportionment of `target` over the strata.
  std::size_t quota[3];
  std::size_t remainder[3];
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    quota[s] = members[s].size() * target / n;
    remainder[s] = members[s].size() * target % n;
    assigned += quota[s];
  }
  while (assigned < target) {
    int best = -1;
    for (int s = 0; s < 3; ++s)
      if (quota[s] < members[s].size() && (best < 0 || remainder[s] > remainder[best])) best = s;
    ++quota[best];
    remainder[best] = 0;
    ++assigned;
  }

  Rng rng(seed);
  std::vector<bool> in_train(n, false);
  for (int s = 0; s < 3; ++s) {
    rng.shuffle(members[s]);
    for (std::size_t k = 0; k < quota[s]; ++k) in_train[members[s][k]] = true;
  }
  Corpus train{{}, corpus.manifest};
  Corpus test{{}, corpus.manifest};
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? train : test).samples.push_back(corpus.samples[i]);
  return {std::move(train), std::move(test)};
}

CorpusEvaluation evaluate_corpus(const Corpus& corpus, const Discriminator& discriminator,
                                 const eval::EvaThresholds& thresholds,
                                 const EvaluateOptions& options) {
  if (corpus.count(Label::Positive) == 0 || corpus.count(Label::Negative) == 0) {
    throw Error(ErrorCode::InvalidInput, "corpus needs both positive and negative samples");
  }
  const std::size_t n = corpus.samples.size();
  std::vector<std::optional<KeyMaterial>> keys(n);
  std::vector<std::optional<SampleFailure>> failures(n);

  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < n; i += stride) {
      const auto& s = corpus.samples[i];
      if (s.label == Label::Unlabeled) continue;
      try {
        keys[i] = discriminator.derive(s);
      } catch (const Error& e) {
        failures[i] = SampleFailure{i, s.source_id, e.code(), e.what()};
      } catch (const std::exception& e) {
        failures[i] = SampleFailure{i, s.source_id, ErrorCode::Internal, e.what()};
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(n)));
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned j = 0; j < jobs; ++j) workers.emplace_back(work, j, jobs);
  }

  // Sequential merge in sample order.
  eval::KeyHistogram pos;
  eval::KeyHistogram neg;
  CorpusEvaluation result{eval::EvaReport{0, 0, 0, 0, KeyMaterial::zeros(128, discriminator.id()),
                                          thresholds}, {}};
  std::size_t shortest_positive_bits = SIZE_MAX;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = corpus.samples[i];
    if (s.label == Label::Unlabeled) continue;
    auto& hist = s.label == Label::Positive ? pos : neg;
    if (keys[i]) {
      hist.add(*keys[i]);
    } else {
      hist.add_failure();
      result.failures.push_back(*failures[i]);
    }
    if (s.label == Label::Positive) shortest_positive_bits = std::min(shortest_positive_bits, s.bytes.size() * 8);
  }

  const auto stability = eval::p_sta(pos);
  eval::Rational p_in;
  if (options.p_in) {
    p_in = *options.p_in;
  } else if (discriminator.id() == DiscriminatorId::ValueTransfer ||
             discriminator.id() == DiscriminatorId::TypicalHash) {
    p_in = eval::p_in_unique_pow2(static_cast<unsigned>(shortest_positive_bits));
  } else {
    p_in = eval::p_in_typed(1, eval::pow2_int(static_cast<unsigned>(discriminator.key_width())));
  }
  eval::EvaInputs inputs{p_in, eval::p_out(discriminator.key_width()), stability.p_sta,
                         eval::p_acc(neg, stability.chosen_key), stability.chosen_key};
  result.report = eval::judge(inputs, thresholds);
  result.report.positives = pos.total();
  result.report.negatives = neg.total();
  result.report.failures = result.failures.size();
  result.report.tie = stability.tie;
  return result;
}

}  // namespace ekey::corpus
