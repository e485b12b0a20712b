#include "scanner/scanner.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "core/image_io.hpp"

namespace ekey::scan {

namespace fs = std::filesystem;

const char* source_kind_name(SourceKind kind) noexcept {
  switch (kind) {
    case SourceKind::TextList: return "text";
    case SourceKind::FileTree: return "files";
    case SourceKind::ImageDir: return "images";
  }
  return "?";
}

SourceKind parse_source_kind(std::string_view text) {
  if (text == "text") return SourceKind::TextList;
  if (text == "files") return SourceKind::FileTree;
  if (text == "images") return SourceKind::ImageDir;
  throw Error(ErrorCode::InvalidArgument, "unknown source kind '" + std::string(text) +
                                              "' (expected text, files or images)");
}

namespace {

bool matches(const std::string& pattern, const std::string& subject) {
  return ::fnmatch(pattern.c_str(), subject.c_str(), 0) == 0;
}

std::vector<Candidate> text_candidates(const CandidateSource& source) {
  std::vector<std::string> lines = source.entries;
  if (lines.empty()) {
    std::ifstream in(source.root, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read candidate list '" + source.root.string() + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) lines.push_back(std::move(line));
    }
    if (in.bad()) throw Error(ErrorCode::Io, "read error on '" + source.root.string() + "'");
  }
  std::vector<Candidate> out;
  for (auto& l : lines) out.push_back({std::move(l), {}});
  return out;
}

std::vector<Candidate> tree_candidates(const CandidateSource& source) {
  std::error_code ec;
  if (!fs::is_directory(source.root, ec)) {
    throw Error(ErrorCode::Io, "candidate root is not a readable directory: '" +
                                   source.root.string() + "'");
  }
  std::vector<Candidate> out;
  fs::recursive_directory_iterator it(source.root, fs::directory_options::none, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot list '" + source.root.string() + "': " + ec.message());
  for (const fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
    if (ec) throw Error(ErrorCode::Io, "cannot list '" + source.root.string() + "': " + ec.message());
    const auto status = it->symlink_status(ec);
    if (ec || !fs::is_regular_file(status)) continue;
    out.push_back({it->path().lexically_relative(source.root).generic_string(), it->path()});
  }
  return out;
}

AttributeSample make_sample(SourceKind kind, const Candidate& c) {
  if (kind == SourceKind::TextList) return AttributeSample::text(c.source_id, Label::Unlabeled, c.source_id);
  auto bytes = read_file(c.path);
  if (kind == SourceKind::FileTree) return AttributeSample::file(std::move(bytes), Label::Unlabeled, c.source_id);
  AttributeSample s;
  s.kind = SampleKind::Image;
  s.source_id = c.source_id;
  s.image = decode_image(bytes);
  s.bytes = std::move(bytes);
  return s;
}

}  // namespace

std::vector<Candidate> enumerate(const CandidateSource& source) {
  if (source.limit == 0) throw Error(ErrorCode::InvalidArgument, "candidate limit must be positive");
  auto all = source.kind == SourceKind::TextList ? text_candidates(source) : tree_candidates(source);
  std::erase_if(all, [&](const Candidate& c) { return !matches(source.filter, c.source_id); });
  std::stable_sort(all.begin(), all.end(),
                   [](const Candidate& a, const Candidate& b) { return a.source_id < b.source_id; });
  if (all.size() > source.limit) all.resize(source.limit);
  return all;
}

PayloadSink file_sink(fs::path path) {
  return [path = std::move(path)](std::span<const std::uint8_t> payload) {
    fs::path tmp = path;
    tmp += ".part";
    write_file(tmp, payload);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
      fs::remove(tmp, ec);
      throw Error(ErrorCode::Io, "cannot move payload into '" + path.string() + "'");
    }
  };
}

ScanReport scan(const seal::SealedContainer& container, const CandidateSource& source,
                const Discriminator& discriminator, const PayloadSink& sink) {
  if (container.discriminator != discriminator.id()) {
    throw Error(ErrorCode::DiscriminatorMismatch,
                std::string("container was sealed for discriminator '") +
                    discriminator_name(container.discriminator) + "', scanner was given '" +
                    discriminator_name(discriminator.id()) + "'");
  }
  if (seal::suite_key_bits(container.suite) != discriminator.key_width()) {
    throw Error(ErrorCode::DiscriminatorMismatch, "container key width does not match discriminator");
  }

  const auto start = std::chrono::steady_clock::now();
  ScanReport report;
  auto finish = [&] {
    report.elapsed = std::chrono::steady_clock::now() - start;
    return report;
  };

  std::vector<Candidate> candidates;
  try {
    candidates = enumerate(source);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Io) throw;
    report.aborted = true;
    report.abort_reason = e.what();
    return finish();
  }

  for (const auto& c : candidates) {
    ++report.attempted;
    std::optional<KeyMaterial> key;
    try {
      key = discriminator.derive(make_sample(source.kind, c));
    } catch (const Error& e) {
      ++report.errors[e.code()];
      if (e.code() == ErrorCode::Io) {
        report.aborted = true;
        report.abort_reason = e.what();
        return finish();
      }
      continue;
    }
    ++report.derived;
    ++report.key_checks;
    if (!seal::key_check(container, *key)) continue;
    std::vector<std::uint8_t> payload;
    try {
      payload = seal::unseal(container, *key);
    } catch (const Error& e) {
      ++report.errors[e.code()];
      continue;
    }
    sink(payload);
    report.matched = ScanMatch{c.source_id, to_hex(*key)};
    report.payload_bytes = payload.size();
    break;
  }
  return finish();
}

std::string format_scan_report(const ScanReport& report) {
  std::ostringstream out;
  out << "attempted\t" << report.attempted << "\n";
  out << "derived\t" << report.derived << "\n";
  out << "key_checks\t" << report.key_checks << "\n";
  if (report.matched) {
    out << "matched\t" << report.matched->source_id << "\n";
    out << "key\t" << report.matched->key_hex << "\n";
    out << "payload_bytes\t" << report.payload_bytes << "\n";
  } else {
    out << "matched\t-\n";
  }
  for (const auto& [code, n] : report.errors) out << "errors." << error_code_name(code) << "\t" << n << "\n";
  if (report.aborted) out << "aborted\t" << report.abort_reason << "\n";
  out.precision(3);
  out << "elapsed_s\t" << std::fixed << report.elapsed.count() << "\n";
  return out.str();
}

}  // namespace ekey::scan
