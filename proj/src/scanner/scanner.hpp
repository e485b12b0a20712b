#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/discriminator.hpp"
#include "core/error.hpp"
#include "sealer/sealer.hpp"

namespace ekey::scan {

enum class SourceKind : std::uint8_t { TextList = 0, FileTree = 1, ImageDir = 2 };

const char* source_kind_name(SourceKind kind) noexcept;
SourceKind parse_source_kind(std::string_view text);

// TextList: root is a file with one candidate per line, or `entries` is used
// directly when non-empty. FileTree and ImageDir: every regular file below
// root. Symlinks are never followed. The filter is an fnmatch(3) pattern
// applied to the text candidate or to the root-relative path.
struct CandidateSource {
  SourceKind kind = SourceKind::FileTree;
  std::filesystem::path root;
  std::vector<std::string> entries;
  std::string filter = "*";
  std::size_t limit = 100000;
};

struct Candidate {
  std::string source_id;
  std::filesystem::path path;  // empty for text candidates
};

// Sorted by source_id, filtered, truncated to limit. Error{Io} when the root
// cannot be read; Error{InvalidArgument} when limit is 0.
std::vector<Candidate> enumerate(const CandidateSource& source);

struct ScanMatch {
  std::string source_id;
  std::string key_hex;
};

struct ScanReport {
  std::size_t attempted = 0;   // candidates consumed
  std::size_t derived = 0;     // successful derivations
  std::size_t key_checks = 0;  // always equal to derived
  std::optional<ScanMatch> matched;
  std::size_t payload_bytes = 0;
  std::chrono::duration<double> elapsed{};
  std::map<ErrorCode, std::size_t> errors;
  bool aborted = false;
  std::string abort_reason;
};

std::string format_scan_report(const ScanReport& report);

// Receives the payload exactly once, after unseal has fully succeeded.
using PayloadSink = std::function<void(std::span<const std::uint8_t>)>;

// Writes to a sibling temporary file and renames it into place, so a crash
// never leaves a partial payload at path.
PayloadSink file_sink(std::filesystem::path path);

// Walks the candidates in order. For each: derive, key_check; on the first
// acceptance unseal into sink and stop. Candidates whose derivation or unseal
// fails are counted in errors and skipped. An unreadable source aborts with
// the report so far. Error{DiscriminatorMismatch} before any work if the
// container was sealed under a different discriminator or key width.
ScanReport scan(const seal::SealedContainer& container, const CandidateSource& source,
                const Discriminator& discriminator, const PayloadSink& sink);

}  // namespace ekey::scan
