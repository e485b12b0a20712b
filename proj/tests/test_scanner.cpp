#include <doctest.h>

#include <filesystem>

#include "core/digest.hpp"
#include "core/image_io.hpp"
#include "core/random.hpp"
#include "exact/exact_discriminators.hpp"
#include "phash/phash.hpp"
#include "scanner/scanner.hpp"
#include "test_util.hpp"

using namespace ekey;
using namespace ekey::scan;
using ekey::test::code_of;
using ekey::test::read_text;
using ekey::test::TempDir;
using ekey::test::write_text;
namespace fs = std::filesystem;

namespace {

struct Capture {
  std::vector<std::uint8_t> bytes;
  int calls = 0;
  PayloadSink sink() {
    return [this](std::span<const std::uint8_t> p) {
      bytes.assign(p.begin(), p.end());
      ++calls;
    };
  }
};

void decoy_tree(const fs::path& root, int n) {
  for (int i = 0; i < n; ++i) write_text(root / ("d" + std::to_string(i % 10)) / ("decoy" + std::to_string(i) + ".txt"), "decoy " + std::to_string(i));
}

seal::SealedContainer seal_for(const KeyMaterial& key, std::string_view payload, std::uint64_t seed = 1) {
  Rng rng(seed);
  return seal::seal(as_bytes(payload), key, seal::suite_for_width(key.width()), rng);
}

}  // namespace

TEST_CASE("source kind names") {
  CHECK(parse_source_kind("text") == SourceKind::TextList);
  CHECK(parse_source_kind("files") == SourceKind::FileTree);
  CHECK(parse_source_kind("images") == SourceKind::ImageDir);
  CHECK(std::string(source_kind_name(SourceKind::ImageDir)) == "images");
  CHECK(code_of([] { parse_source_kind("registry"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("enumeration is sorted, filtered, limited and stays under root") {
  TempDir dir("enum");
  write_text(dir / "b.txt", "b");
  write_text(dir / "a.txt", "a");
  write_text(dir / "sub/c.bin", "c");
  write_text(dir / "sub/deeper/d.txt", "d");
  fs::create_directories(dir / "emptydir");
  TempDir outside("outside");
  write_text(outside / "secret.txt", "s");
  fs::create_symlink(outside / "secret.txt", dir / "link.txt");
  fs::create_directory_symlink(outside.path(), dir / "linkdir");

  CandidateSource src{SourceKind::FileTree, dir.path(), {}, "*", 100};
  std::vector<std::string> got;
  for (const auto& c : enumerate(src)) got.push_back(c.source_id);
  CHECK(got == std::vector<std::string>{"a.txt", "b.txt", "sub/c.bin", "sub/deeper/d.txt"});

  src.filter = "*.txt";
  got.clear();
  for (const auto& c : enumerate(src)) got.push_back(c.source_id);
  CHECK(got == std::vector<std::string>{"a.txt", "b.txt", "sub/deeper/d.txt"});

  src.limit = 2;
  CHECK(enumerate(src).size() == 2);
  src.limit = 0;
  CHECK(code_of([&] { enumerate(src); }) == ErrorCode::InvalidArgument);

  src = {SourceKind::FileTree, dir / "nope", {}, "*", 10};
  CHECK(code_of([&] { enumerate(src); }) == ErrorCode::Io);
}

TEST_CASE("text candidates from a list file or inline entries") {
  TempDir dir("text");
  write_text(dir / "ssids.txt", "zeta\nalpha\r\n\nmid\n");
  CandidateSource src{SourceKind::TextList, dir / "ssids.txt", {}, "*", 10};
  std::vector<std::string> got;
  for (const auto& c : enumerate(src)) got.push_back(c.source_id);
  CHECK(got == std::vector<std::string>{"alpha", "mid", "zeta"});

  CandidateSource inline_src{SourceKind::TextList, {}, {"b", "a"}, "*", 10};
  CHECK(enumerate(inline_src).front().source_id == "a");
}

TEST_CASE("planted target file among decoys") {
  TempDir dir("plant");
  decoy_tree(dir.path(), 99);
  write_text(dir / "d5/target.cfg", "the target file");
  const auto key = exact::derive_key_hash(as_bytes("the target file"), HashAlgo::SHA256);
  const auto c = seal_for(key, "payload text");
  Capture cap;
  const exact::HashDiscriminator d(HashAlgo::SHA256);
  const auto r = scan::scan(c, {SourceKind::FileTree, dir.path(), {}, "*", 1000}, d, cap.sink());
  REQUIRE(r.matched.has_value());
  CHECK(r.matched->source_id == "d5/target.cfg");
  CHECK(r.matched->key_hex == to_hex(key));
  CHECK(r.attempted <= 100);
  CHECK(r.attempted == r.derived);
  CHECK(r.derived == r.key_checks);
  CHECK(cap.calls == 1);
  CHECK(std::string(cap.bytes.begin(), cap.bytes.end()) == "payload text");
  CHECK(r.payload_bytes == 12);

  // Identical trees give identical reports.
  const auto r2 = scan::scan(c, {SourceKind::FileTree, dir.path(), {}, "*", 1000}, d, cap.sink());
  CHECK(r2.attempted == r.attempted);
  CHECK(r2.matched->source_id == r.matched->source_id);
}

TEST_CASE("no target: every candidate tried, nothing written") {
  TempDir dir("none");
  decoy_tree(dir.path(), 50);
  const auto key = exact::derive_key_hash(as_bytes("absent"), HashAlgo::SHA256);
  const auto c = seal_for(key, "payload");
  const exact::HashDiscriminator d(HashAlgo::SHA256);
  const auto out = dir / "out.bin";
  auto r = scan::scan(c, {SourceKind::FileTree, dir.path(), {}, "*", 1000}, d, file_sink(out));
  CHECK_FALSE(r.matched.has_value());
  CHECK(r.attempted == 50);
  CHECK(r.key_checks == 50);
  CHECK(r.payload_bytes == 0);
  CHECK_FALSE(fs::exists(out));
  CHECK_FALSE(fs::exists(dir / "out.bin.part"));

  r = scan::scan(c, {SourceKind::FileTree, dir.path(), {}, "*", 7}, d, file_sink(out));
  CHECK(r.attempted == 7);
  CHECK(format_scan_report(r).find("matched\t-\n") != std::string::npos);
}

TEST_CASE("file sink writes the payload at the path") {
  TempDir dir("sink");
  write_text(dir / "src/t.txt", "t");
  const auto key = exact::derive_key_hash(as_bytes("t"), HashAlgo::MD5);
  const auto c = seal_for(key, "hello sink");
  const auto r = scan::scan(c, {SourceKind::FileTree, dir / "src", {}, "*", 10}, exact::HashDiscriminator(HashAlgo::MD5),
                      file_sink(dir / "out.bin"));
  REQUIRE(r.matched.has_value());
  CHECK(read_text(dir / "out.bin") == "hello sink");
  CHECK_FALSE(fs::exists(dir / "out.bin.part"));
}

TEST_CASE("text list scan with value transfer") {
  const exact::ValueTransferDiscriminator d("host-guid");
  const auto key = d.derive(AttributeSample::text("corp-5g"));
  const auto c = seal_for(key, "vt");
  Capture cap;
  CandidateSource src{SourceKind::TextList, {}, {"home", "", "corp-5g", "cafe", std::string(40, 'x')}, "*", 10};
  const auto r = scan::scan(c, src, d, cap.sink());
  REQUIRE(r.matched.has_value());
  CHECK(r.matched->source_id == "corp-5g");
  // Sorted: "", "cafe", "corp-5g"; the empty SSID fails derivation and is skipped.
  CHECK(r.attempted == 3);
  CHECK(r.derived == 2);
  CHECK(r.errors.at(ErrorCode::InvalidInput) == 1);
}

TEST_CASE("pixel-identical re-encodings: first in order matches") {
  TempDir dir("img");
  Rng rng(4);
  Bitmap target(40, 30, 1);
  for (auto& p : target.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  for (int i = 0; i < 20; ++i) {
    Bitmap decoy(40, 30, 1);
    for (auto& p : decoy.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    write_file(dir / ("decoy" + std::to_string(i) + ".pgm"), encode_pnm(decoy));
  }
  write_file(dir / "m_copy.png", encode_png(target));
  write_file(dir / "z_copy.pgm", encode_pnm(target));
  write_text(dir / "broken.png", "not an image");
  const auto key = phash::derive_key_phash(target);
  const auto c = seal_for(key, "img");
  Capture cap;
  const auto r = scan::scan(c, {SourceKind::ImageDir, dir.path(), {}, "*", 100}, phash::PerceptualHashDiscriminator(), cap.sink());
  REQUIRE(r.matched.has_value());
  CHECK(r.matched->source_id == "m_copy.png");
  CHECK(r.errors.at(ErrorCode::Decode) == 1);
}

TEST_CASE("container and discriminator must agree before scanning") {
  TempDir dir("mismatch");
  write_text(dir / "a", "a");
  Rng rng(5);
  std::vector<std::uint8_t> k(16);
  rng.fill(k);
  const auto c = seal_for(KeyMaterial(k, DiscriminatorId::ValueTransfer), "x");
  Capture cap;
  CHECK(code_of([&] {
          scan::scan(c, {SourceKind::FileTree, dir.path(), {}, "*", 10}, exact::HashDiscriminator(HashAlgo::MD5), cap.sink());
        }) == ErrorCode::DiscriminatorMismatch);
  const auto c256 = seal_for(KeyMaterial(std::vector<std::uint8_t>(32, 1), DiscriminatorId::TypicalHash), "x");
  CHECK(code_of([&] {
          scan::scan(c256, {SourceKind::FileTree, dir.path(), {}, "*", 10}, exact::HashDiscriminator(HashAlgo::MD5), cap.sink());
        }) == ErrorCode::DiscriminatorMismatch);
  CHECK(cap.calls == 0);
}

TEST_CASE("unreadable source aborts with the report so far") {
  const auto c = seal_for(KeyMaterial(std::vector<std::uint8_t>(32, 1), DiscriminatorId::TypicalHash), "x");
  Capture cap;
  const auto r = scan::scan(c, {SourceKind::FileTree, "/nonexistent/ekey/tree", {}, "*", 10},
                      exact::HashDiscriminator(HashAlgo::SHA256), cap.sink());
  CHECK(r.aborted);
  CHECK(r.attempted == 0);
  CHECK_FALSE(r.matched.has_value());
  CHECK(format_scan_report(r).find("aborted\t") != std::string::npos);
}
