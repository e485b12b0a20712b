// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unistd.h>
#include <vector>

#include "bdnn/gradient_check.hpp"
#include "bdnn/synthetic.hpp"
#include "bdnn/trainer.hpp"
#include "core/digest.hpp"
#include "core/image_io.hpp"
#include "core/random.hpp"
#include "corpus/corpus.hpp"
#include "evaluator/evaluator.hpp"
#include "exact/exact_discriminators.hpp"
#include "phash/phash.hpp"
#include "scanner/scanner.hpp"
#include "sealer/cipher.hpp"
#include "sealer/sealer.hpp"

using namespace ekey;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path scratch(const std::string& tag) {
  const auto p = fs::temp_directory_path() / ("ekey-accept-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// 1. Exact-match definiteness.
Outcome exact_definiteness() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;

  corpus::Corpus vt;
  vt.samples.push_back(AttributeSample::text("corp-lab-5g", Label::Positive, "target"));
  std::set<std::string> seen{"corp-lab-5g"};
  Rng rng(1);
  while (vt.samples.size() < 10001) {
    std::string s(1 + rng.below(32), ' ');
    for (auto& c : s) c = static_cast<char>('!' + rng.below(94));
    if (seen.insert(s).second) vt.samples.push_back(AttributeSample::text(s, Label::Negative, s));
  }
  const auto rv = corpus::evaluate_corpus(vt, exact::ValueTransferDiscriminator("accept-guid"), eval::exact_profile(), {4, std::nullopt}).report;

  corpus::Corpus hs;
  const std::string target = "target file contents";
  hs.samples.push_back(AttributeSample::file({target.begin(), target.end()}, Label::Positive, "target"));
  for (int i = 0; i < 10000; ++i) {
    const std::string s = "negative file " + std::to_string(i);
    hs.samples.push_back(AttributeSample::file({s.begin(), s.end()}, Label::Negative, s));
  }
  for (auto algo : {HashAlgo::MD5, HashAlgo::SHA256}) {
    const auto rh = corpus::evaluate_corpus(hs, exact::HashDiscriminator(algo), eval::exact_profile(), {4, std::nullopt}).report;
    ok = ok && rh.p_sta == 1 && rh.p_acc == 0 && rh.negatives == 10000 && rh.failures == 0;
  }
  ok = ok && rv.p_sta == 1 && rv.p_acc == 0 && rv.negatives == 10000 && rv.failures == 0;
  const double s = seconds_since(t0);
  ok = ok && s < 10.0;
  detail = fmt("vt P_sta=%s P_acc=%s, hash md5+sha256 checked, 10000 negatives each, %.2fs (limit 10s)",
               eval::format_probability(rv.p_sta).c_str(), eval::format_probability(rv.p_acc).c_str(), s);
  return {ok, detail};
}

// 2. Learned-discriminator thresholds on a held-out split.
Outcome learned_thresholds() {
  const auto t0 = Clock::now();
  const auto dir = scratch("bdnn");
  const auto manifest = bdnn::write_synthetic_corpus(dir, 250, 250, 2024);
  const auto all = corpus::load_corpus(manifest);
  const auto [train, test] = corpus::split(all, 0.6, 7);
  bdnn::TrainConfig cfg;
  const auto model = bdnn::train(train.samples, cfg);
  const bdnn::BdnnDiscriminator d(model);
  const auto r = corpus::evaluate_corpus(test, d, eval::learned_profile(), {4, std::nullopt}).report;
  fs::remove_all(dir);
  const double s = seconds_since(t0);
  const bool ok = r.p_sta >= eval::Rational(95, 100) && r.p_acc <= eval::Rational(5, 1000) && s < 600.0;
  return {ok, fmt("train %zu/%zu, held-out %llu pos / %llu neg: P_sta=%.4f (>=0.95) P_acc=%.4f (<=0.005), %.1fs (limit 600s)",
                  train.count(Label::Positive), train.count(Label::Negative),
                  static_cast<unsigned long long>(r.positives), static_cast<unsigned long long>(r.negatives),
                  eval::to_double(r.p_sta), eval::to_double(r.p_acc), s)};
}

// Photo-like test image: a smooth field (bilinear over a random 5x5 grid) plus
// fine texture, with a random exposure window. Values are clamped, so bright
// or dark exposures saturate as real photographs do.
Bitmap photo_like(Rng& rng) {
  const std::uint32_t w = 40 + static_cast<std::uint32_t>(rng.below(81));
  const std::uint32_t h = 30 + static_cast<std::uint32_t>(rng.below(61));
  const std::uint32_t channels = rng.below(2) ? 3 : 1;
  const double lo = rng.uniform(0.0, 60.0), hi = rng.uniform(195.0, 255.0);
  Bitmap b(w, h, channels);
  for (std::uint32_t c = 0; c < channels; ++c) {
    double grid[5][5];
    for (auto& row : grid)
      for (auto& v : row) v = rng.uniform(lo, hi);
    for (std::uint32_t y = 0; y < h; ++y)
      for (std::uint32_t x = 0; x < w; ++x) {
        const double gx = 4.0 * x / (w - 1), gy = 4.0 * y / (h - 1);
        const int ix = std::min(3, static_cast<int>(gx)), iy = std::min(3, static_cast<int>(gy));
        const double fx = gx - ix, fy = gy - iy;
        const double v = (1 - fx) * (1 - fy) * grid[iy][ix] + fx * (1 - fy) * grid[iy][ix + 1] +
                         (1 - fx) * fy * grid[iy + 1][ix] + fx * fy * grid[iy + 1][ix + 1] + rng.uniform(-8.0, 8.0);
        b.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
  }
  return b;
}

// 3. Perceptual-hash definiteness.
Outcome phash_definiteness() {
  Rng rng(3);
  std::vector<Bitmap> images;
  for (int i = 0; i < 100; ++i) images.push_back(photo_like(rng));

  eval::KeyHistogram h;
  for (int i = 0; i < 1000; ++i) h.add(phash::derive_key_phash(images[0]));
  const auto sta = eval::p_sta(h).p_sta;

  std::size_t invariant = 0, clipped = 0;
  for (const auto& img : images) {
    const auto k = phash::derive_key_phash(img);
    bool same = true, clips = false;
    for (int delta : {-10, 10}) {
      Bitmap b = img;
      for (auto& p : b.pixels) {
        const int v = p + delta;
        clips = clips || v < 0 || v > 255;
        p = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
      same = same && phash::derive_key_phash(b) == k;
    }
    if (same) ++invariant;
    if (clips) ++clipped;
  }
  const double inv_rate = static_cast<double>(invariant) / images.size();

  std::vector<KeyMaterial> noise;
  for (int i = 0; i < 200; ++i) {
    Bitmap b(32, 32, 1);
    for (auto& p : b.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    noise.push_back(phash::derive_key_phash(b));
  }
  std::size_t pairs = 0, distinct = 0;
  for (std::size_t i = 0; i < noise.size(); ++i)
    for (std::size_t j = i + 1; j < noise.size(); ++j) {
      ++pairs;
      if (!(noise[i] == noise[j])) ++distinct;
    }
  const double dist_rate = static_cast<double>(distinct) / pairs;
  const bool ok = sta == 1 && inv_rate >= 0.95 && dist_rate >= 0.99;
  return {ok, fmt("P_sta over 1000 derivations=%s, brightness +-10 invariant on %zu/100 photo-like images "
                  "(%zu clip somewhere), %zu/%zu noise pairs distinct",
                  eval::format_probability(sta).c_str(), invariant, clipped, distinct, pairs)};
}

// 4. Evaluator oracle equivalence.
Outcome evaluator_oracle() {
  Rng rng(4);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n_pos = 1 + rng.below(5000), n_neg = 1 + rng.below(5000);
    const unsigned distinct = 1 + static_cast<unsigned>(rng.below(trial % 3 ? 8 : 200));
    auto draw = [&](std::size_t n) {
      std::vector<std::optional<KeyMaterial>> keys;
      for (std::size_t i = 0; i < n; ++i) {
        if (rng.below(50) == 0) {
          keys.push_back(std::nullopt);
          continue;
        }
        std::vector<std::uint8_t> o(16, 0);
        const auto v = rng.below(distinct);
        o[14] = static_cast<std::uint8_t>(v >> 8);
        o[15] = static_cast<std::uint8_t>(v);
        keys.push_back(KeyMaterial(o, DiscriminatorId::BDNN));
      }
      return keys;
    };
    auto pos = draw(n_pos), neg = draw(n_neg);
    if (std::none_of(pos.begin(), pos.end(), [](auto& k) { return k.has_value(); })) pos[0] = KeyMaterial::zeros(128, DiscriminatorId::BDNN);

    eval::KeyHistogram hp, hn;
    for (auto& k : pos) k ? hp.add(*k) : hp.add_failure();
    for (auto& k : neg) k ? hn.add(*k) : hn.add_failure();
    const auto s = eval::p_sta(hp);
    const auto acc = eval::p_acc(hn, s.chosen_key);

    // Brute force: count every key against every sample, smallest key wins ties.
    std::optional<KeyMaterial> best;
    std::size_t best_count = 0;
    for (const auto& cand : pos) {
      if (!cand) continue;
      std::size_t c = 0;
      for (const auto& k : pos) c += k && *k == *cand;
      if (c > best_count || (c == best_count && *cand < *best)) {
        best = cand;
        best_count = c;
      }
    }
    std::size_t acc_count = 0;
    for (const auto& k : neg) acc_count += k && *k == *best;
    const eval::Rational oracle_sta(best_count, pos.size());
    const eval::Rational oracle_acc(acc_count, neg.size());
    if (!(s.p_sta == oracle_sta && acc == oracle_acc && s.chosen_key == *best)) ++mismatches;
  }
  return {mismatches == 0, fmt("1000 randomized histograms, %zu mismatches against brute-force recount", mismatches)};
}

// 5. Non-enumerability bookkeeping.
Outcome non_enumerability() {
  const auto y = eval::exact_profile().y;
  const auto p128 = eval::p_out(128), p256 = eval::p_out(256);
  const bool ok = p128 == eval::pow2(-128) && p256 == eval::pow2(-256) && eval::exact_log2(p128) == -128 &&
                  eval::exact_log2(p256) == -256 && p128 <= y && p256 <= y && p256 < p128 &&
                  !(eval::pow2(-127) <= y);
  return {ok, "p_out(128)=" + eval::format_probability(p128) + ", p_out(256)=" + eval::format_probability(p256) +
                  ", both <= y=" + eval::format_probability(y) + " in exact rational arithmetic"};
}

// 6. Sealer round trip and gating.
Outcome sealer_gating() {
  Rng rng(6);
  std::size_t round_trip_failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t bits = i % 2 ? 256 : 128;
    std::vector<std::uint8_t> k(bits / 8), p(rng.below(2048));
    rng.fill(k);
    rng.fill(p);
    const KeyMaterial key(k, DiscriminatorId::TypicalHash);
    const auto c = seal::SealedContainer::parse(seal::seal(p, key, seal::suite_for_width(bits), rng).serialize());
    if (seal::unseal(c, key) != p) ++round_trip_failures;
  }

  std::vector<std::uint8_t> k(16), p(500);
  rng.fill(k);
  rng.fill(p);
  const KeyMaterial key(k, DiscriminatorId::TypicalHash);
  const auto c = seal::seal(p, key, seal::CipherSuite::AES128_CBC_PKCS7, rng);
  const auto ops_before = seal::aes_block_operations();
  std::size_t leaked = 0, wrong_accepts = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::uint8_t> w = k;
    if (i % 2) rng.fill(w);
    else w[rng.below(16)] ^= static_cast<std::uint8_t>(1u << rng.below(8));
    if (w == k) continue;
    std::vector<std::uint8_t> out;
    try {
      out = seal::unseal(c, KeyMaterial(w, DiscriminatorId::TypicalHash));
      ++wrong_accepts;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::KeyMismatch) ++wrong_accepts;
    }
    leaked += out.size();
  }
  const auto aes_ops = seal::aes_block_operations() - ops_before;

  const auto iv = hex_decode("000102030405060708090a0b0c0d0e0f");
  const auto pt = hex_decode("6bc1bee22e409f96e93d7e117393172a");
  const bool kat =
      hex_encode(seal::aes_cbc_encrypt(hex_decode("000102030405060708090a0b0c0d0e0f"), std::vector<std::uint8_t>(16, 0),
                                       hex_decode("00112233445566778899aabbccddeeff"), false)) ==
          "69c4e0d86a7b0430d8cdb78070b4c55a" &&
      hex_encode(seal::aes_cbc_encrypt(hex_decode("2b7e151628aed2a6abf7158809cf4f3c"), iv, pt, false)) ==
          "7649abac8119b246cee98e9b12e9197d" &&
      hex_encode(seal::aes_cbc_encrypt(hex_decode("603deb1015ca71be2b73aef0857d77811f352c073b6108d72d9810a30914dff4"),
                                       iv, pt, false)) == "f58c4c04d6e5f1ba779eabfb5f7bfbd6" &&
      hex_encode(sha256(as_bytes("abc"))) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad" &&
      hex_encode(sha256(as_bytes("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"))) ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1";

  const bool ok = round_trip_failures == 0 && leaked == 0 && wrong_accepts == 0 && aes_ops == 0 && kat;
  return {ok, fmt("1000 round trips (%zu failed), 10000 wrong keys: %zu payload bytes, %llu AES block ops, KATs %s",
                  round_trip_failures, leaked, static_cast<unsigned long long>(aes_ops), kat ? "ok" : "FAILED")};
}

// 7. Gradient correctness.
Outcome gradient_correctness() {
  using namespace bdnn;
  Rng rng(7);
  double worst = 0;
  std::size_t checked = 0, kinks = 0;
  std::set<LayerType> covered;
  for (int inst = 0; inst < 100; ++inst) {
    const std::uint32_t c = 1 + rng.below(2), h = 4 + rng.below(4), w = 4 + rng.below(4);
    std::vector<Layer> layers;
    const std::uint32_t kernel = 1 + rng.below(3);
    const std::uint32_t stride = 1 + rng.below(2);
    layers.push_back(Layer::conv(1 + rng.below(3), kernel, stride, rng.below(2)));
    layers.push_back(Layer::relu());
    if (inst % 2 == 0) layers.push_back(Layer::pool());
    const std::size_t key = layers.size();
    layers.push_back(Layer::affine(2 + rng.below(6)));
    layers.push_back(Layer::sigmoid());
    layers.push_back(Layer::dropout(rng.uniform(0.0, 0.6)));
    if (inst % 3 == 0) {
      layers.push_back(Layer::affine(3));
      layers.push_back(Layer::softmax());
    }
    layers.push_back(Layer::affine(2));
    layers.push_back(Layer::softmax());
    std::optional<NetworkModel> m;
    try {
      m.emplace(Shape{c, h, w}, layers, key);
    } catch (const Error&) {
      --inst;  // geometry too small for this draw
      continue;
    }
    for (auto& l : m->mutable_layers()) {
      covered.insert(l.type);
      for (auto& v : l.weights) v = rng.uniform(-0.8, 0.8);
      for (auto& v : l.bias) v = rng.uniform(-0.3, 0.3);
    }
    Tensor x(Shape{c, h, w});
    for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
    const auto r = gradient_check(*m, x, static_cast<int>(rng.below(2)), rng.uniform(0.0, 2.0), 1000 + inst);
    worst = std::max(worst, r.max_relative_error);
    checked += r.checked;
    kinks += r.skipped_kinks;
  }
  const bool ok = worst <= 1e-4 && covered.size() == 7;
  return {ok, fmt("100 instances, %zu coordinates (%zu at kinks skipped), %zu/7 layer types, max relative error %.3g (<=1e-4)",
                  checked, kinks, covered.size(), worst)};
}

// 8. Scanner end to end.
Outcome scanner_end_to_end() {
  const auto t0 = Clock::now();
  const auto dir = scratch("scan");
  const auto tree = dir / "tree";
  Rng rng(8);
  for (int i = 0; i < 17; ++i) fs::create_directories(tree / ("dir" + std::to_string(i)));
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::uint8_t> b(64 + rng.below(512));
    rng.fill(b);
    write_file(tree / ("dir" + std::to_string(i % 17)) / ("decoy" + std::to_string(i) + ".bin"), b);
  }
  const std::string target = "planted target attribute file";
  write_file(tree / "dir5/zz-target.cfg", as_bytes(target));
  std::vector<std::uint8_t> payload(3000);
  rng.fill(payload);

  const exact::HashDiscriminator d(HashAlgo::SHA256);
  const auto key = d.derive(AttributeSample::file({target.begin(), target.end()}));
  const auto c = seal::SealedContainer::parse(seal::seal(payload, key, seal::CipherSuite::AES256_CBC_PKCS7).serialize());

  const scan::CandidateSource src{scan::SourceKind::FileTree, tree, {}, "*", 5000};
  const auto r1 = scan::scan(c, src, d, scan::file_sink(dir / "out1.bin"));
  const auto r2 = scan::scan(c, src, d, scan::file_sink(dir / "out2.bin"));
  const bool found = r1.matched && r1.matched->source_id == "dir5/zz-target.cfg" && r2.matched &&
                     r2.matched->source_id == r1.matched->source_id && r1.attempted == r2.attempted &&
                     read_file(dir / "out1.bin") == payload && read_file(dir / "out2.bin") == payload;

  fs::remove(tree / "dir5/zz-target.cfg");
  const auto r3 = scan::scan(c, src, d, scan::file_sink(dir / "out3.bin"));
  const bool nothing = !r3.matched && r3.attempted == 1000 && r3.key_checks == 1000 && !fs::exists(dir / "out3.bin") &&
                       !fs::exists(dir / "out3.bin.part");
  fs::remove_all(dir);
  const double s = seconds_since(t0);
  const bool ok = found && nothing && s < 30.0;
  return {ok, fmt("target found at %s after %zu candidates (twice, same order), payload exact: %s; no-target scan %zu attempted, nothing written: %s; %.2fs (limit 30s)",
                  r1.matched ? r1.matched->source_id.c_str() : "-", r1.attempted, found ? "yes" : "no", r3.attempted,
                  nothing ? "yes" : "no", s)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"exact-match definiteness", exact_definiteness},
      {"learned-discriminator thresholds", learned_thresholds},
      {"perceptual-hash definiteness", phash_definiteness},
      {"evaluator oracle equivalence", evaluator_oracle},
      {"non-enumerability bookkeeping", non_enumerability},
      {"sealer round trip and gating", sealer_gating},
      {"gradient correctness", gradient_correctness},
      {"scanner end to end", scanner_end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %zu [%s] %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
