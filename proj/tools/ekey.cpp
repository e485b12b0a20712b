// ekey command-line front end. Links only the C API in libekey.

#include <sys/stat.h>

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ekey/ekey.h"

namespace fs = std::filesystem;

namespace {

// Exit codes beyond the ek_status range.
constexpr int kExitJudgedFail = 20;
constexpr int kExitNoMatch = 21;
constexpr int kExitRefused = 22;
constexpr int kExitUsage = 64;

constexpr const char* kDemoPayload =
    "ekey demo payload: this container was unlocked by its intended environment.\n";

struct Failure {
  int code;
  std::string message;
};

void check(ek_status s) {
  if (s != EK_OK) throw Failure{static_cast<int>(s), ek_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
template <typename T, void (*Free)(T*)>
using Handle = std::unique_ptr<T, Deleter<T, Free>>;

using Key = Handle<ek_key, ek_key_free>;
using Disc = Handle<ek_discriminator, ek_discriminator_free>;
using Model = Handle<ek_model, ek_model_free>;
using Thresholds = Handle<ek_thresholds, ek_thresholds_free>;
using Corpus = Handle<ek_corpus, ek_corpus_free>;
using Report = Handle<ek_report, ek_report_free>;
using ScanReport = Handle<ek_scan_report, ek_scan_report_free>;

std::string take(char* s) {
  std::string out(s ? s : "");
  ek_string_free(s);
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{EK_E_IO, "cannot open '" + path + "'"};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::uint8_t* data, std::size_t len, bool force) {
  if (fs::exists(path) && !force) {
    throw Failure{EK_E_INVALID_ARGUMENT, "'" + path + "' exists; pass --force to overwrite"};
  }
  const std::string tmp = path + ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure{EK_E_IO, "cannot write '" + path + "'"};
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(len));
    if (!out) throw Failure{EK_E_IO, "write failed on '" + path + "'"};
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Failure{EK_E_IO, "cannot move output into '" + path + "'"};
  }
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  char* out = nullptr;
  check(ek_digest_hex("sha256", bytes.data(), bytes.size(), &out));
  return take(out);
}

// Relative corpus paths fall back to $EKEY_CORPUS_ROOT when they do not exist
// relative to the working directory.
std::string corpus_path(const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute() || fs::exists(p)) return p;
  if (const char* root = std::getenv("EKEY_CORPUS_ROOT"); root && *root) {
    return (fs::path(root) / p).string();
  }
  return p;
}

// Reproducibility header, on stderr so stdout stays machine-readable.
class Header {
 public:
  explicit Header(const std::string& command, int argc, char** argv) {
    out_ << "# ekey " << ek_version() << " " << command << "\n# argv:";
    for (int i = 1; i < argc; ++i) out_ << ' ' << argv[i];
    out_ << '\n';
  }
  void line(const std::string& key, const std::string& value) {
    out_ << "# " << key << ": " << value << '\n';
  }
  void input(const std::string& path) {
    if (fs::is_regular_file(path)) line("input " + path, "sha256=" + sha256_hex(read_bytes(path)));
  }
  void emit() {
    std::cerr << out_.str();
    out_.str({});
  }

 private:
  std::ostringstream out_;
};

struct AttributeOptions {
  std::string method;
  // Distinguishes an omitted --ssid from an explicitly empty one.
  std::optional<std::string> ssid;
  std::string guid;
  std::string algo = "sha256";
  std::string file;
  std::string image;
  std::string model;
};

void add_attribute_options(CLI::App* cmd, AttributeOptions& o, bool method_required = true) {
  auto* m = cmd->add_option("--method", o.method, "Discriminator: vt, hash, phash or bdnn")
                ->check(CLI::IsMember({"vt", "hash", "phash", "bdnn"}));
  if (method_required) m->required();
  cmd->add_option("--ssid", o.ssid, "SSID attribute (vt)");
  cmd->add_option("--guid", o.guid, "Fixed GUID (vt)");
  cmd->add_option("--algo", o.algo, "Digest for the hash method: md5 or sha256")
      ->check(CLI::IsMember({"md5", "sha256"}));
  cmd->add_option("--file", o.file, "Attribute file (hash)");
  cmd->add_option("--image", o.image, "Attribute image, PGM/PPM/PNG (phash, bdnn)");
  cmd->add_option("--model", o.model, "B-DNN model file (bdnn)");
}

void need(bool ok, const std::string& message) {
  if (!ok) throw Failure{kExitUsage, message};
}

Disc make_discriminator(const AttributeOptions& o, Header& h) {
  ek_discriminator* d = nullptr;
  if (o.method == "vt") {
    need(!o.guid.empty(), "--method vt requires --guid");
    h.line("guid", o.guid);
    check(ek_discriminator_vt(o.guid.c_str(), &d));
  } else if (o.method == "hash") {
    h.line("algo", o.algo);
    check(ek_discriminator_hash(o.algo.c_str(), &d));
  } else if (o.method == "phash") {
    check(ek_discriminator_phash(&d));
  } else {
    need(!o.model.empty(), "--method bdnn requires --model");
    h.input(o.model);
    ek_model* m = nullptr;
    check(ek_model_load(o.model.c_str(), &m));
    Model model(m);
    check(ek_discriminator_bdnn(model.get(), &d));
  }
  return Disc(d);
}

Key derive_key(const AttributeOptions& o, const ek_discriminator* d, Header& h) {
  ek_key* k = nullptr;
  if (o.method == "vt") {
    need(o.ssid.has_value(), "--method vt requires --ssid");
    h.line("ssid", *o.ssid);
    check(ek_derive_text(d, o.ssid->c_str(), &k));
  } else if (o.method == "hash") {
    need(!o.file.empty(), "--method hash requires --file");
    h.input(o.file);
    check(ek_derive_file(d, o.file.c_str(), &k));
  } else {
    need(!o.image.empty(), "--method " + o.method + " requires --image");
    h.input(o.image);
    check(ek_derive_file(d, o.image.c_str(), &k));
  }
  return Key(k);
}

std::string key_hex(const ek_key* k) {
  char* s = nullptr;
  check(ek_key_to_hex(k, &s));
  return take(s);
}

bool looks_executable(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  auto starts = [&](std::initializer_list<std::uint8_t> magic) {
    return bytes.size() >= magic.size() && std::equal(magic.begin(), magic.end(), bytes.begin());
  };
  if (starts({0x7f, 'E', 'L', 'F'}) || starts({'M', 'Z'}) || starts({'#', '!'}) ||
      starts({0xfe, 0xed, 0xfa, 0xce}) || starts({0xfe, 0xed, 0xfa, 0xcf}) ||
      starts({0xce, 0xfa, 0xed, 0xfe}) || starts({0xcf, 0xfa, 0xed, 0xfe}) ||
      starts({0xca, 0xfe, 0xba, 0xbe}) || starts({0x00, 'a', 's', 'm'})) {
    return true;
  }
  struct stat st {};
  return ::stat(path.c_str(), &st) == 0 && (st.st_mode & (S_IXUSR | S_IXGRP | S_IXOTH)) != 0;
}

Thresholds make_thresholds(const std::string& profile, const std::vector<std::string>& custom,
                           Header& h) {
  ek_thresholds* t = nullptr;
  if (!custom.empty()) {
    need(custom.size() == 4, "--thresholds takes exactly four values x y z w");
    check(ek_thresholds_custom(custom[0].c_str(), custom[1].c_str(), custom[2].c_str(),
                               custom[3].c_str(), &t));
    h.line("thresholds", custom[0] + " " + custom[1] + " " + custom[2] + " " + custom[3]);
  } else {
    check(ek_thresholds_profile(profile.c_str(), &t));
    h.line("profile", profile);
  }
  return Thresholds(t);
}

Report evaluate(const ek_corpus* c, const ek_discriminator* d, const ek_thresholds* t,
                unsigned jobs, const std::string& p_in) {
  ek_report* r = nullptr;
  check(ek_evaluate(c, d, t, jobs, p_in.empty() ? nullptr : p_in.c_str(), &r));
  return Report(r);
}

int print_report(const ek_report* r, const std::string& record_path, bool force) {
  char* text = nullptr;
  check(ek_report_text(r, &text));
  std::cout << take(text);
  char* rec = nullptr;
  check(ek_report_record(r, &rec));
  std::string line = take(rec) + "\n";
  std::cout << line;
  if (!record_path.empty()) {
    write_bytes(record_path, reinterpret_cast<const std::uint8_t*>(line.data()), line.size(), force);
  }
  return ek_report_pass(r) ? 0 : kExitJudgedFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ekey: environmental-keying research toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ek_version()));
  bool force = false;
  unsigned jobs = 1;
  app.add_flag("--force", force, "Overwrite existing output files");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 1024u));

  // keygen
  AttributeOptions kg;
  auto* keygen = app.add_subcommand("keygen", "Derive a key and print it as hex");
  add_attribute_options(keygen, kg);

  // seal
  AttributeOptions sl;
  std::string seal_payload, seal_out;
  std::optional<std::uint64_t> seal_seed;
  bool research_use = false;
  auto* seal = app.add_subcommand("seal", "Encrypt a payload under an environment-derived key");
  add_attribute_options(seal, sl);
  seal->add_option("--payload", seal_payload, "Payload file (default: a plain-text demo message)");
  seal->add_option("--out", seal_out, "Container output path")->required();
  seal->add_option("--seed", seal_seed, "Seed for salt and IV (test fixtures only)");
  seal->add_flag("--i-understand-research-use", research_use,
                 "Allow sealing a payload that looks executable");

  // unseal
  AttributeOptions us;
  std::string unseal_in, unseal_out;
  auto* unseal = app.add_subcommand("unseal", "Decrypt a container with an environment-derived key");
  add_attribute_options(unseal, us);
  unseal->add_option("--in", unseal_in, "Container path")->required();
  unseal->add_option("--out", unseal_out, "Payload output path")->required();

  // scan
  AttributeOptions sc;
  std::string scan_in, scan_out, scan_source = "files", scan_root, scan_filter = "*", scan_report;
  std::size_t scan_limit = 100000;
  auto* scan = app.add_subcommand("scan", "Try candidate attributes against a container");
  add_attribute_options(scan, sc, false);
  scan->add_option("--in", scan_in, "Container path")->required();
  scan->add_option("--source", scan_source, "Candidate kind: text, files or images")
      ->check(CLI::IsMember({"text", "files", "images"}));
  scan->add_option("--root", scan_root, "Candidate list file (text) or directory")->required();
  scan->add_option("--filter", scan_filter, "fnmatch pattern over candidate ids");
  scan->add_option("--limit", scan_limit, "Maximum candidates")->check(CLI::PositiveNumber);
  scan->add_option("--out", scan_out, "Payload output path")->required();
  scan->add_option("--report", scan_report, "Also write the scan report here");

  // eval
  AttributeOptions ev;
  std::string eval_manifest, eval_profile = "exact", eval_p_in, eval_record;
  std::vector<std::string> eval_thresholds;
  auto* evalc = app.add_subcommand("eval", "Judge a discriminator over a labeled corpus");
  add_attribute_options(evalc, ev);
  evalc->add_option("--manifest", eval_manifest, "Corpus manifest")->required();
  evalc->add_option("--profile", eval_profile, "Threshold profile: exact or learned")
      ->check(CLI::IsMember({"exact", "learned"}));
  evalc->add_option("--thresholds", eval_thresholds, "Custom x y z w")->expected(4);
  evalc->add_option("--p-in", eval_p_in, "Declared P_in, e.g. 2^-128");
  evalc->add_option("--record", eval_record, "Write the EVA1 record here");

  // train
  std::string train_manifest, train_out, train_record, train_profile = "learned";
  double train_split = 0.6;
  std::uint64_t split_seed = 1;
  ek_train_config tc;
  ek_train_config_default(&tc);
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train a B-DNN on a labeled image corpus");
  train->add_option("--manifest", train_manifest, "Image corpus manifest")->required();
  train->add_option("--out", train_out, "Model output path")->required();
  train->add_option("--epochs", tc.epochs, "Training epochs")->check(CLI::PositiveNumber);
  train->add_option("--batch", tc.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  train->add_option("--lr", tc.learning_rate, "Learning rate");
  train->add_option("--momentum", tc.momentum, "SGD momentum");
  train->add_option("--dropout", tc.dropout_rate, "Dropout rate after the key layer");
  train->add_option("--lambda", tc.binarization_lambda, "Key-layer binarization penalty");
  train->add_option("--seed", tc.seed, "Training seed");
  train->add_option("--split", train_split, "Train fraction; the rest is held out and evaluated");
  train->add_option("--split-seed", split_seed, "Seed of the stratified split");
  train->add_option("--profile", train_profile, "Threshold profile for the held-out report")
      ->check(CLI::IsMember({"exact", "learned"}));
  train->add_option("--record", train_record, "Write the held-out EVA1 record here");
  train->add_flag("--quiet", quiet, "No per-epoch progress");

  // report
  std::string report_record;
  auto* report = app.add_subcommand("report", "Re-judge an EVA1 record and print it");
  report->add_option("record", report_record, "Record file (first line is used)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Header h(command, argc, argv);
  try {
    if (command == "keygen") {
      auto d = make_discriminator(kg, h);
      auto k = derive_key(kg, d.get(), h);
      h.emit();
      std::cout << key_hex(k.get()) << '\t' << ek_discriminator_name(d.get()) << '\n';
      return 0;
    }

    if (command == "seal") {
      std::vector<std::uint8_t> payload;
      if (seal_payload.empty()) {
        const std::string demo(kDemoPayload);
        payload.assign(demo.begin(), demo.end());
        h.line("payload", "built-in demo message");
      } else {
        payload = read_bytes(seal_payload);
        h.input(seal_payload);
        if (looks_executable(seal_payload, payload) && !research_use) {
          h.emit();
          throw Failure{kExitRefused, "'" + seal_payload +
                                          "' looks executable; refusing to seal it without "
                                          "--i-understand-research-use"};
        }
      }
      auto d = make_discriminator(sl, h);
      auto k = derive_key(sl, d.get(), h);
      std::uint8_t* buf = nullptr;
      std::size_t len = 0;
      check(ek_seal(payload.data(), payload.size(), k.get(), seal_seed ? &*seal_seed : nullptr, &buf,
                    &len));
      std::unique_ptr<std::uint8_t, decltype(&ek_buffer_free)> owned(buf, &ek_buffer_free);
      ek_container_info info{};
      check(ek_container_info_get(buf, len, &info));
      if (seal_seed) h.line("seed", std::to_string(*seal_seed));
      auto to_hex = [](const std::uint8_t* p, std::size_t n) {
        static const char* digits = "0123456789abcdef";
        std::string s;
        for (std::size_t i = 0; i < n; ++i) s += {digits[p[i] >> 4], digits[p[i] & 15]};
        return s;
      };
      h.line("salt", to_hex(info.salt, 16));
      h.line("iv", to_hex(info.iv, 16));
      h.emit();
      write_bytes(seal_out, buf, len, force);
      std::cout << "sealed " << payload.size() << " octets for " << ek_discriminator_name(d.get())
                << " (" << info.key_bits << "-bit key) into " << seal_out << '\n';
      return 0;
    }

    if (command == "unseal") {
      if (fs::exists(unseal_out) && !force) {
        throw Failure{EK_E_INVALID_ARGUMENT, "'" + unseal_out + "' exists; pass --force to overwrite"};
      }
      h.input(unseal_in);
      const auto container = read_bytes(unseal_in);
      auto d = make_discriminator(us, h);
      auto k = derive_key(us, d.get(), h);
      h.emit();
      std::uint8_t* buf = nullptr;
      std::size_t len = 0;
      check(ek_unseal(container.data(), container.size(), k.get(), &buf, &len));
      std::unique_ptr<std::uint8_t, decltype(&ek_buffer_free)> owned(buf, &ek_buffer_free);
      write_bytes(unseal_out, buf, len, force);
      std::cout << "unsealed " << len << " octets into " << unseal_out << '\n';
      return 0;
    }

    if (command == "scan") {
      if (fs::exists(scan_out) && !force) {
        throw Failure{EK_E_INVALID_ARGUMENT, "'" + scan_out + "' exists; pass --force to overwrite"};
      }
      h.input(scan_in);
      const auto container = read_bytes(scan_in);
      ek_container_info info{};
      check(ek_container_info_get(container.data(), container.size(), &info));
      AttributeOptions o = sc;
      if (o.method.empty()) {
        static const char* names[] = {"", "vt", "hash", "bdnn", "phash"};
        o.method = names[info.discriminator];
      }
      if (o.method == "hash") o.algo = info.key_bits == 256 ? "sha256" : "md5";
      auto d = make_discriminator(o, h);
      const std::string root = corpus_path(scan_root);
      h.line("source", scan_source + " " + root + " filter=" + scan_filter +
                           " limit=" + std::to_string(scan_limit));
      h.emit();
      ek_scan_source src{};
      src.kind = scan_source == "text" ? EK_SOURCE_TEXT
                 : scan_source == "images" ? EK_SOURCE_IMAGES
                                           : EK_SOURCE_FILES;
      src.root = root.c_str();
      src.filter = scan_filter.c_str();
      src.limit = scan_limit;
      ek_scan_report* r = nullptr;
      check(ek_scan(container.data(), container.size(), &src, d.get(), scan_out.c_str(), &r));
      ScanReport rep(r);
      char* text = nullptr;
      check(ek_scan_report_text(rep.get(), &text));
      const std::string t = take(text);
      std::cout << t;
      if (!scan_report.empty()) {
        write_bytes(scan_report, reinterpret_cast<const std::uint8_t*>(t.data()), t.size(), force);
      }
      if (ek_scan_aborted(rep.get())) return EK_E_IO;
      return ek_scan_matched(rep.get()) ? 0 : kExitNoMatch;
    }

    if (command == "eval") {
      const std::string manifest = corpus_path(eval_manifest);
      h.input(manifest);
      h.line("jobs", std::to_string(jobs));
      auto d = make_discriminator(ev, h);
      auto t = make_thresholds(eval_profile, eval_thresholds, h);
      if (!eval_p_in.empty()) h.line("p_in", eval_p_in);
      h.emit();
      ek_corpus* c = nullptr;
      check(ek_corpus_load(manifest.c_str(), &c));
      Corpus corpus(c);
      auto r = evaluate(corpus.get(), d.get(), t.get(), jobs, eval_p_in);
      return print_report(r.get(), eval_record, force);
    }

    if (command == "train") {
      if (fs::exists(train_out) && !force) {
        throw Failure{EK_E_INVALID_ARGUMENT, "'" + train_out + "' exists; pass --force to overwrite"};
      }
      const std::string manifest = corpus_path(train_manifest);
      h.input(manifest);
      h.line("seed", std::to_string(tc.seed));
      h.line("split", std::to_string(train_split) + " seed=" + std::to_string(split_seed));
      h.line("hyper", "epochs=" + std::to_string(tc.epochs) + " batch=" +
                          std::to_string(tc.batch_size) + " lr=" + std::to_string(tc.learning_rate) +
                          " momentum=" + std::to_string(tc.momentum) +
                          " dropout=" + std::to_string(tc.dropout_rate) +
                          " lambda=" + std::to_string(tc.binarization_lambda));
      auto t = make_thresholds(train_profile, {}, h);
      h.emit();
      ek_corpus* c = nullptr;
      check(ek_corpus_load(manifest.c_str(), &c));
      Corpus all(c);
      ek_corpus* tr = nullptr;
      ek_corpus* te = nullptr;
      check(ek_corpus_split(all.get(), train_split, split_seed, &tr, &te));
      Corpus train_set(tr), test_set(te);
      std::cerr << "# train " << ek_corpus_size(tr) << " samples, held out " << ek_corpus_size(te)
                << "\n";
      ek_model* m = nullptr;
      auto progress = [](std::uint32_t epoch, double loss, double acc, void* user) {
        if (!*static_cast<bool*>(user)) {
          std::fprintf(stderr, "epoch %3u  loss %.5f  train-acc %.4f\n", epoch, loss, acc);
        }
      };
      check(ek_train(tr, &tc, progress, &quiet, &m));
      Model model(m);
      check(ek_model_save(model.get(), (train_out + ".part").c_str()));
      fs::rename(train_out + ".part", train_out);
      std::cout << "model: " << train_out << " (" << ek_model_parameter_count(model.get())
                << " parameters, sha256=" << sha256_hex(read_bytes(train_out)) << ")\n";
      ek_discriminator* d = nullptr;
      check(ek_discriminator_bdnn(model.get(), &d));
      Disc disc(d);
      auto r = evaluate(test_set.get(), disc.get(), t.get(), jobs, "");
      std::cout << "held-out evaluation:\n";
      return print_report(r.get(), train_record, force);
    }

    if (command == "report") {
      h.input(report_record);
      h.emit();
      const auto bytes = read_bytes(report_record);
      std::string line(bytes.begin(), bytes.end());
      line = line.substr(0, line.find('\n'));
      ek_report* r = nullptr;
      check(ek_report_parse(line.c_str(), &r));
      Report rep(r);
      char* text = nullptr;
      check(ek_report_text(rep.get(), &text));
      std::cout << take(text);
      return ek_report_pass(rep.get()) ? 0 : kExitJudgedFail;
    }
  } catch (const Failure& f) {
    h.emit();
    std::cerr << "ekey " << command << ": error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    h.emit();
    std::cerr << "ekey " << command << ": error: " << e.what() << '\n';
    return EK_E_INTERNAL;
  }
  return kExitUsage;
}
