#include <cstdio>
#include <sstream>
#include <vector>

#include "core/error.hpp"
#include "evaluator/evaluator.hpp"

namespace ekey::eval {

namespace {

std::string describe(const Rational& p) {
  std::string s = format_probability(p);
  if (p == 0) return s;
  char buf[64];
  std::snprintf(buf, sizeof buf, "  (~%.6g, log2 %.4f)", to_double(p), log2_approx(p));
  return s + buf;
}

const char* mark(bool ok) { return ok ? "ok  " : "FAIL"; }

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::uint64_t parse_count(std::string_view s) {
  if (s.empty() || s.size() > 19) throw Error(ErrorCode::Format, "bad count in EVA record");
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw Error(ErrorCode::Format, "bad count in EVA record");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

}  // namespace

std::string format_report(const EvaReport& r) {
  const auto& t = r.thresholds;
  std::ostringstream out;
  out << "eva report (" << discriminator_name(r.chosen_key.discriminator()) << ", "
      << r.chosen_key.width() << "-bit key)\n";
  out << "  [" << mark(r.p_in <= t.x) << "] P_in  = " << describe(r.p_in)
      << "\n         need <= " << format_probability(t.x) << "\n";
  out << "  [" << mark(r.p_out <= t.y) << "] P_out = " << describe(r.p_out)
      << "\n         need <= " << format_probability(t.y) << "\n";
  out << "  [" << mark(r.p_sta >= t.z) << "] P_sta = " << describe(r.p_sta)
      << "\n         need >= " << format_probability(t.z) << "\n";
  out << "  [" << mark(r.p_acc <= t.w) << "] P_acc = " << describe(r.p_acc)
      << "\n         need <= " << format_probability(t.w) << "\n";
  out << "  chosen key: " << to_hex(r.chosen_key) << "\n";
  if (r.positives + r.negatives > 0) {
    out << "  samples: " << r.positives << " positive, " << r.negatives << " negative, "
        << r.failures << " failed derivations\n";
  }
  if (r.tie) out << "  note: several keys share the top count; the smallest was chosen\n";
  out << "  verdict: " << (r.pass ? "PASS" : "FAIL") << "\n";
  return out.str();
}

std::string format_record(const EvaReport& r) {
  std::ostringstream out;
  out << "EVA1\t" << (r.pass ? "pass" : "fail") << '\t' << format_probability(r.p_in) << '\t'
      << format_probability(r.p_out) << '\t' << format_probability(r.p_sta) << '\t'
      << format_probability(r.p_acc) << '\t' << to_hex(r.chosen_key) << '\t'
      << discriminator_name(r.chosen_key.discriminator()) << '\t' << r.positives << '\t'
      << r.negatives << '\t' << r.failures << '\t' << (r.tie ? 1 : 0) << '\t'
      << format_probability(r.thresholds.x) << '\t' << format_probability(r.thresholds.y) << '\t'
      << format_probability(r.thresholds.z) << '\t' << format_probability(r.thresholds.w);
  return out.str();
}

EvaReport parse_record(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  const auto f = split_tabs(line);
  if (f.size() != 16 || f[0] != "EVA1") {
    throw Error(ErrorCode::Format, "not an EVA1 record (expected 16 tab-separated fields)");
  }
  if (f[1] != "pass" && f[1] != "fail") throw Error(ErrorCode::Format, "bad verdict field");
  EvaInputs in{parse_probability(f[2]), parse_probability(f[3]), parse_probability(f[4]),
               parse_probability(f[5]), from_hex(f[6], parse_discriminator(f[7]))};
  EvaThresholds t{parse_probability(f[12]), parse_probability(f[13]), parse_probability(f[14]),
                  parse_probability(f[15])};
  EvaReport r = judge(in, t);
  if (r.pass != (f[1] == "pass")) {
    throw Error(ErrorCode::Format, "record verdict disagrees with its probabilities");
  }
  r.positives = parse_count(f[8]);
  r.negatives = parse_count(f[9]);
  r.failures = parse_count(f[10]);
  if (f[11] != "0" && f[11] != "1") throw Error(ErrorCode::Format, "bad tie field");
  r.tie = f[11] == "1";
  return r;
}

}  // namespace ekey::eval
