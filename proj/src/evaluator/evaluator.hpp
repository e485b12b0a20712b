#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "core/key_material.hpp"
#include "evaluator/probability.hpp"

namespace ekey::eval {

// Thresholds of the {P_in <= x, P_out <= y, P_sta >= z, P_acc <= w} judgment.
struct EvaThresholds {
  Rational x;
  Rational y;
  Rational z;
  Rational w;

  // x, y in (0, 1]; z, w in [0, 1]. Throws Error{InvalidInput}.
  void validate() const;
};

// {x = y = 2^-128, z = 1, w = 0}: one-to-one discriminators.
EvaThresholds exact_profile();
// {x = y = 2^-128, z = 0.95, w = 0.005}: learned discriminators.
EvaThresholds learned_profile();
// "exact" or "learned".
EvaThresholds profile_by_name(std::string_view name);

// Counts of derived keys. Failed derivations land in an out-of-band sentinel
// bucket: they count towards total() but can never equal a key.
class KeyHistogram {
 public:
  void add(const KeyMaterial& key, std::uint64_t count = 1);
  void add_failure(std::uint64_t count = 1);
  void merge(const KeyHistogram& other);

  const std::map<KeyMaterial, std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t failures() const noexcept { return failures_; }
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t count_of(const KeyMaterial& key) const;
  bool empty() const noexcept { return total_ == 0; }

 private:
  std::map<KeyMaterial, std::uint64_t> counts_;
  std::uint64_t failures_ = 0;
  std::uint64_t total_ = 0;
};

// P_in for a target of uniqueness: 1 / total_samples.
Rational p_in_unique(const BigInt& total_samples);
Rational p_in_unique_pow2(unsigned exponent);
// P_in for a target of unique-typedness: O(target class) / O(total classes).
Rational p_in_typed(const BigInt& target_class_complexity, const BigInt& total_class_complexity);
// P_out = 2^-width for width in {128, 256}.
Rational p_out(std::size_t key_width_bits);

struct StabilityResult {
  Rational p_sta;
  KeyMaterial chosen_key;
  // More than one key reached the maximum count; the lexicographically
  // smallest was chosen.
  bool tie = false;
};

// max count / total over the histogram; the sentinel bucket is never chosen.
StabilityResult p_sta(const KeyHistogram& positives);
// (count of negatives equal to key) / total negatives.
Rational p_acc(const KeyHistogram& negatives, const KeyMaterial& key);

struct EvaInputs {
  Rational p_in;
  Rational p_out;
  Rational p_sta;
  Rational p_acc;
  KeyMaterial chosen_key;
};

struct EvaReport {
  Rational p_in;
  Rational p_out;
  Rational p_sta;
  Rational p_acc;
  KeyMaterial chosen_key;
  EvaThresholds thresholds;
  bool pass = false;

  // Corpus bookkeeping, zero when judged from analytic inputs only.
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  std::uint64_t failures = 0;
  bool tie = false;
};

EvaReport judge(const EvaInputs& inputs, const EvaThresholds& thresholds);
bool passes(const EvaInputs& inputs, const EvaThresholds& thresholds);

// Human-readable multi-line report.
std::string format_report(const EvaReport& report);

// Machine-readable single line, tab separated, fixed field order:
//   EVA1, verdict (pass|fail), p_in, p_out, p_sta, p_acc, chosen key hex,
//   discriminator, positives, negatives, failures, tie (0|1), x, y, z, w
// Probabilities use format_probability().
std::string format_record(const EvaReport& report);
EvaReport parse_record(std::string_view line);

}  // namespace ekey::eval
