#include "evaluator/evaluator.hpp"

#include "core/error.hpp"

namespace ekey::eval {

void EvaThresholds::validate() const {
  auto in_range = [](const Rational& v, bool open_zero) {
    return (open_zero ? v > 0 : v >= 0) && v <= 1;
  };
  if (!in_range(x, true) || !in_range(y, true)) {
    throw Error(ErrorCode::InvalidInput, "thresholds x and y must lie in (0, 1]");
  }
  if (!in_range(z, false) || !in_range(w, false)) {
    throw Error(ErrorCode::InvalidInput, "thresholds z and w must lie in [0, 1]");
  }
}

EvaThresholds exact_profile() { return {pow2(-128), pow2(-128), Rational(1), Rational(0)}; }

EvaThresholds learned_profile() {
  return {pow2(-128), pow2(-128), Rational(95, 100), Rational(5, 1000)};
}

EvaThresholds profile_by_name(std::string_view name) {
  if (name == "exact") return exact_profile();
  if (name == "learned") return learned_profile();
  throw Error(ErrorCode::InvalidArgument, "unknown threshold profile '" + std::string(name) + "'");
}

void KeyHistogram::add(const KeyMaterial& key, std::uint64_t count) {
  counts_[key] += count;
  total_ += count;
}

void KeyHistogram::add_failure(std::uint64_t count) {
  failures_ += count;
  total_ += count;
}

void KeyHistogram::merge(const KeyHistogram& other) {
  for (const auto& [key, count] : other.counts_) add(key, count);
  add_failure(other.failures_);
}

std::uint64_t KeyHistogram::count_of(const KeyMaterial& key) const {
  auto it = counts_.find(key);
  return it == counts_.end() ? 0 : it->second;
}

Rational p_in_unique(const BigInt& total_samples) {
  if (total_samples < 1) throw Error(ErrorCode::InvalidInput, "total samples must be at least 1");
  return Rational(BigInt(1), total_samples);
}

Rational p_in_unique_pow2(unsigned exponent) { return p_in_unique(pow2_int(exponent)); }

Rational p_in_typed(const BigInt& target_class_complexity, const BigInt& total_class_complexity) {
  if (target_class_complexity < 1 || total_class_complexity < 1) {
    throw Error(ErrorCode::InvalidInput, "class complexities must be at least 1");
  }
  if (target_class_complexity > total_class_complexity) {
    throw Error(ErrorCode::InvalidInput, "target class complexity exceeds the total");
  }
  return Rational(target_class_complexity, total_class_complexity);
}

Rational p_out(std::size_t key_width_bits) {
  if (!is_supported_key_width(key_width_bits)) {
    throw Error(ErrorCode::Unsupported,
                "P_out is defined for 128/256-bit keys, not " + std::to_string(key_width_bits));
  }
  return pow2(-static_cast<int>(key_width_bits));
}

StabilityResult p_sta(const KeyHistogram& positives) {
  if (positives.empty()) throw Error(ErrorCode::InvalidInput, "no positive samples");
  if (positives.counts().empty()) {
    throw Error(ErrorCode::InvalidInput, "no positive sample produced a key");
  }
  // std::map iterates keys in ascending order, so the first maximum seen is
  // the lexicographically smallest one.
  const KeyMaterial* best = nullptr;
  std::uint64_t best_count = 0;
  bool tie = false;
  for (const auto& [key, count] : positives.counts()) {
    if (count > best_count) {
      best = &key;
      best_count = count;
      tie = false;
    } else if (count == best_count) {
      tie = true;
    }
  }
  return {Rational(BigInt(best_count), BigInt(positives.total())), *best, tie};
}

Rational p_acc(const KeyHistogram& negatives, const KeyMaterial& key) {
  if (negatives.empty()) throw Error(ErrorCode::InvalidInput, "no negative samples");
  return Rational(BigInt(negatives.count_of(key)), BigInt(negatives.total()));
}

bool passes(const EvaInputs& in, const EvaThresholds& t) {
  return in.p_in <= t.x && in.p_out <= t.y && in.p_sta >= t.z && in.p_acc <= t.w;
}

EvaReport judge(const EvaInputs& inputs, const EvaThresholds& thresholds) {
  thresholds.validate();
  EvaReport r{inputs.p_in, inputs.p_out, inputs.p_sta, inputs.p_acc, inputs.chosen_key,
              thresholds};
  r.pass = passes(inputs, thresholds);
  return r;
}

}  // namespace ekey::eval
