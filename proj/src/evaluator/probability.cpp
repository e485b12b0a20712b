#include "evaluator/probability.hpp"

#include <cctype>
#include <cmath>
#include <limits>

#include "core/error.hpp"

namespace ekey::eval {

BigInt pow2_int(unsigned exponent) {
  BigInt v = 1;
  v <<= exponent;
  return v;
}

Rational pow2(int exponent) {
  if (exponent >= 0) return Rational(pow2_int(static_cast<unsigned>(exponent)));
  return Rational(BigInt(1), pow2_int(static_cast<unsigned>(-exponent)));
}

namespace {

std::optional<int> int_log2(const BigInt& v) {
  if (v <= 0) return std::nullopt;
  const auto msb = boost::multiprecision::msb(v);
  if (boost::multiprecision::lsb(v) != msb) return std::nullopt;
  return static_cast<int>(msb);
}

[[noreturn]] void bad(std::string_view text) {
  throw Error(ErrorCode::InvalidInput, "cannot parse probability '" + std::string(text) + "'");
}

BigInt parse_uint(std::string_view text, std::string_view whole) {
  if (text.empty()) bad(whole);
  for (char c : text)
    if (!std::isdigit(static_cast<unsigned char>(c))) bad(whole);
  return BigInt(std::string(text));
}

// "n" or "2^k" (k may be negative).
Rational parse_term(std::string_view text, std::string_view whole) {
  if (text.rfind("2^", 0) == 0) {
    std::string_view exp = text.substr(2);
    bool negative = !exp.empty() && exp.front() == '-';
    if (negative) exp.remove_prefix(1);
    if (exp.empty() || exp.size() > 6) bad(whole);
    const int k = static_cast<int>(parse_uint(exp, whole));
    return pow2(negative ? -k : k);
  }
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) return Rational(parse_uint(text, whole));
  const std::string_view int_part = text.substr(0, dot);
  const std::string_view frac = text.substr(dot + 1);
  BigInt ip = int_part.empty() ? BigInt(0) : parse_uint(int_part, whole);
  BigInt fp = parse_uint(frac, whole);
  BigInt scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  return Rational(ip) + Rational(fp, scale);
}

}  // namespace

std::optional<int> exact_log2(const Rational& value) {
  if (value <= 0) return std::nullopt;
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  if (num == 1) {
    if (auto k = int_log2(den)) return -*k;
  } else if (den == 1) {
    return int_log2(num);
  }
  return std::nullopt;
}

std::string format_probability(const Rational& value) {
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  if (num == 1) {
    if (auto k = int_log2(den); k && *k >= 8) return "1/2^" + std::to_string(*k);
  }
  return num.str() + "/" + den.str();
}

Rational parse_probability(std::string_view text) {
  if (text.empty()) bad(text);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_term(text, text);
  const Rational num = parse_term(text.substr(0, slash), text);
  const Rational den = parse_term(text.substr(slash + 1), text);
  if (den == 0) bad(text);
  return num / den;
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

double log2_approx(const Rational& value) {
  if (value <= 0) return -std::numeric_limits<double>::infinity();
  if (auto k = exact_log2(value)) return *k;
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  // Split off the binary exponents so the mantissas fit a double.
  const auto en = static_cast<long>(boost::multiprecision::msb(num));
  const auto ed = static_cast<long>(boost::multiprecision::msb(den));
  const double mn = Rational(num, pow2_int(static_cast<unsigned>(en))).convert_to<double>();
  const double md = Rational(den, pow2_int(static_cast<unsigned>(ed))).convert_to<double>();
  return static_cast<double>(en - ed) + std::log2(mn) - std::log2(md);
}

}  // namespace ekey::eval
