#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace ekey::eval {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// 2^exponent, exact; exponent may be negative.
Rational pow2(int exponent);
BigInt pow2_int(unsigned exponent);

// n if value == 2^n exactly.
std::optional<int> exact_log2(const Rational& value);

// Canonical text: "0", "1", "1/2^128" for reciprocal powers of two,
// otherwise "num/den" in lowest terms.
std::string format_probability(const Rational& value);

// Accepts the canonical forms plus "2^-128", "2^k" and decimals ("0.95").
// Throws Error{InvalidInput} on anything else.
Rational parse_probability(std::string_view text);

double to_double(const Rational& value);
// log2 of a positive value to double precision; -inf for 0.
double log2_approx(const Rational& value);

}  // namespace ekey::eval
