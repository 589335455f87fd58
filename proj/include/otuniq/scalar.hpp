#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "error.hpp"

namespace otuniq {

using Rational = boost::multiprecision::cpp_rational;

/// Extended-real sentinel for potentials that are -infinity. IEEE -inf obeys
/// the extended arithmetic we need: -inf + finite = -inf, c - (-inf) = +inf.
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline bool is_neg_inf(double v) { return std::isinf(v) && v < 0; }

/// Comparison policy shared by the templated kernels. Floating point compares
/// against an explicit tolerance; rationals are exact and ignore it.
template <typename S>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static bool is_zero(double v, double tol) { return std::abs(v) <= tol; }
  static bool positive(double v, double tol) { return v > tol; }
  static bool negative(double v, double tol) { return v < -tol; }
  static double to_double(double v) { return v; }
  static double from_double(double v) { return v; }
};

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static bool is_zero(const Rational& v, const Rational&) { return v == 0; }
  static bool positive(const Rational& v, const Rational&) { return v > 0; }
  static bool negative(const Rational& v, const Rational&) { return v < 0; }
  static double to_double(const Rational& v) { return v.convert_to<double>(); }
  static Rational from_double(double v) {
    // Doubles are dyadic rationals; the conversion is exact.
    return Rational(v);
  }
};

/// Parses "p/q", an integer, or a plain decimal ("0.125", "-3e-2") into an
/// exact rational. Decimal strings are read digit by digit, never via double.
inline Rational parse_rational(std::string_view text) {
  using boost::multiprecision::cpp_int;
  auto bad = [&]() -> Rational {
    fail(ErrorCode::Parse, "not a rational number: '" + std::string(text) + "'");
  };
  if (text.empty()) return bad();
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    try {
      cpp_int num(std::string(text.substr(0, slash)));
      cpp_int den(std::string(text.substr(slash + 1)));
      if (den == 0) return bad();
      return Rational(num, den);
    } catch (const std::exception&) {
      return bad();
    }
  }
  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') negative = text[pos++] == '-';
  cpp_int digits = 0;
  std::int64_t scale = 0;
  bool seen_digit = false, seen_point = false;
  for (; pos < text.size(); ++pos) {
    const char ch = text[pos];
    if (ch >= '0' && ch <= '9') {
      digits = digits * 10 + (ch - '0');
      if (seen_point) --scale;
      seen_digit = true;
    } else if (ch == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) return bad();
  if (pos < text.size()) {
    if (text[pos] != 'e' && text[pos] != 'E') return bad();
    ++pos;
    std::int64_t exponent = 0;
    bool exp_negative = false;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-'))
      exp_negative = text[pos++] == '-';
    if (pos == text.size()) return bad();
    for (; pos < text.size(); ++pos) {
      if (text[pos] < '0' || text[pos] > '9') return bad();
      exponent = exponent * 10 + (text[pos] - '0');
      if (exponent > 4000) return bad();
    }
    scale += exp_negative ? -exponent : exponent;
  }
  cpp_int ten_pow = 1;
  for (std::int64_t k = 0; k < (scale < 0 ? -scale : scale); ++k) ten_pow *= 10;
  Rational value = scale < 0 ? Rational(digits, ten_pow) : Rational(digits * ten_pow);
  return negative ? Rational(-value) : value;
}

inline std::string rational_to_string(const Rational& v) {
  return v.str();
}

}  // namespace otuniq
