#pragma once

// Exact scalars. Every probability handled by the analysis code is a GMP
// rational; the type keeps values in lowest terms with a positive denominator.

#include <boost/multiprecision/gmp.hpp>

#include <cctype>
#include <string>
#include <string_view>

#include "nflow/errors.hpp"

namespace nflow {

using Integer = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;

inline Integer numerator_of(const Rational& q) { return boost::multiprecision::numerator(q); }
inline Integer denominator_of(const Rational& q) { return boost::multiprecision::denominator(q); }

namespace detail {

inline bool is_integer_literal(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace detail

/// Parses "p/q" or "p" (no decimals, no whitespace). Throws InputError.
inline Rational parse_rational(std::string_view text) {
  const auto slash = text.find('/');
  const std::string_view num = text.substr(0, slash);
  const std::string_view den = slash == std::string_view::npos ? std::string_view{"1"} : text.substr(slash + 1);
  if (!detail::is_integer_literal(num) || !detail::is_integer_literal(den) || den[0] == '-' || den[0] == '+') {
    throw InputError("malformed rational '" + std::string(text) + "' (expected p/q or p)");
  }
  const Integer q{std::string(den)};
  if (q == 0) throw InputError("zero denominator in rational '" + std::string(text) + "'");
  std::string n(num);
  if (n[0] == '+') n.erase(0, 1);
  return Rational(Integer(n), q);
}

/// Canonical text form "p/q" in lowest terms; integers keep the "/1".
inline std::string to_string(const Rational& q) { return numerator_of(q).str() + "/" + denominator_of(q).str(); }

}  // namespace nflow
