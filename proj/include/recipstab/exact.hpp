#pragma once

// Exact integers and rationals (GMP-backed) plus a variable-precision real
// (MPFR-backed) used for perturbed samples and real-valued bounds.

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <optional>
#include <string>
#include <string_view>

#include "recipstab/errors.hpp"

namespace recipstab {

// Expression templates off throughout.
using BigInt = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                             boost::multiprecision::et_off>;
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;

inline constexpr unsigned kDefaultPrecisionBits = 128;

// n/d in lowest terms with a positive denominator. Prefer this over the
// two-argument Rational constructor, which does not normalize the sign.
inline Rational make_rational(const BigInt& n, const BigInt& d) {
  if (d == 0) throw DivisionByZero("zero denominator");
  return Rational(n) / Rational(d);
}

namespace detail {
// Mirrors Boost's process-wide default; Real precision is global state.
inline unsigned& requested_precision_bits() {
  static unsigned bits = 0;
  return bits;
}
}  // namespace detail

// Sets the mantissa width of newly created Real values. Boost expresses the
// precision in decimal digits; the resulting binary precision is >= bits.
inline void set_precision_bits(unsigned bits) {
  if (bits < 64) throw DomainError("precision must be at least 64 bits");
  const auto digits10 =
      static_cast<unsigned>(std::ceil(bits * 0.30102999566398120));
  Real::default_precision(digits10);
  detail::requested_precision_bits() = bits;
}

inline unsigned precision_bits() {
  if (detail::requested_precision_bits() == 0) set_precision_bits(kDefaultPrecisionBits);
  return detail::requested_precision_bits();
}

namespace detail {
inline const unsigned precision_initialized = precision_bits();
}  // namespace detail

// Restores the previous precision on scope exit.
class PrecisionScope {
 public:
  explicit PrecisionScope(unsigned bits) : saved_(precision_bits()) {
    set_precision_bits(bits);
  }
  ~PrecisionScope() { set_precision_bits(saved_); }
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  unsigned saved_;
};

// Smallest positive relative slack treated as rounding noise at the current
// precision.
inline Real rounding_slack() {
  Real one = 1;
  return ldexp(one, -static_cast<int>(precision_bits()) + 8);
}

/// n choose k, exact.
inline BigInt binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) throw DomainError("binomial: k > n");
  if (k > n - k) k = n - k;
  BigInt result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;  // exact: result is C(n-k+i, i) here
  }
  return result;
}

/// Sum over even k in [0, l] of 2^(l-k) C(l,k), by literal summation.
inline BigInt even_binomial_sum(std::uint64_t l) {
  BigInt sum = 0;
  for (std::uint64_t k = 0; k <= l; k += 2) {
    BigInt term = binomial(l, k);
    term <<= static_cast<unsigned>(l - k);
    sum += term;
  }
  return sum;
}

inline Rational rational_pow(const Rational& base, std::int64_t exp) {
  if (exp < 0) {
    if (base == 0) throw DivisionByZero("rational_pow: zero base with negative exponent");
    const Rational inv = 1 / base;
    return rational_pow(inv, -exp);
  }
  BigInt num = boost::multiprecision::pow(boost::multiprecision::numerator(base),
                                          static_cast<unsigned>(exp));
  BigInt den = boost::multiprecision::pow(boost::multiprecision::denominator(base),
                                          static_cast<unsigned>(exp));
  return Rational(num, den);
}

inline Real to_real(const Rational& q) { return Real(q); }

inline Real pow3(std::int64_t e) {
  return pow(Real(3), Real(static_cast<double>(e)));
}

// Parses "n", "n/d", or a decimal literal "[-]i.f[e±x]" into an exact rational.
namespace detail {
// Base-10 only: a leading zero would otherwise select octal.
inline std::optional<BigInt> parse_decimal_integer(std::string_view text) {
  std::size_t i = 0;
  const bool negative = !text.empty() && (text[0] == '-' || text[0] == '+') && text[i++] == '-';
  if (i == text.size()) return std::nullopt;
  for (std::size_t k = i; k < text.size(); ++k)
    if (text[k] < '0' || text[k] > '9') return std::nullopt;
  while (i + 1 < text.size() && text[i] == '0') ++i;
  BigInt out(std::string(text.substr(i)));
  return negative ? BigInt(-out) : out;
}
}  // namespace detail

inline Rational parse_rational(std::string_view text) {
  auto fail = [&]() -> Rational {
    throw DomainError("not a rational literal: '" + std::string(text) + "'");
  };
  if (text.empty()) return fail();
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto n = detail::parse_decimal_integer(text.substr(0, slash));
    const auto d = detail::parse_decimal_integer(text.substr(slash + 1));
    if (!n || !d) return fail();
    if (*d == 0) throw DivisionByZero("zero denominator in '" + std::string(text) + "'");
    return make_rational(*n, *d);
  }
  std::string digits;
  std::int64_t exp10 = 0;
  std::size_t i = 0;
  bool negative = false;
  if (text[i] == '+' || text[i] == '-') negative = text[i++] == '-';
  bool seen_digit = false, seen_point = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) --exp10;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) return fail();
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') return fail();
    const std::string tail(text.substr(i + 1));
    std::size_t used = 0;
    long long e = 0;
    try {
      e = std::stoll(tail, &used);
    } catch (const std::exception&) {
      return fail();
    }
    if (used != tail.size()) return fail();
    exp10 += e;
  }
  BigInt mantissa = *detail::parse_decimal_integer(digits);
  if (negative) mantissa = -mantissa;
  const BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(
                                                      exp10 < 0 ? -exp10 : exp10));
  return exp10 < 0 ? make_rational(mantissa, scale) : Rational(mantissa * scale);
}

// "num/den", denominator always present.
inline std::string format_rational(const Rational& q) {
  return boost::multiprecision::numerator(q).str() + "/" +
         boost::multiprecision::denominator(q).str();
}

// Scientific notation with 17 significant digits.
inline std::string format_real(const Real& x) {
  std::ostringstream out;
  out << std::scientific << std::setprecision(16) << x;
  return out.str();
}

}  // namespace recipstab
