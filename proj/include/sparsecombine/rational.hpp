#pragma once

// Exact rational numbers for combination coefficients.
//
// Thin value type over boost::multiprecision::cpp_rational. The backend keeps
// every value normalized (lowest terms, positive denominator), so equality is
// structural and a zero coefficient compares equal to Rational{0}.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sparsecombine {

class Rational {
 public:
  using Integer = boost::multiprecision::cpp_int;

  Rational() = default;
  Rational(std::int64_t value) : value_(value) {}  // NOLINT(implicit)
  Rational(const Integer& num, const Integer& den) {
    if (den == 0) throw std::domain_error("Rational: zero denominator");
    value_ = den < 0 ? boost::multiprecision::cpp_rational(-num, -den) : boost::multiprecision::cpp_rational(num, den);
  }

  /// Parses "p/q" or "p".
  static Rational parse(std::string_view text) {
    const auto slash = text.find('/');
    try {
      if (slash == std::string_view::npos) return Rational(Integer(std::string(text)), Integer(1));
      return Rational(Integer(std::string(text.substr(0, slash))),
                      Integer(std::string(text.substr(slash + 1))));
    } catch (const std::domain_error&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("Rational: cannot parse '" + std::string(text) + "'");
    }
  }

  Integer numerator() const { return boost::multiprecision::numerator(value_); }
  Integer denominator() const { return boost::multiprecision::denominator(value_); }

  bool is_zero() const { return value_ == 0; }
  int sign() const { return value_.sign(); }

  double to_double() const { return value_.convert_to<double>(); }

  /// Always "p/q", including "1/1" and "0/1".
  std::string to_string() const {
    return numerator().str() + "/" + denominator().str();
  }

  Rational& operator+=(const Rational& o) { value_ += o.value_; return *this; }
  Rational& operator-=(const Rational& o) { value_ -= o.value_; return *this; }
  Rational& operator*=(const Rational& o) { value_ *= o.value_; return *this; }
  Rational& operator/=(const Rational& o) {
    if (o.is_zero()) throw std::domain_error("Rational: division by zero");
    value_ /= o.value_;
    return *this;
  }

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
  friend Rational operator-(Rational a) { a.value_ = -a.value_; return a; }

  friend bool operator==(const Rational& a, const Rational& b) { return a.value_ == b.value_; }
  friend bool operator<(const Rational& a, const Rational& b) { return a.value_ < b.value_; }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.to_string(); }

 private:
  boost::multiprecision::cpp_rational value_{0};
};

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }

/// base^exponent for integer base, non-negative exponent.
inline Rational pow(const Rational& base, unsigned exponent) {
  Rational result{1};
  Rational b = base;
  while (exponent != 0) {
    if (exponent & 1U) result *= b;
    b *= b;
    exponent >>= 1U;
  }
  return result;
}

/// Binomial coefficient C(n, k), zero outside 0 <= k <= n.
inline Rational::Integer binomial(long n, long k) {
  if (k < 0 || n < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  Rational::Integer result = 1;
  for (long i = 1; i <= k; ++i) {
    result *= (n - k + i);
    result /= i;
  }
  return result;
}

}  // namespace sparsecombine
