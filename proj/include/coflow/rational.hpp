#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>

namespace coflow {

// Exact rational scalar used wherever certification-grade arithmetic is
// required (instance data, grid endpoints, exact simulation).
using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rat& r) { return r.convert_to<double>(); }

// Parses "12", "-3.25", "0.5" or an exact fraction "a/b" into a rational.
// Exponent syntax is not accepted.
inline Rat parse_decimal(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty number");
  if (auto slash = text.find('/'); slash != std::string::npos) {
    Rat num = parse_decimal(text.substr(0, slash));
    Rat den = parse_decimal(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator: " + text);
    return num / den;
  }
  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') {
    negative = text[pos] == '-';
    ++pos;
  }
  BigInt numerator = 0;
  BigInt denominator = 1;
  bool any_digit = false;
  bool seen_dot = false;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("malformed decimal: " + text);
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9')
      throw std::invalid_argument("malformed decimal: " + text);
    numerator = numerator * 10 + (c - '0');
    if (seen_dot) denominator *= 10;
    any_digit = true;
  }
  if (!any_digit) throw std::invalid_argument("malformed decimal: " + text);
  Rat value(numerator, denominator);
  return negative ? -value : value;
}

inline BigInt int_gcd(BigInt a, BigInt b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    BigInt t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline BigInt int_lcm(const BigInt& a, const BigInt& b) {
  if (a == 0 || b == 0) return 0;
  BigInt g = int_gcd(a, b);
  BigInt l = (a / g) * b;
  return l < 0 ? -l : l;
}

// Canonical exact text form: plain integer, finite decimal when the
// denominator is 2^a*5^b, otherwise "num/den".
inline std::string rat_to_string(const Rat& r) {
  BigInt num = numerator(r);
  BigInt den = denominator(r);
  if (den == 1) return num.str();
  BigInt d = den;
  int twos = 0, fives = 0;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  if (d != 1) return num.str() + "/" + den.str();
  int digits = std::max(twos, fives);
  BigInt scale = 1;
  for (int t = twos; t < digits; ++t) scale *= 2;
  for (int t = fives; t < digits; ++t) scale *= 5;
  BigInt scaled = num * scale;  // value * 10^digits
  bool neg = scaled < 0;
  if (neg) scaled = -scaled;
  std::string s = scaled.str();
  if (static_cast<int>(s.size()) <= digits)
    s.insert(0, digits + 1 - s.size(), '0');
  s.insert(s.size() - digits, ".");
  return (neg ? "-" : "") + s;
}

// gcd over rationals: the largest rational dividing both exactly.
// gcd(a/b, c/d) = gcd(a*d, c*b) / (b*d).
inline Rat rat_gcd(const Rat& x, const Rat& y) {
  if (x == 0) return y < 0 ? Rat(-y) : y;
  if (y == 0) return x < 0 ? Rat(-x) : x;
  BigInt a = numerator(x), b = denominator(x);
  BigInt c = numerator(y), d = denominator(y);
  return Rat(int_gcd(a * d, c * b), b * d);
}

}  // namespace coflow
