#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qlog {

using Rational = boost::multiprecision::cpp_rational;

// Global comparison tolerance for PropVal arithmetic.
inline constexpr double kTau = 1e-9;

/// Sensitivity value in [0, inf]: an exact non-negative rational or infinity.
class Grade {
public:
  Grade() = default;
  Grade(long long n) : value_(n) { check(); }
  explicit Grade(Rational r) : value_(std::move(r)) { check(); }
  static Grade infinity() {
    Grade g;
    g.infinite_ = true;
    return g;
  }
  static Grade ratio(long long num, long long den) { return Grade(Rational(num, den)); }

  // Accepts "inf", integers, "a/b" and finite decimals ("0.25").
  static Grade parse(std::string_view text);

  bool is_infinite() const { return infinite_; }
  bool is_zero() const { return !infinite_ && value_ == 0; }
  const Rational& rational() const;
  double to_double() const;
  std::string str() const;

  friend Grade operator+(const Grade& a, const Grade& b);
  friend Grade operator*(const Grade& a, const Grade& b);
  // Truncated subtraction; a must be finite when b is finite.
  friend Grade operator-(const Grade& a, const Grade& b);
  // Division by a finite positive grade.
  friend Grade operator/(const Grade& a, const Grade& b);
  friend bool operator==(const Grade& a, const Grade& b);
  friend std::strong_ordering operator<=>(const Grade& a, const Grade& b);

  Grade& operator+=(const Grade& o) { return *this = *this + o; }

private:
  void check() const {
    if (value_ < 0) throw std::invalid_argument("grade must be non-negative");
  }
  Rational value_{0};
  bool infinite_ = false;
};

Grade max(const Grade& a, const Grade& b);
Grade min(const Grade& a, const Grade& b);

/// Truth value in [0,1], 0 = true, 1 = false.
struct PropVal {
  double v = 0.0;
  PropVal() = default;
  PropVal(double x);
  operator double() const { return v; }
};

PropVal oplus(PropVal a, PropVal b);
PropVal wand(PropVal a, PropVal b);
// Throws std::domain_error for r = 0.
PropVal scaleProp(const Grade& r, PropVal a);

inline double clamp01(double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); }

double rational_to_double(const Rational& r);
Rational parse_rational(std::string_view text);
std::string rational_str(const Rational& r);

}  // namespace qlog
