#include "qlog/quantale.hpp"

#include <algorithm>
#include <cmath>

namespace qlog {

Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty number");
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rational num = parse_rational(s.substr(0, slash));
    Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
    return num / den;
  }
  auto dot = s.find('.');
  std::string digits = s;
  boost::multiprecision::cpp_int scale = 1;
  if (dot != std::string::npos) {
    std::string frac = s.substr(dot + 1);
    digits = s.substr(0, dot) + frac;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  }
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit))
    throw std::invalid_argument("malformed number '" + s + "'");
  // a leading 0 would make cpp_int read octal
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
  boost::multiprecision::cpp_int n(digits);
  return Rational(n, scale);
}

std::string rational_str(const Rational& r) {
  auto num = boost::multiprecision::numerator(r);
  auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double rational_to_double(const Rational& r) { return r.convert_to<double>(); }

Grade Grade::parse(std::string_view text) {
  if (text == "inf" || text == "oo" || text == "∞") return infinity();
  return Grade(parse_rational(text));
}

const Rational& Grade::rational() const {
  if (infinite_) throw std::logic_error("infinite grade has no rational value");
  return value_;
}

double Grade::to_double() const {
  return infinite_ ? std::numeric_limits<double>::infinity() : rational_to_double(value_);
}

std::string Grade::str() const { return infinite_ ? "inf" : rational_str(value_); }

Grade operator+(const Grade& a, const Grade& b) {
  if (a.infinite_ || b.infinite_) return Grade::infinity();
  return Grade(a.value_ + b.value_);
}

Grade operator*(const Grade& a, const Grade& b) {
  // inf * 0 = 0 * inf = 0
  if (a.is_zero() || b.is_zero()) return Grade(0);
  if (a.infinite_ || b.infinite_) return Grade::infinity();
  return Grade(a.value_ * b.value_);
}

Grade operator-(const Grade& a, const Grade& b) {
  if (b.infinite_) {
    if (a.infinite_) throw std::domain_error("inf - inf is undefined");
    return Grade(0);
  }
  if (a.infinite_) return a;
  return a.value_ > b.value_ ? Grade(a.value_ - b.value_) : Grade(0);
}

Grade operator/(const Grade& a, const Grade& b) {
  if (b.infinite_ || b.is_zero()) throw std::domain_error("division by zero or infinite grade");
  if (a.infinite_) return a;
  return Grade(a.value_ / b.value_);
}

bool operator==(const Grade& a, const Grade& b) {
  if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
  return a.value_ == b.value_;
}

std::strong_ordering operator<=>(const Grade& a, const Grade& b) {
  if (a.infinite_ || b.infinite_) return a.infinite_ <=> b.infinite_;
  if (a.value_ < b.value_) return std::strong_ordering::less;
  if (a.value_ > b.value_) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Grade max(const Grade& a, const Grade& b) { return a < b ? b : a; }
Grade min(const Grade& a, const Grade& b) { return a < b ? a : b; }

PropVal::PropVal(double x) : v(x) {
  if (!(x >= -kTau && x <= 1 + kTau)) throw std::invalid_argument("PropVal outside [0,1]");
  v = clamp01(x);
}

PropVal oplus(PropVal a, PropVal b) { return std::min(a.v + b.v, 1.0); }

PropVal wand(PropVal a, PropVal b) { return std::max(b.v - a.v, 0.0); }

PropVal scaleProp(const Grade& r, PropVal a) {
  if (r.is_zero()) throw std::domain_error("scaling a predicate by 0 is ill-formed");
  if (r.is_infinite()) return a.v == 0.0 ? 0.0 : 1.0;
  return std::min(r.to_double() * a.v, 1.0);
}

}  // namespace qlog
