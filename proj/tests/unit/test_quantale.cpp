#include "qlog/quantale.hpp"

#include <doctest.h>

#include <random>

using namespace qlog;

TEST_SUITE("quantale") {

TEST_CASE("oplus truncates") {
  CHECK(double(oplus(0.0, 0.4)) == doctest::Approx(0.4));
  CHECK(double(oplus(0.6, 0.7)) == 1.0);
  CHECK(double(oplus(0.25, 0.5)) == doctest::Approx(0.75));
}

TEST_CASE("wand is truncated subtraction") {
  CHECK(double(wand(0.3, 0.3)) == 0.0);
  CHECK(double(wand(0.7, 0.2)) == 0.0);
  CHECK(double(wand(0.2, 0.7)) == doctest::Approx(0.5));
}

TEST_CASE("scaling") {
  CHECK(double(scaleProp(Grade(1), 0.37)) == doctest::Approx(0.37));
  CHECK(double(scaleProp(Grade(2), 0.6)) == 1.0);
  CHECK(double(scaleProp(Grade::infinity(), 0.0)) == 0.0);
  CHECK(double(scaleProp(Grade::infinity(), 0.1)) == 1.0);
  CHECK_THROWS_AS(scaleProp(Grade(0), 0.5), std::domain_error);
}

TEST_CASE("PropVal range") {
  CHECK_THROWS(PropVal(-0.5));
  CHECK_THROWS(PropVal(1.5));
}

TEST_CASE("residuation and monoid laws on random values") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 2000; ++i) {
    double a = u(rng), b = u(rng), c = u(rng);
    CHECK(double(oplus(a, b)) == doctest::Approx(double(oplus(b, a))));
    CHECK(double(oplus(oplus(a, b), c)) == doctest::Approx(double(oplus(a, oplus(b, c)))));
    // a + b >= c  iff  b >= c - a  (order reversed: smaller is truer)
    bool lhs = double(oplus(a, b)) >= c - 1e-12;
    bool rhs = b >= double(wand(a, c)) - 1e-12;
    CHECK(lhs == rhs);
    CHECK(double(wand(a, oplus(a, b))) <= b + 1e-12);
  }
}

TEST_CASE("grade arithmetic") {
  CHECK(Grade::parse("1/2") + Grade::parse("1/3") == Grade::ratio(5, 6));
  CHECK(Grade::parse("0.25") == Grade::ratio(1, 4));
  CHECK(Grade::parse("inf").is_infinite());
  CHECK((Grade::infinity() * Grade(0)).is_zero());
  CHECK((Grade::infinity() * Grade(2)).is_infinite());
  CHECK(Grade::ratio(1, 2) - Grade(1) == Grade(0));
  CHECK(Grade(3) / Grade(4) == Grade::ratio(3, 4));
  CHECK(Grade(1) < Grade::infinity());
  CHECK(max(Grade(1), Grade::ratio(1, 2)) == Grade(1));
  CHECK_THROWS(Grade::parse("-1"));
  CHECK_THROWS(Grade::parse("1/0"));
  CHECK_THROWS(Grade::parse("abc"));
}

TEST_CASE("decimal parsing") {
  CHECK(parse_rational("0.9") == Rational(9, 10));
  CHECK(parse_rational("09") == Rational(9));
  CHECK(parse_rational("3/6") == Rational(1, 2));
  CHECK(rational_str(Rational(6, 4)) == "3/2");
  CHECK_THROWS(parse_rational(""));
  CHECK_THROWS(parse_rational("1.2.3"));
}

}
