#include "qlog/measures.hpp"

#include "../common/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace qlog;

namespace {

using D = Dist<int>;

double discrete(int a, int b) { return a == b ? 0.0 : 1.0; }

D half01() { return D::from_atoms({{0, 0.5}, {1, 0.5}}); }
D quarter01() { return D::from_atoms({{0, 0.25}, {1, 0.75}}); }

}  // namespace

TEST_SUITE("measures") {

TEST_CASE("construction and canonical form") {
  auto d = D::dirac(3);
  REQUIRE(d.size() == 1);
  CHECK(d.weight(3) == 1.0);
  auto m = D::from_atoms({{2, 0.25}, {1, 0.5}, {2, 0.25}});
  REQUIRE(m.size() == 2);
  CHECK(m.atoms()[0].first == 1);
  CHECK(m.weight(2) == doctest::Approx(0.5));
  CHECK_THROWS(D::from_atoms({{0, 0.5}}));
  CHECK_THROWS(D::from_atoms({{0, 0.7}, {1, 0.7}}));
  CHECK_THROWS(SubDist<int>::from_atoms({{0, -0.1}}));
  auto s = SubDist<int>::from_atoms({{0, 0.5}}, 0.5);
  CHECK(!s.is_total());
}

TEST_CASE("convex combination") {
  auto mu = half01();
  CHECK(convex(0.3, mu, mu) == mu);
  auto c = convex(0.5, D::dirac(0), D::dirac(1));
  CHECK(c == half01());
  CHECK_THROWS(convex(1.0, mu, mu));
}

TEST_CASE("bind and pushforward") {
  auto f = [](int k) { return D::dirac(k + 1); };
  CHECK(bind<int, std::less<int>, int, std::less<int>>(D::dirac(4), f) == D::dirac(5));
  auto shifted = bind<int, std::less<int>, int, std::less<int>>(half01(), f);
  CHECK(shifted == D::from_atoms({{1, 0.5}, {2, 0.5}}));
  auto mu = D::from_atoms({{0, 0.25}, {1, 0.25}, {2, 0.5}});
  CHECK(pushforward<int>([](int x) { return x; }, mu) == mu);
  CHECK(pushforward<int>([](int) { return 9; }, mu) == D::dirac(9));
  auto parity = pushforward<int>([](int x) { return x % 2; }, mu);
  CHECK(parity.weight(0) == doctest::Approx(0.75));
  CHECK(parity.weight(1) == doctest::Approx(0.25));
}

TEST_CASE("residual mass propagates through bind") {
  auto mu = SubDist<int>::from_atoms({{0, 0.5}}, 0.5);
  auto img = bind<int, std::less<int>, int, std::less<int>>(
      mu, [](int) { return SubDist<int>::from_atoms({{1, 0.5}}, 0.5); });
  CHECK(img.weight(1) == doctest::Approx(0.25));
  CHECK(img.residual() == doctest::Approx(0.75));
}

TEST_CASE("mean is a truncated weighted sum") {
  auto phi = [](int x) { return PropVal(x == 0 ? 0.2 : 0.4); };
  CHECK(double(mean(half01(), phi)) == doctest::Approx(0.3));
  auto big = [](int) { return PropVal(1.0); };
  CHECK(double(mean(half01(), big)) == 1.0);
}

TEST_CASE("kantorovich on the two-point example") {
  CHECK(double(kantorovich(discrete, half01(), half01())) == doctest::Approx(0.0));
  CHECK(double(kantorovich(discrete, D::dirac(0), D::dirac(1))) == 1.0);
  auto k = double(kantorovich(discrete, half01(), quarter01()));
  Rational ref = oracle::transport_vertices<Rational>({Rational(1, 2), Rational(1, 2)},
                                            {Rational(1, 4), Rational(3, 4)},
                                            {{0, 1}, {1, 0}});
  CHECK(ref == Rational(1, 4));
  CHECK(k == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(total_variation(half01(), quarter01()) == doctest::Approx(0.25));
}

TEST_CASE("optimal coupling witness") {
  auto c = optimalCoupling(discrete, half01(), quarter01());
  CHECK(c.cost == doctest::Approx(0.25));
  CHECK(c.left == half01());
  CHECK(c.right == quarter01());
  double off = 0;
  for (const auto& a : c.joint.atoms())
    if (a.first.first != a.first.second) off += a.second;
  CHECK(off == doctest::Approx(0.25));
  auto diag = optimalCoupling(discrete, half01(), half01());
  for (const auto& a : diag.joint.atoms()) CHECK(a.first.first == a.first.second);
}

TEST_CASE("exact transport agrees with vertex enumeration") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> w(1, 6), cost(0, 8), size(1, 3);
  for (int trial = 0; trial < 60; ++trial) {
    int m = size(rng), n = size(rng);
    std::vector<Rational> a(m), b(n);
    Rational ta = 0, tb = 0;
    for (auto& x : a) ta += (x = w(rng));
    for (auto& x : b) tb += (x = w(rng));
    for (auto& x : a) x /= ta;
    for (auto& x : b) x /= tb;
    std::vector<std::vector<Rational>> c(m, std::vector<Rational>(n));
    for (auto& row : c)
      for (auto& x : row) x = Rational(cost(rng), 8);
    CHECK(kantorovich_exact(a, b, c) == oracle::transport_vertices(a, b, c));
  }
}

}
