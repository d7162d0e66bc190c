#include "qlog/casestudies.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace qlog;

TEST_SUITE("casestudies") {

TEST_CASE("markov bound") {
  auto r = markovCheck(1e-4);
  CHECK(r.ok);
  CHECK(r.distance.value <= 0.25 + 1e-4);
}

TEST_CASE("coin closed form") {
  auto r = coinCheck(Grade::ratio(1, 2), Grade::ratio(1, 4));
  CHECK(r.expected == doctest::Approx(0.2));
  CHECK(r.distance.value == doctest::Approx(0.2).epsilon(1e-5));
  CHECK(r.ok);
}

TEST_CASE("td contraction factor") {
  std::mt19937_64 rng(5);
  auto m = MDP::random(2, 2, Grade::ratio(1, 2), Grade::ratio(1, 2), rng);
  CHECK(m.k() == Grade::ratio(3, 4));
  ValueVec v{0.125, 0.5}, w{0.75, 0.25};
  auto r0 = tdContractionCheck(m, v, w, 0);
  CHECK(r0.initial == doctest::Approx(0.625));
  CHECK(r0.coupling_cost == doctest::Approx(0.625));
  CHECK(r0.ok);
  auto same = tdContractionCheck(m, v, v, 3);
  CHECK(same.coupling_cost == doctest::Approx(0.0));
  auto r2 = tdContractionCheck(m, v, w, 2);
  CHECK(r2.bound == doctest::Approx(0.625 * 0.75 * 0.75));
  CHECK(r2.ok);
}

TEST_CASE("td update stays in range") {
  std::mt19937_64 rng(9);
  auto m = MDP::random(2, 2, Grade::ratio(1, 2), Grade::ratio(4, 5), rng);
  for (double vi : {0.0, 0.3, 1.0})
    for (double r : {0.0, 0.5, 1.0})
      for (double vj : {0.0, 0.6, 1.0}) {
        double u = td_update(m, vi, r, vj);
        CHECK(u >= 0.0);
        CHECK(u <= 1.0);
      }
  auto d = tdStep(m, {0.2, 0.9});
  CHECK(d.support_mass() + d.residual() == doctest::Approx(1.0));
}

TEST_CASE("hypercube coupling permutation") {
  auto id = hypercubeSigma(3, 0b101, 0b101);
  CHECK(id == std::vector<int>{0, 1, 2, 3});
  auto swap = hypercubeSigma(3, 0b000, 0b010);
  CHECK(swap == std::vector<int>{2, 1, 0, 3});
  auto cyc = hypercubeSigma(3, 0b000, 0b111);
  std::vector<int> sorted = cyc;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3});
  CHECK(cyc[0] == 0);
  for (int i = 1; i <= 3; ++i) CHECK(cyc[i] != i);
}

TEST_CASE("hypercube walk") {
  auto w = hwalk(3, 0);
  CHECK(w.weight(0) == doctest::Approx(0.25));
  CHECK(w.weight(0b100) == doctest::Approx(0.25));
  CHECK(hamming(3, 0b000, 0b011) == Rational(2, 3));
  CHECK(flip(0b101, 0) == 0b101u);
  CHECK(flip(0b101, 2) == 0b111u);
}

TEST_CASE("hypercube contraction") {
  auto r = hypercubeContractionCheck(3);
  CHECK(r.ok);
  CHECK(r.factor == doctest::Approx(0.5));
  CHECK(r.max_ratio <= 0.5 + 1e-9);
}

}
