#include "qlog/evaluator.hpp"
#include "qlog/processes.hpp"

#include "../common/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace qlog;

namespace {

std::vector<ProcRef> build(const oracle::Chain& m) {
  std::vector<ValuePtr> labels;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  for (std::size_t i = 0; i < m.label.size(); ++i) {
    labels.push_back(v_label(m.label[i], m.label[i] ? "b" : "a"));
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t j = 0; j < m.next[i].size(); ++j)
      if (m.next[i][j] > 0) row.push_back({j, m.next[i][j]});
    rows.push_back(row);
  }
  return make_chain(labels, rows);
}

oracle::Chain random_chain(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> lab(0, 1), w(0, 3);
  oracle::Chain m;
  for (std::size_t i = 0; i < n; ++i) {
    m.label.push_back(lab(rng));
    std::vector<double> row(n);
    double total = 0;
    while (total == 0)
      for (auto& x : row) total += (x = w(rng));
    for (auto& x : row) x /= total;
    m.next.push_back(row);
  }
  return m;
}

}  // namespace

TEST_SUITE("processes") {

TEST_CASE("a process is at distance 0 from itself") {
  oracle::Chain m{{0, 1}, {{0.5, 0.5}, {0.25, 0.75}}};
  auto nodes = build(m);
  CHECK(behavioralDistance(nodes[0], nodes[0], Grade::ratio(1, 2), 1e-9).value == 0.0);
  CHECK(bisimilarityDistance(nodes[1], nodes[1], Grade::ratio(1, 2), 1e-9).value == 0.0);
}

TEST_CASE("different labels are at distance 1") {
  oracle::Chain m{{0, 1}, {{1, 0}, {0, 1}}};
  auto nodes = build(m);
  CHECK(behavioralDistance(nodes[0], nodes[1], Grade::ratio(1, 2), 1e-9).value == 1.0);
}

TEST_CASE("fair coin against a biased coin") {
  // states: fair hd, fair tl, biased hd, biased tl; labels hd = 0, tl = 1
  double e = 0.25;
  oracle::Chain m{{0, 1, 0, 1},
                  {{0.5, 0.5, 0, 0}, {0.5, 0.5, 0, 0}, {0, 0, 0.5 + e, 0.5 - e}, {0, 0, 0.5 + e, 0.5 - e}}};
  auto nodes = build(m);
  auto d = behavioralDistance(nodes[0], nodes[2], Grade::ratio(1, 2), 1e-10);
  double closed = 0.5 * e / (1 - 0.5 + 0.5 * e);
  CHECK(closed == doctest::Approx(0.2));
  CHECK(d.value == doctest::Approx(closed).epsilon(1e-7));
  CHECK(d.radius <= 1e-9);
  CHECK(oracle::chain_distance(m, 0, 2, 0.5) == doctest::Approx(closed).epsilon(1e-9));
}

TEST_CASE("random chains agree with the value-iteration oracle") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 15; ++trial) {
    auto m = random_chain(rng, 3);
    auto nodes = build(m);
    for (Grade c : {Grade::ratio(1, 2), Grade::ratio(3, 4)}) {
      double ref = oracle::chain_distance(m, 0, 1, c.to_double());
      auto beh = behavioralDistance(nodes[0], nodes[1], c, 1e-10);
      auto bis = bisimilarityDistance(nodes[0], nodes[1], c, 1e-10);
      CHECK(beh.value == doctest::Approx(ref).epsilon(1e-6));
      CHECK(bis.value == doctest::Approx(ref).epsilon(1e-6));
    }
  }
}

TEST_CASE("non-contracting recursion is refused") {
  oracle::Chain m{{0, 0}, {{1, 0}, {0, 1}}};
  auto nodes = build(m);
  CHECK_THROWS(behavioralDistance(nodes[0], nodes[1], Grade(1), 1e-9));
}

TEST_CASE("unfolding") {
  oracle::Chain m{{0, 1}, {{0.5, 0.5}, {0, 1}}};
  auto nodes = build(m);
  auto u0 = unfoldProcess(nodes[0], 0);
  CHECK(u0.tree.label == "a");
  CHECK(u0.tree.children.empty());
  auto u2 = unfoldProcess(nodes[0], 2);
  CHECK(u2.tree.children.size() == 2);
  CHECK(u2.residual > 0);
}

TEST_CASE("processes from terms") {
  auto p = parse_program(R"(labels L = {a, b};
def coins : Proc(L,1/2) * Proc(L,1/2) = fix x. <fold(a, delta(pi1(x)) (+ 1/2) delta(pi2(x))), fold(b, delta(pi1(x)) (+ 1/2) delta(pi2(x)))>;
)");
  auto d = p.find("coins");
  auto v = eval_closed(d->body, d->type);
  REQUIRE(v.value->kind == VKind::Pair);
  auto hd = v.value->a->proc, tl = v.value->b->proc;
  CHECK(behavioralDistance(hd, tl, Grade::ratio(1, 2), 1e-9).value == 1.0);
  CHECK(behavioralDistance(hd, hd, Grade::ratio(1, 2), 1e-9).value == 0.0);
}

}
