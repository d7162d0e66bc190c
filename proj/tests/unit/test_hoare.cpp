#include "qlog/hoare.hpp"

#include <doctest.h>

#include <cmath>

using namespace qlog;
using namespace qlog::hoare;

namespace {

std::vector<std::pair<Store, Store>> diagonal(const Layout& l) {
  std::vector<std::pair<Store, Store>> out;
  for (const auto& s : l.universe()) out.push_back({s, s});
  return out;
}

}  // namespace

TEST_SUITE("hoare") {

TEST_CASE("expressions") {
  auto p = parse_program("var x : 0..3; x := 2");
  Store s = p.layout.zero();
  s[p.layout.at("x").offset] = 2;
  CHECK(evalExpr(p.layout, s, parse_expr("!x + 1 = 3")).b);
  CHECK(evalExpr(p.layout, s, parse_expr("!x = !x")).b);
  auto u = evalExpr(p.layout, s, parse_expr("unif 1"));
  CHECK(u.type == ExprType::Dist);
  CHECK(u.n == 1u);
}

TEST_CASE("sampling a uniform bit") {
  auto p = parse_program("var x : 0..1; sample x unif 1");
  auto r = evalCmd(p.layout, p.body, p.layout.zero());
  CHECK(r.dist.size() == 2);
  for (const auto& a : r.dist.atoms()) CHECK(a.second == doctest::Approx(0.5));
}

TEST_CASE("skip against skip") {
  auto p = parse_program("var l : 0..1; skip");
  auto tt = parse_pred("tt");
  auto r = tripleValue(p.layout, tt, p.body, p.body, tt, Lift::Eq, diagonal(p.layout));
  CHECK(r.value == 0.0);
}

TEST_CASE("divergence leaves residual mass") {
  auto p = parse_program("var l : 0..1; while true { skip }");
  EvalOpts opt;
  opt.max_iter = 50;
  auto r = evalCmd(p.layout, p.body, p.layout.zero(), opt);
  CHECK(r.dist.support_mass() == 0.0);
  CHECK(r.dist.residual() == doctest::Approx(1.0));
}

TEST_CASE("almost sure termination") {
  auto rows = asTerminationCheck(8);
  REQUIRE(rows.size() == 8);
  for (const auto& row : rows) {
    CAPTURE(row.n);
    CHECK(row.ok);
    CHECK(row.triple <= std::ldexp(1.0, -row.n) + 1e-12);
  }
}

TEST_CASE("type errors") {
  CHECK_THROWS(parse_program("var x : 0..1; x := true"));
  CHECK_THROWS(parse_program("x := 1"));
}

TEST_CASE("prp bounds") {
  CHECK(prp_eps(1, 4) == Rational(0));
  CHECK(prp_eps(3, 4) == Rational(3, 4));
  auto r = prpPrfCheck(2, 4, 2);
  CHECK(r.ok);
  CHECK(r.lp_matches_tv);
}

}
