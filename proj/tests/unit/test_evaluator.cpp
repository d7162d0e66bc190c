#include "qlog/evaluator.hpp"
#include "qlog/typecheck.hpp"

#include <doctest.h>

#include <cmath>

using namespace qlog;

namespace {

DistV nat_dist(std::vector<std::pair<unsigned long long, double>> w) {
  std::vector<DistV::Atom> atoms;
  for (auto [k, p] : w) atoms.push_back({v_nat(k), p});
  return DistV::from_atoms(atoms);
}

}  // namespace

TEST_SUITE("evaluator") {

TEST_CASE("beta reduction is exact") {
  auto r = eval_closed(parse_term("(\\x : Nat. x) succ(succ(zero))"));
  CHECK(value_equal(r.value, v_nat(2)));
  CHECK(r.radius == 0.0);
}

TEST_CASE("rec on a numeral") {
  // addition by recursion on the count
  auto r = eval_closed(parse_term("rec(succ(succ(zero)), x y. succ(x), succ(succ(succ(zero))))"));
  CHECK(value_equal(r.value, v_nat(5)));
}

TEST_CASE("geo at fuel 30") {
  EvalOptions opt;
  opt.fuel = 30;
  opt.tol = 0;
  auto r = eval_closed(parse_term("fix x. delta(zero) (+ 1/2) map(succ, x)"), parse_type("D(Nat)"), opt);
  REQUIRE(r.value->kind == VKind::Dist);
  const DistV& d = *r.value->dist;
  for (unsigned k = 0; k < 30; ++k) CHECK(d.weight(v_nat(k)) == std::ldexp(1.0, -int(k) - 1));
  CHECK(d.weight(v_nat(30)) == 0.0);
  CHECK(d.residual() == std::ldexp(1.0, -30));
}

TEST_CASE("constant fixed point converges at once") {
  int calls = 0;
  auto f = [&](const Approx&) {
    ++calls;
    return Approx{v_nat(7), 0};
  };
  auto r = fixEval(f, Grade::ratio(1, 2), Type::nat(), 30, 0);
  CHECK(value_equal(r.value, v_nat(7)));
  CHECK(r.radius == 0.0);
  CHECK(calls <= 2);
}

TEST_CASE("canonical seeds") {
  CHECK(value_equal(canonicalSeed(Type::nat()), v_nat(0)));
  auto d = canonicalSeed(parse_type("D(Nat)"));
  REQUIRE(d->kind == VKind::Dist);
  auto p = canonicalSeed(parse_type("Nat * Prop"));
  REQUIRE(p->kind == VKind::Pair);
  CHECK(value_equal(p->a, v_nat(0)));
  CHECK(p->b->prop == 0.0);
}

TEST_CASE("distances at base types") {
  CHECK(distanceAt(Type::nat(), v_nat(3), v_nat(3)).value == 0.0);
  CHECK(distanceAt(Type::nat(), v_nat(3), v_nat(4)).value == 1.0);
  auto mu = v_dist(nat_dist({{0, 0.5}, {1, 0.5}}));
  auto nu = v_dist(nat_dist({{0, 0.25}, {1, 0.75}}));
  CHECK(distanceAt(parse_type("D(Nat)"), mu, nu).value == doctest::Approx(0.25));
  CHECK(distanceAt(Type::prop(), v_prop(0.2), v_prop(0.7)).value == doctest::Approx(0.5));
}

TEST_CASE("tensor distance is the weighted sum") {
  auto t = parse_type("Nat (x)[1/2,1/4] Nat");
  auto a = v_tpair(v_nat(0), v_nat(0));
  auto b = v_tpair(v_nat(1), v_nat(1));
  CHECK(distanceAt(t, a, b).value == doctest::Approx(0.75));
}

TEST_CASE("enumeration spec") {
  auto spec = EnumSpec::from_json(nlohmann::json::parse(R"({"Nat": {"mode": "finite", "max": 2}})"));
  bool sampled = true;
  auto vs = enumerate_type(Type::nat(), &spec, &sampled);
  REQUIRE(vs);
  CHECK(vs->size() == 3);
  CHECK(!sampled);
  auto bools = enumerate_type(Type::boolean(), nullptr);
  REQUIRE(bools);
  CHECK(bools->size() == 2);
}

TEST_CASE("coupling infimum equals kantorovich under the discrete cost") {
  auto mu = nat_dist({{0, 0.5}, {1, 0.5}});
  auto nu = nat_dist({{0, 0.25}, {1, 0.75}});
  auto cost = [](const ValuePtr& x, const ValuePtr& y) { return value_equal(x, y) ? 0.0 : 1.0; };
  CHECK(coupling_infimum(mu, nu, cost) == doctest::Approx(0.25));
}

}
