#include "qlog/bundle.hpp"
#include "qlog/logic.hpp"

#include <doctest.h>

using namespace qlog;
using nlohmann::json;

namespace {

DistV nat_dist(std::vector<std::pair<unsigned long long, double>> w) {
  std::vector<DistV::Atom> atoms;
  for (auto [k, p] : w) atoms.push_back({v_nat(k), p});
  return DistV::from_atoms(atoms);
}

EnumSpec nat_upto(unsigned long long n) {
  EnumSpec spec;
  spec.entries["Nat"] = EnumEntry{true, n, {}, {}};
  return spec;
}

const char* kTransitivity = R"({
  "rule": "eq-e",
  "judgment": "[x : Nat, y : Nat, z : Nat] x == y, y == z |- x == z",
  "params": {"var": "w", "pred": "x == w"},
  "children": [
    {"rule": "ass", "judgment": "[x : Nat, y : Nat, z : Nat] x == y |- x == y"},
    {"rule": "ass", "judgment": "[x : Nat, y : Nat, z : Nat] y == z |- y == z"}]})";

}  // namespace

TEST_SUITE("logic") {

TEST_CASE("basic truth values") {
  CHECK(evalProp({}, nullptr, parse_term("tt")).value->prop == 0.0);
  CHECK(evalProp({}, nullptr, parse_term("ff")).value->prop == 1.0);
  CHECK(evalProp({}, nullptr, parse_term("[1/4] ff")).value->prop == doctest::Approx(0.25));
  CHECK(evalProp({}, nullptr, parse_term("succ(zero) == succ(zero)")).value->prop == 0.0);
  CHECK(evalProp({}, nullptr, parse_term("not(zero == succ(zero))")).value->prop == 0.0);
}

TEST_CASE("internal kantorovich") {
  TypeCtx dl{{"mu", Grade::infinity(), parse_type("D(Nat)")}, {"nu", Grade::infinity(), parse_type("D(Nat)")}};
  Env env = env_bind(env_bind(nullptr, "mu", {v_dist(nat_dist({{0, 0.5}, {1, 0.5}})), 0}), "nu",
                     {v_dist(nat_dist({{0, 0.25}, {1, 0.75}})), 0});
  CHECK(evalProp(dl, env, parse_term("kant(mu, nu)")).value->prop == doctest::Approx(0.25));
  CHECK(evalProp(dl, env, parse_term("mu == nu")).value->prop == doctest::Approx(0.25));
}

TEST_CASE("coupling values") {
  auto mu = nat_dist({{0, 0.5}, {1, 0.5}});
  auto nu = nat_dist({{0, 0.25}, {1, 0.75}});
  // product coupling: sum of mu(x) nu(y) [x != y] = 1/2 * 3/4 + 1/2 * 1/4
  std::vector<DistV::Atom> prod;
  for (const auto& a : mu.atoms())
    for (const auto& b : nu.atoms()) prod.push_back({v_pair(a.first, b.first), a.second * b.second});
  auto rel = parse_term("x == y", nullptr);
  auto v = couplingValue(rel, "x", "y", Type::nat(), Type::nat(), DistV::from_atoms(prod), mu, nu);
  CHECK(v.value->prop == doctest::Approx(0.5));
  std::vector<DistV::Atom> diag;
  for (const auto& a : mu.atoms()) diag.push_back({v_pair(a.first, a.first), a.second});
  auto d = couplingValue(rel, "x", "y", Type::nat(), Type::nat(), DistV::from_atoms(diag), mu, mu);
  CHECK(d.value->prop == doctest::Approx(0.0));
}

TEST_CASE("semantic check of valid judgments") {
  auto spec = nat_upto(2);
  auto j = parse_judgment("[x : Nat] x == x |- tt");
  auto rep = checkSemantic(j, sample_envs(j.delta, &spec));
  CHECK(rep.ok);
  for (const auto& m : rep.margins) CHECK(m.margin >= 0);
  auto tr = parse_judgment("[x : Nat, y : Nat, z : Nat] x == y, y == z |- x == z");
  auto envs = sample_envs(tr.delta, &spec);
  CHECK(envs.size() == 27);
  CHECK(checkSemantic(tr, envs).ok);
  auto cong = parse_judgment(
      "[x : D(Nat), y : D(Nat), z : D(Nat), w : D(Nat)] [1/3](x == y), [2/3](z == w) |- "
      "(x (+ 1/3) z) == (y (+ 1/3) w)");
  auto denv = sample_envs(cong.delta, &spec, 100, 5);
  CHECK(denv.size() >= 20);
  CHECK(checkSemantic(cong, denv).ok);
}

TEST_CASE("semantic check rejects an invalid judgment") {
  auto spec = nat_upto(2);
  auto j = parse_judgment("[x : Nat, y : Nat] |- x == y");
  auto rep = checkSemantic(j, sample_envs(j.delta, &spec));
  CHECK(!rep.ok);
}

TEST_CASE("judgmental normal form") {
  CHECK(judgmentally_equal(parse_term("let x = delta(zero) in delta(succ(x))"), parse_term("delta(succ(zero))")));
  CHECK(judgmentally_equal(parse_term("pi1(<zero, succ(zero)>)"), parse_term("zero")));
  CHECK(!judgmentally_equal(parse_term("zero"), parse_term("succ(zero)")));
}

TEST_CASE("transitivity derivation") {
  auto r = checkDerivation(json::parse(kTransitivity));
  CHECK(r.ok);
  CHECK(r.nodes == 3);
  CHECK(r.rules == std::set<std::string>{"eq-e", "ass"});
}

TEST_CASE("assumption needs no children") {
  CHECK(checkDerivation(json::parse(R"({"rule": "ass", "judgment": "[x : Nat] x == x |- x == x"})")).ok);
  auto bad = checkDerivation(json::parse(R"({"rule": "ass", "judgment": "[x : Nat] |- x == x"})"));
  CHECK(!bad.ok);
}

TEST_CASE("guarded recursion needs p < 1") {
  auto g = json::parse(R"({"rule": "g-rec", "judgment": "[x : Nat] |- x == x", "params": {"p": "1"},
    "children": [{"rule": "eq-i", "judgment": "[x : Nat] [1] (x == x) |- x == x"}]})");
  auto r = checkDerivation(g);
  REQUIRE(!r.ok);
  CHECK(r.violations[0].rule == "g-rec");
}

TEST_CASE("negative derivations") {
  // wrong conclusion for eq-e
  auto j = json::parse(kTransitivity);
  j["judgment"] = "[x : Nat, y : Nat, z : Nat] x == y, y == z |- z == x";
  CHECK(!checkDerivation(j).ok);
  // unknown rule
  CHECK(!checkDerivation(json::parse(R"({"rule": "magic", "judgment": "[x : Nat] |- tt"})")).ok);
  // child path is reported
  auto k = json::parse(kTransitivity);
  k["children"][1]["judgment"] = "[x : Nat, y : Nat, z : Nat] y == z |- z == y";
  auto r = checkDerivation(k);
  REQUIRE(!r.ok);
  bool child = false;
  for (const auto& v : r.violations) child |= v.path == "root/1";
  CHECK(child);
}

TEST_CASE("rule names resolve aliases") {
  CHECK(canonical_rule("eq-e") == std::string("eq-e"));
  CHECK(!canonical_rule("nonsense"));
  CHECK(rule_names().size() >= 32);
}

TEST_CASE("proof bundles from the corpus") {
  auto b = load_proof_bundle(std::string(QLOG_CORPUS_DIR) + "/transitivity.deriv.json");
  auto rep = checkProofBundle(b, true);
  CHECK(rep.ok);
  CHECK(rep.envs >= 20);
  CHECK_THROWS_AS(proof_bundle_from_json(json::parse("[1]"), "."), LogicError);
}

}
