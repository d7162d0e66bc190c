#include "qlog/typecheck.hpp"

#include <doctest.h>

using namespace qlog;

namespace {

Grade usage_of(const Usage& u, const std::string& x) {
  auto it = u.find(x);
  return it == u.end() ? Grade(0) : it->second;
}

}  // namespace

TEST_SUITE("typecheck") {

TEST_CASE("variable usage") {
  auto s = synthesize({{"x", Type::nat()}}, parse_term("x"));
  CHECK(type_equal(s.type, Type::nat()));
  CHECK(usage_of(s.usage, "x") == Grade(1));
}

TEST_CASE("geo body uses x with sensitivity 1 - p") {
  TypeEnv env{{"x", parse_type("D(Nat)")}};
  for (auto [p, rest] : {std::pair{"1/2", Grade::ratio(1, 2)}, {"1/3", Grade::ratio(2, 3)},
                         {"3/4", Grade::ratio(1, 4)}}) {
    auto s = synthesize(env, parse_term(std::string("delta(zero) (+ ") + p + ") map(succ, x)"));
    CHECK(usage_of(s.usage, "x") == rest);
  }
}

TEST_CASE("geo is well typed in the empty context") {
  auto r = check({}, parse_term("fix x. delta(zero) (+ 1/2) map(succ, x)"), parse_type("D(Nat)"));
  CHECK(r.ok);
  CHECK(r.usage.empty());
}

TEST_CASE("non-contractive recursion is rejected") {
  auto r = check({}, parse_term("fix x. x"), Type::nat());
  REQUIRE(!r.ok);
  CHECK(r.error->rule == "fix");
}

TEST_CASE("grade below usage is rejected") {
  auto r = check({{"x", Grade::ratio(1, 2), Type::nat()}}, parse_term("x"), Type::nat());
  REQUIRE(!r.ok);
  CHECK(r.error->rule == "var");
  CHECK(check({{"x", Grade(1), Type::nat()}}, parse_term("x"), Type::nat()).ok);
}

TEST_CASE("markov process under z") {
  auto p = parse_program(R"(labels L = {a, b};
def m [z : Proc(L,1)] : Proc(L,1) = fix m. fold(a, delta(m) (+ 1/3) delta(z));
)");
  auto reports = check_program(p);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].result.ok);
}

TEST_CASE("predicates") {
  TypeCtx dl{{"mu", Grade::infinity(), parse_type("D(Nat)")}, {"nu", Grade::infinity(), parse_type("D(Nat)")}};
  CHECK(checkPredicate(dl, parse_term("kant(mu, nu)")).ok);
  auto zero = checkPredicate({}, parse_term("[0] tt"));
  REQUIRE(!zero.ok);
  CHECK(zero.error->rule == "scale");
  TypeCtx x{{"x", Grade::infinity(), Type::nat()}};
  CHECK(checkPredicate(x, parse_term("x == x")).ok);
}

TEST_CASE("linear misuse") {
  auto r = check({{"x", Grade(1), Type::nat()}}, parse_term("(x, x)[1,1]"),
                 parse_type("Nat (x)[1,1] Nat"));
  CHECK(!r.ok);
  auto ok = check({{"x", Grade(2), Type::nat()}}, parse_term("(x, x)[1,1]"),
                  parse_type("Nat (x)[1,1] Nat"));
  CHECK(ok.ok);
}

TEST_CASE("error reports carry a position") {
  auto r = check({}, parse_term("fix x. x"), Type::nat());
  REQUIRE(r.error);
  CHECK(r.error->span.line >= 1);
  CHECK(r.error->text().find("fix") != std::string::npos);
}

}
