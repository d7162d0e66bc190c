#include "qlog/suite.hpp"
#include "qlog/syntax.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace qlog;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("syntax") {

TEST_CASE("context addition and scaling") {
  auto nat = Type::nat();
  TypeCtx one{{"x", Grade(1), nat}}, two{{"x", Grade(2), nat}};
  auto sum = ctxAdd(one, two);
  REQUIRE(sum.size() == 1);
  CHECK(sum[0].grade == Grade(3));
  TypeCtx xy{{"x", Grade(1), nat}, {"y", Grade(2), nat}}, yx{{"y", Grade(2), nat}, {"x", Grade(1), nat}};
  CHECK_THROWS_AS(ctxAdd(xy, yx), ContextError);
  CHECK(print_ctx(ctxAdd(xy, ctxScale(Grade(0), xy))) == print_ctx(xy));
  CHECK(print_ctx(ctxScale(Grade(1), xy)) == print_ctx(xy));
  TypeCtx half{{"x", Grade::ratio(1, 2), nat}};
  CHECK(ctxScale(Grade(2), half)[0].grade == Grade(1));
  TypeCtx zero{{"x", Grade(0), nat}};
  CHECK(ctxScale(Grade::infinity(), zero)[0].grade.is_zero());
}

TEST_CASE("IB algebra types") {
  CHECK(isIBAlgebraType(Type::dist(Type::nat())));
  CHECK(isIBAlgebraType(Type::prop()));
  CHECK(!isIBAlgebraType(Type::nat()));
}

TEST_CASE("parse and print geo") {
  auto t = parse_term("fix x. delta(zero) (+ 1/2) map(succ, x)");
  CHECK(t->kind == TermKind::Fix);
  CHECK(t->kid(0)->kind == TermKind::Convex);
  CHECK(alpha_equal(parse_term(print_term(t)), t));
  CHECK_THROWS_AS(parse_term(""), ParseError);
  CHECK_THROWS_AS(parse_term("fix x."), ParseError);
  CHECK_THROWS_AS(parse_type("D("), ParseError);
}

TEST_CASE("numerals and substitution") {
  CHECK(as_numeral(numeral(4)) == 4u);
  auto lam = parse_term("\\y : Nat. x");
  auto s = subst(lam, "x", mk_var("y"));
  CHECK(free_vars(s) == std::set<std::string>{"y"});
  CHECK(!alpha_equal(s, parse_term("\\y : Nat. y")));
  CHECK(alpha_equal(parse_term("\\a : Nat. a"), parse_term("\\b : Nat. b")));
}

TEST_CASE("corpus round-trips through the printer") {
  auto files = corpus_files(QLOG_CORPUS_DIR, ".qlog");
  REQUIRE(files.size() >= 5);
  for (const auto& f : files) {
    CAPTURE(f);
    auto p = parse_program(slurp(f));
    auto printed = print_program(p);
    CHECK(print_program(parse_program(printed)) == printed);
  }
}

TEST_CASE("judgment syntax") {
  auto j = parse_judgment("[x : Nat, y : Nat] [1/2](x == y) |- [1/2](y == x)");
  CHECK(j.delta.size() == 2);
  CHECK(j.psi.size() == 1);
  CHECK(j.phi->kind == TermKind::Scale);
  CHECK(parse_judgment(print_judgment(j)).psi.size() == 1);
}

}
