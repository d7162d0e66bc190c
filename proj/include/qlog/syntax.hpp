#pragma once

#include "qlog/quantale.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace qlog {

struct Span {
  int line = 0;
  int col = 0;
  std::string str() const { return std::to_string(line) + ":" + std::to_string(col); }
};

// ---------------------------------------------------------------- types

enum class TypeKind { Nat, Unit, Prod, Sum, Tensor, Lolli, Dist, Prop, Proc, Label };

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct Type {
  TypeKind kind = TypeKind::Unit;
  TypePtr a, b;                     // components; Proc stores its label type in a
  Grade r{1}, s{1};                 // tensor r,s; lolli r; proc discount r
  std::string name;                 // alphabet name
  std::vector<std::string> labels;  // alphabet members

  static TypePtr nat();
  static TypePtr unit();
  static TypePtr prop();
  static TypePtr boolean();  // Unit + Unit
  static TypePtr prod(TypePtr a, TypePtr b);
  static TypePtr sum(TypePtr a, TypePtr b);
  static TypePtr tensor(TypePtr a, Grade r, Grade s, TypePtr b);
  static TypePtr lolli(TypePtr a, Grade r, TypePtr b);
  static TypePtr dist(TypePtr a);
  static TypePtr proc(TypePtr label, Grade c);
  static TypePtr label(std::string name, std::vector<std::string> labels);
};

bool type_equal(const TypePtr& x, const TypePtr& y);
std::string print_type(const TypePtr& t);
bool isIBAlgebraType(const TypePtr& t);

// ---------------------------------------------------------------- terms

enum class TermKind {
  Var, Lam, App, UnitV, Pair, Proj, Inj, Case, TPair, LetTensor, Dirac, Convex, LetDist,
  Zero, Succ, Rec, Fix, Label, Fold, Unfold, Ann,
  Tt, Ff, Eq, Star, Wand, Scale, Not, And, Or, Exists, Forall
};

const char* term_kind_name(TermKind k);

struct Term;
using TermPtr = std::shared_ptr<const Term>;

/// Uniform AST node. Child layout per kind:
///   Lam: body (binder x);  App: fun, arg;  Pair/TPair/Eq/Star/Wand/And/Or: left, right
///   Proj/Inj/Dirac/Succ/Unfold/Not/Scale/Ann: operand
///   Case: scrutinee, left branch (binder x), right branch (binder y)
///   LetTensor: bound, body (binders x, y);  LetDist: bound, body (binder x)
///   Convex: left, right (weight r = p);  Rec: zero case, step (binders x, y), count
///   Fix: body (binder x);  Fold: label, continuation;  Exists/Forall: body (binder x)
struct Term {
  TermKind kind = TermKind::UnitV;
  Span span;
  std::string x, y;
  std::vector<TermPtr> kids;
  std::optional<Grade> r, s;
  TypePtr ty;     // annotation: binder / sum / product / tensor / fix / eq / proc type
  int index = 0;  // projection / injection index; label ordinal
  std::string label;

  const TermPtr& kid(std::size_t i) const { return kids.at(i); }
};

TermPtr mk(TermKind k, std::vector<TermPtr> kids = {}, Span span = {});
TermPtr mk_var(const std::string& x, Span span = {});
TermPtr with_kids(const TermPtr& t, std::vector<TermPtr> kids);

std::string print_term(const TermPtr& t);
std::set<std::string> free_vars(const TermPtr& t);
// Capture-avoiding substitution t[u/x].
TermPtr subst(const TermPtr& t, const std::string& x, const TermPtr& u);
bool alpha_equal(const TermPtr& a, const TermPtr& b);
std::string fresh_name(const std::string& base, const std::set<std::string>& avoid);
std::size_t term_size(const TermPtr& t);

// Numeral n as succ^n(zero).
TermPtr numeral(unsigned long long n);
std::optional<unsigned long long> as_numeral(const TermPtr& t);

// ---------------------------------------------------------------- contexts

struct Binding {
  std::string name;
  Grade grade;
  TypePtr type;
};

using TypeCtx = std::vector<Binding>;

class ContextError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

TypeCtx ctxAdd(const TypeCtx& g1, const TypeCtx& g2);
TypeCtx ctxScale(const Grade& r, const TypeCtx& g);
std::string print_ctx(const TypeCtx& g);

// ---------------------------------------------------------------- parsing

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& msg, Span span)
      : std::runtime_error(span.str() + ": " + msg), span(span), message(msg) {}
  Span span;
  std::string message;
};

struct Definition {
  std::string name;
  TypeCtx ctx;
  TypePtr type;  // may be null
  TermPtr body;
  Span span;
};

struct LogicJudgment {
  TypeCtx delta;  // all grades inf
  std::vector<TermPtr> psi;
  TermPtr phi;
};

struct JudgmentDecl {
  std::string name;
  LogicJudgment judgment;
  Span span;
};

struct Program {
  std::map<std::string, TypePtr> alphabets;
  std::vector<std::string> alphabet_order;
  std::vector<Definition> defs;
  std::vector<JudgmentDecl> judgments;

  const Definition* find(const std::string& name) const;
};

Program parse_program(const std::string& text);
// Parses a single term / type / judgment, resolving names against an optional program.
TermPtr parse_term(const std::string& text, const Program* env = nullptr);
TypePtr parse_type(const std::string& text, const Program* env = nullptr);
LogicJudgment parse_judgment(const std::string& text, const Program* env = nullptr);

std::string print_program(const Program& p);
std::string print_judgment(const LogicJudgment& j);

}  // namespace qlog
