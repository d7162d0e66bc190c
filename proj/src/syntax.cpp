#include "qlog/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace qlog {

// ---------------------------------------------------------------- types

namespace {
TypePtr make_type(TypeKind k, TypePtr a = nullptr, TypePtr b = nullptr) {
  auto t = std::make_shared<Type>();
  t->kind = k;
  t->a = std::move(a);
  t->b = std::move(b);
  return t;
}
}  // namespace

TypePtr Type::nat() {
  static TypePtr t = make_type(TypeKind::Nat);
  return t;
}
TypePtr Type::unit() {
  static TypePtr t = make_type(TypeKind::Unit);
  return t;
}
TypePtr Type::prop() {
  static TypePtr t = make_type(TypeKind::Prop);
  return t;
}
TypePtr Type::boolean() {
  static TypePtr t = sum(unit(), unit());
  return t;
}
TypePtr Type::prod(TypePtr a, TypePtr b) { return make_type(TypeKind::Prod, a, b); }
TypePtr Type::sum(TypePtr a, TypePtr b) { return make_type(TypeKind::Sum, a, b); }
TypePtr Type::tensor(TypePtr a, Grade r, Grade s, TypePtr b) {
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Tensor;
  t->a = std::move(a);
  t->b = std::move(b);
  t->r = std::move(r);
  t->s = std::move(s);
  return t;
}
TypePtr Type::lolli(TypePtr a, Grade r, TypePtr b) {
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Lolli;
  t->a = std::move(a);
  t->b = std::move(b);
  t->r = std::move(r);
  return t;
}
TypePtr Type::dist(TypePtr a) { return make_type(TypeKind::Dist, a); }
TypePtr Type::proc(TypePtr label, Grade c) {
  if (c.is_zero() || Grade(1) < c) throw std::invalid_argument("Proc discount must lie in (0,1]");
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Proc;
  t->a = std::move(label);
  t->r = std::move(c);
  return t;
}
TypePtr Type::label(std::string name, std::vector<std::string> labels) {
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Label;
  t->name = std::move(name);
  t->labels = std::move(labels);
  return t;
}

bool type_equal(const TypePtr& x, const TypePtr& y) {
  if (x == y) return true;
  if (!x || !y || x->kind != y->kind) return false;
  switch (x->kind) {
    case TypeKind::Nat:
    case TypeKind::Unit:
    case TypeKind::Prop:
      return true;
    case TypeKind::Prod:
    case TypeKind::Sum:
      return type_equal(x->a, y->a) && type_equal(x->b, y->b);
    case TypeKind::Tensor:
      return x->r == y->r && x->s == y->s && type_equal(x->a, y->a) && type_equal(x->b, y->b);
    case TypeKind::Lolli:
      return x->r == y->r && type_equal(x->a, y->a) && type_equal(x->b, y->b);
    case TypeKind::Dist:
      return type_equal(x->a, y->a);
    case TypeKind::Proc:
      return x->r == y->r && type_equal(x->a, y->a);
    case TypeKind::Label:
      return x->name == y->name && x->labels == y->labels;
  }
  return false;
}

namespace {
// 0: lolli, 1: sum, 2: product/tensor, 3: atom
int type_level(const TypePtr& t) {
  switch (t->kind) {
    case TypeKind::Lolli: return 0;
    case TypeKind::Sum: return 1;
    case TypeKind::Prod:
    case TypeKind::Tensor: return 2;
    default: return 3;
  }
}

void print_type_at(std::ostream& os, const TypePtr& t, int ctx) {
  bool paren = type_level(t) < ctx;
  if (paren) os << "(";
  switch (t->kind) {
    case TypeKind::Nat: os << "Nat"; break;
    case TypeKind::Unit: os << "Unit"; break;
    case TypeKind::Prop: os << "Prop"; break;
    case TypeKind::Label: os << t->name; break;
    case TypeKind::Dist:
      os << "D(";
      print_type_at(os, t->a, 0);
      os << ")";
      break;
    case TypeKind::Proc:
      os << "Proc(";
      print_type_at(os, t->a, 0);
      os << ", " << t->r.str() << ")";
      break;
    case TypeKind::Prod:
      print_type_at(os, t->a, 2);
      os << " * ";
      print_type_at(os, t->b, 3);
      break;
    case TypeKind::Tensor:
      print_type_at(os, t->a, 2);
      os << " (x)[" << t->r.str() << ", " << t->s.str() << "] ";
      print_type_at(os, t->b, 3);
      break;
    case TypeKind::Sum:
      print_type_at(os, t->a, 1);
      os << " + ";
      print_type_at(os, t->b, 2);
      break;
    case TypeKind::Lolli:
      print_type_at(os, t->a, 1);
      os << " -o[" << t->r.str() << "] ";
      print_type_at(os, t->b, 0);
      break;
  }
  if (paren) os << ")";
}
}  // namespace

std::string print_type(const TypePtr& t) {
  if (!t) return "?";
  std::ostringstream os;
  print_type_at(os, t, 0);
  return os.str();
}

bool isIBAlgebraType(const TypePtr& t) {
  if (!t) return false;
  switch (t->kind) {
    case TypeKind::Dist:
    case TypeKind::Prop:
      return true;
    case TypeKind::Tensor:
      return t->r <= Grade(1) && t->s <= Grade(1) && isIBAlgebraType(t->a) &&
             isIBAlgebraType(t->b);
    case TypeKind::Lolli:
      return isIBAlgebraType(t->b);
    default:
      return false;
  }
}

// ---------------------------------------------------------------- terms

const char* term_kind_name(TermKind k) {
  switch (k) {
    case TermKind::Var: return "var";
    case TermKind::Lam: return "abs";
    case TermKind::App: return "app";
    case TermKind::UnitV: return "unit";
    case TermKind::Pair: return "pair";
    case TermKind::Proj: return "proj";
    case TermKind::Inj: return "inj";
    case TermKind::Case: return "case";
    case TermKind::TPair: return "tensor";
    case TermKind::LetTensor: return "let-tensor";
    case TermKind::Dirac: return "delta";
    case TermKind::Convex: return "oplus";
    case TermKind::LetDist: return "let";
    case TermKind::Zero: return "zero";
    case TermKind::Succ: return "succ";
    case TermKind::Rec: return "rec";
    case TermKind::Fix: return "fix";
    case TermKind::Label: return "label";
    case TermKind::Fold: return "fld";
    case TermKind::Unfold: return "ufld";
    case TermKind::Ann: return "ann";
    case TermKind::Tt: return "tt";
    case TermKind::Ff: return "ff";
    case TermKind::Eq: return "eq";
    case TermKind::Star: return "star";
    case TermKind::Wand: return "wand";
    case TermKind::Scale: return "scale";
    case TermKind::Not: return "not";
    case TermKind::And: return "and";
    case TermKind::Or: return "or";
    case TermKind::Exists: return "exists";
    case TermKind::Forall: return "forall";
  }
  return "?";
}

TermPtr mk(TermKind k, std::vector<TermPtr> kids, Span span) {
  auto t = std::make_shared<Term>();
  t->kind = k;
  t->kids = std::move(kids);
  t->span = span;
  return t;
}

TermPtr mk_var(const std::string& x, Span span) {
  auto t = std::make_shared<Term>();
  t->kind = TermKind::Var;
  t->x = x;
  t->span = span;
  return t;
}

TermPtr with_kids(const TermPtr& t, std::vector<TermPtr> kids) {
  auto c = std::make_shared<Term>(*t);
  c->kids = std::move(kids);
  return c;
}

TermPtr numeral(unsigned long long n) {
  TermPtr t = mk(TermKind::Zero);
  for (unsigned long long i = 0; i < n; ++i) t = mk(TermKind::Succ, {t});
  return t;
}

std::optional<unsigned long long> as_numeral(const TermPtr& t) {
  unsigned long long n = 0;
  const Term* cur = t.get();
  while (cur->kind == TermKind::Succ) {
    ++n;
    cur = cur->kids[0].get();
  }
  if (cur->kind == TermKind::Zero) return n;
  return std::nullopt;
}

namespace {

// Which children bind which names.
std::vector<std::string> binders_of(const Term& t, std::size_t child) {
  switch (t.kind) {
    case TermKind::Lam:
    case TermKind::Fix:
    case TermKind::Exists:
    case TermKind::Forall:
      return {t.x};
    case TermKind::Case:
      if (child == 1) return {t.x};
      if (child == 2) return {t.y};
      return {};
    case TermKind::LetTensor:
      if (child == 1) return {t.x, t.y};
      return {};
    case TermKind::LetDist:
      if (child == 1) return {t.x};
      return {};
    case TermKind::Rec:
      if (child == 1) return {t.x, t.y};
      return {};
    default:
      return {};
  }
}

void collect_free(const TermPtr& t, std::multiset<std::string>& bound, std::set<std::string>& out) {
  if (t->kind == TermKind::Var) {
    if (!bound.count(t->x)) out.insert(t->x);
    return;
  }
  for (std::size_t i = 0; i < t->kids.size(); ++i) {
    auto bs = binders_of(*t, i);
    for (auto& b : bs) bound.insert(b);
    collect_free(t->kids[i], bound, out);
    for (auto& b : bs) bound.erase(bound.find(b));
  }
}

void collect_all_names(const TermPtr& t, std::set<std::string>& out) {
  if (!t->x.empty()) out.insert(t->x);
  if (!t->y.empty()) out.insert(t->y);
  for (auto& k : t->kids) collect_all_names(k, out);
}

}  // namespace

std::set<std::string> free_vars(const TermPtr& t) {
  std::multiset<std::string> bound;
  std::set<std::string> out;
  collect_free(t, bound, out);
  return out;
}

std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
  if (!avoid.count(base)) return base;
  std::string stem = base;
  while (!stem.empty() && std::isdigit(static_cast<unsigned char>(stem.back()))) stem.pop_back();
  for (int i = 1;; ++i) {
    std::string c = stem + std::to_string(i);
    if (!avoid.count(c)) return c;
  }
}

namespace {

TermPtr rename_binder(const TermPtr& t, std::size_t child_from, const std::string& from,
                      const std::string& to) {
  // Renames binder `from` to `to` in the children it scopes over.
  auto c = std::make_shared<Term>(*t);
  if (c->x == from) c->x = to;
  else if (c->y == from) c->y = to;
  for (std::size_t i = child_from; i < c->kids.size(); ++i) {
    auto bs = binders_of(*t, i);
    if (std::find(bs.begin(), bs.end(), from) != bs.end())
      c->kids[i] = subst(c->kids[i], from, mk_var(to));
  }
  return c;
}

TermPtr subst_impl(const TermPtr& t, const std::string& x, const TermPtr& u,
                   const std::set<std::string>& fv_u) {
  if (t->kind == TermKind::Var) return t->x == x ? u : t;
  TermPtr cur = t;
  std::vector<TermPtr> kids = cur->kids;
  bool changed = false;
  // Rename any binder that would capture a free variable of u.
  for (std::size_t i = 0; i < kids.size(); ++i) {
    auto bs = binders_of(*cur, i);
    for (const auto& b : bs) {
      if (b != x && fv_u.count(b)) {
        std::set<std::string> avoid = fv_u;
        collect_all_names(cur, avoid);
        avoid.insert(x);
        std::string nb = fresh_name(b, avoid);
        cur = rename_binder(cur, 0, b, nb);
        kids = cur->kids;
        changed = true;
      }
    }
  }
  for (std::size_t i = 0; i < kids.size(); ++i) {
    auto bs = binders_of(*cur, i);
    if (std::find(bs.begin(), bs.end(), x) != bs.end()) continue;  // shadowed
    TermPtr nk = subst_impl(kids[i], x, u, fv_u);
    if (nk != kids[i]) {
      kids[i] = nk;
      changed = true;
    }
  }
  if (!changed) return t;
  return with_kids(cur, std::move(kids));
}

bool alpha_impl(const TermPtr& a, const TermPtr& b, std::vector<std::pair<std::string, std::string>>& env) {
  if (a->kind != b->kind) return false;
  if (a->kind == TermKind::Var) {
    for (auto it = env.rbegin(); it != env.rend(); ++it) {
      bool ma = it->first == a->x, mb = it->second == b->x;
      if (ma || mb) return ma && mb;
    }
    return a->x == b->x;
  }
  if (a->kids.size() != b->kids.size()) return false;
  if (a->index != b->index || a->label != b->label) return false;
  if (a->kind == TermKind::Convex || a->kind == TermKind::Scale) {
    if (!a->r || !b->r || !(*a->r == *b->r)) return false;
  }
  if (a->kind == TermKind::Exists || a->kind == TermKind::Forall) {
    if (a->ty && b->ty && !type_equal(a->ty, b->ty)) return false;
  }
  for (std::size_t i = 0; i < a->kids.size(); ++i) {
    auto ba = binders_of(*a, i), bb = binders_of(*b, i);
    for (std::size_t k = 0; k < ba.size(); ++k) env.push_back({ba[k], bb[k]});
    bool ok = alpha_impl(a->kids[i], b->kids[i], env);
    for (std::size_t k = 0; k < ba.size(); ++k) env.pop_back();
    if (!ok) return false;
  }
  return true;
}

}  // namespace

TermPtr subst(const TermPtr& t, const std::string& x, const TermPtr& u) {
  return subst_impl(t, x, u, free_vars(u));
}

bool alpha_equal(const TermPtr& a, const TermPtr& b) {
  std::vector<std::pair<std::string, std::string>> env;
  return alpha_impl(a, b, env);
}

std::size_t term_size(const TermPtr& t) {
  std::size_t n = 1;
  for (auto& k : t->kids) n += term_size(k);
  return n;
}

// ---------------------------------------------------------------- printing

namespace {

int term_level(const Term& t) {
  switch (t.kind) {
    case TermKind::Lam:
    case TermKind::Fix:
    case TermKind::LetTensor:
    case TermKind::LetDist:
    case TermKind::Case:
    case TermKind::Exists:
    case TermKind::Forall:
      return 0;
    case TermKind::Wand: return 1;
    case TermKind::Or: return 2;
    case TermKind::And: return 3;
    case TermKind::Star: return 4;
    case TermKind::Eq: return 5;
    case TermKind::Convex: return 6;
    case TermKind::Scale:
    case TermKind::Not: return 7;
    case TermKind::App: return 8;
    default: return 9;
  }
}

void pt(std::ostream& os, const TermPtr& t, int ctx);

void binder_annot(std::ostream& os, const Term& t) {
  if (t.r || t.ty) {
    os << " :";
    if (t.r) os << "^" << t.r->str();
    if (t.ty) os << " " << print_type(t.ty);
  }
}

void pt(std::ostream& os, const TermPtr& tp, int ctx) {
  const Term& t = *tp;
  if (auto n = as_numeral(tp); n && t.kind == TermKind::Succ) {
    os << *n;
    return;
  }
  bool paren = term_level(t) < ctx;
  if (paren) os << "(";
  switch (t.kind) {
    case TermKind::Var: os << t.x; break;
    case TermKind::Label: os << t.label; break;
    case TermKind::UnitV: os << "()"; break;
    case TermKind::Zero: os << "zero"; break;
    case TermKind::Tt: os << "tt"; break;
    case TermKind::Ff: os << "ff"; break;
    case TermKind::Lam:
      os << "fun " << t.x;
      binder_annot(os, t);
      os << ". ";
      pt(os, t.kids[0], 0);
      break;
    case TermKind::Fix:
      os << "fix " << t.x;
      binder_annot(os, t);
      os << ". ";
      pt(os, t.kids[0], 0);
      break;
    case TermKind::App:
      pt(os, t.kids[0], 8);
      os << " ";
      pt(os, t.kids[1], 9);
      break;
    case TermKind::Pair:
      os << "<";
      pt(os, t.kids[0], 0);
      os << ", ";
      pt(os, t.kids[1], 0);
      os << ">";
      break;
    case TermKind::TPair:
      os << "(";
      pt(os, t.kids[0], 0);
      os << ", ";
      pt(os, t.kids[1], 0);
      os << ")";
      if (t.r && t.s) os << "[" << t.r->str() << ", " << t.s->str() << "]";
      break;
    case TermKind::Proj:
      os << "pi" << t.index;
      if (t.ty) os << "[" << print_type(t.ty) << "]";
      os << "(";
      pt(os, t.kids[0], 0);
      os << ")";
      break;
    case TermKind::Inj:
      os << "inj" << t.index;
      if (t.ty) os << "[" << print_type(t.ty) << "]";
      os << "(";
      pt(os, t.kids[0], 0);
      os << ")";
      break;
    case TermKind::Case:
      os << "case";
      if (t.r) os << "[" << t.r->str() << "]";
      os << " ";
      pt(os, t.kids[0], 1);
      os << " of inj1 " << t.x << " => ";
      pt(os, t.kids[1], 0);
      os << " | inj2 " << t.y << " => ";
      pt(os, t.kids[2], 0);
      break;
    case TermKind::LetTensor:
      os << "let (" << t.x << ", " << t.y << ") = ";
      pt(os, t.kids[0], 0);
      os << " in ";
      pt(os, t.kids[1], 0);
      break;
    case TermKind::LetDist:
      os << "let " << t.x;
      if (t.ty) os << " : " << print_type(t.ty);
      os << " = ";
      pt(os, t.kids[0], 0);
      os << " in ";
      pt(os, t.kids[1], 0);
      break;
    case TermKind::Dirac:
      os << "delta(";
      pt(os, t.kids[0], 0);
      os << ")";
      break;
    case TermKind::Convex:
      pt(os, t.kids[0], 7);
      os << " (+ " << t.r->str() << ") ";
      pt(os, t.kids[1], 6);
      break;
    case TermKind::Succ:
      os << "succ(";
      pt(os, t.kids[0], 0);
      os << ")";
      break;
    case TermKind::Rec:
      os << "rec(";
      pt(os, t.kids[0], 0);
      os << ", " << t.x << " " << t.y << ". ";
      pt(os, t.kids[1], 0);
      os << ", ";
      pt(os, t.kids[2], 0);
      os << ")";
      break;
    case TermKind::Fold:
      os << "fold";
      if (t.ty) os << "[" << print_type(t.ty) << "]";
      os << "(";
      pt(os, t.kids[0], 0);
      os << ", ";
      pt(os, t.kids[1], 0);
      os << ")";
      break;
    case TermKind::Unfold:
      os << "unfold(";
      pt(os, t.kids[0], 0);
      os << ")";
      break;
    case TermKind::Ann:
      os << "(";
      pt(os, t.kids[0], 0);
      os << " : " << print_type(t.ty) << ")";
      break;
    case TermKind::Eq:
      pt(os, t.kids[0], 6);
      os << " ==";
      if (t.ty) os << "_(" << print_type(t.ty) << ")";
      os << " ";
      pt(os, t.kids[1], 6);
      break;
    case TermKind::Star:
      pt(os, t.kids[0], 4);
      os << " * ";
      pt(os, t.kids[1], 5);
      break;
    case TermKind::Wand:
      pt(os, t.kids[0], 2);
      os << " -* ";
      pt(os, t.kids[1], 1);
      break;
    case TermKind::And:
      pt(os, t.kids[0], 3);
      os << " /\\ ";
      pt(os, t.kids[1], 4);
      break;
    case TermKind::Or:
      pt(os, t.kids[0], 2);
      os << " \\/ ";
      pt(os, t.kids[1], 3);
      break;
    case TermKind::Scale:
      os << "[" << t.r->str() << "] ";
      pt(os, t.kids[0], 7);
      break;
    case TermKind::Not:
      os << "not ";
      pt(os, t.kids[0], 7);
      break;
    case TermKind::Exists:
    case TermKind::Forall:
      os << (t.kind == TermKind::Exists ? "exists " : "forall ") << t.x;
      if (t.ty) os << " : " << print_type(t.ty);
      os << ". ";
      pt(os, t.kids[0], 0);
      break;
  }
  if (paren) os << ")";
}

}  // namespace

std::string print_term(const TermPtr& t) {
  std::ostringstream os;
  pt(os, t, 0);
  return os.str();
}

// ---------------------------------------------------------------- contexts

TypeCtx ctxAdd(const TypeCtx& g1, const TypeCtx& g2) {
  if (g1.size() != g2.size()) throw ContextError("contexts have different lengths");
  TypeCtx out;
  for (std::size_t i = 0; i < g1.size(); ++i) {
    if (g1[i].name != g2[i].name || !type_equal(g1[i].type, g2[i].type))
      throw ContextError("incompatible contexts at position " + std::to_string(i) + " (" +
                         g1[i].name + " vs " + g2[i].name + ")");
    out.push_back({g1[i].name, g1[i].grade + g2[i].grade, g1[i].type});
  }
  return out;
}

TypeCtx ctxScale(const Grade& r, const TypeCtx& g) {
  TypeCtx out = g;
  for (auto& b : out) b.grade = r * b.grade;
  return out;
}

std::string print_ctx(const TypeCtx& g) {
  std::string s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) s += ", ";
    s += g[i].name + " :^" + g[i].grade.str() + " " + print_type(g[i].type);
  }
  return s;
}

const Definition* Program::find(const std::string& name) const {
  for (auto it = defs.rbegin(); it != defs.rend(); ++it)
    if (it->name == name) return &*it;
  return nullptr;
}

// ---------------------------------------------------------------- lexer

namespace {

enum class Tok { Ident, Number, Sym, End };

struct Token {
  Tok kind;
  std::string text;
  Span span;
};

const std::set<std::string> kKeywords = {
    "fun", "fix", "let", "in", "case", "of", "inj1", "inj2", "pi1", "pi2", "delta", "zero",
    "succ", "rec", "fold", "unfold", "tt", "ff", "not", "exists", "forall", "if", "then",
    "else", "true", "false", "map", "kant", "coup", "def", "labels", "judgment", "inf",
    "Nat", "Unit", "Prop", "Bool", "D", "Proc"};

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto adv = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  static const std::vector<std::string> syms = {"-*", "-o", "/\\", "\\/", "==", "=>", "|-",
                                                "(",  ")",  "[",   "]",   "{",  "}",  "<",
                                                ">",  ",",  ".",   ":",   ";",  "^",  "=",
                                                "|",  "+",  "*",   "/",   "\\", "_",  "~"};
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      adv(1);
      continue;
    }
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      while (i < src.size() && src[i] != '\n') adv(1);
      continue;
    }
    Span sp{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) ||
        (c == '_' && i + 1 < src.size() && std::isalnum(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' ||
                                src[j] == '\''))
        ++j;
      out.push_back({Tok::Ident, src.substr(i, j - i), sp});
      adv(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      out.push_back({Tok::Number, src.substr(i, j - i), sp});
      adv(j - i);
      continue;
    }
    bool matched = false;
    for (const auto& s : syms) {
      if (src.compare(i, s.size(), s) == 0) {
        out.push_back({Tok::Sym, s, sp});
        adv(s.size());
        matched = true;
        break;
      }
    }
    if (!matched) throw ParseError(std::string("unexpected character '") + c + "'", sp);
  }
  out.push_back({Tok::End, "", Span{line, col}});
  return out;
}

// ---------------------------------------------------------------- parser

class Parser {
public:
  Parser(const std::string& src, Program* prog) : toks_(lex(src)), prog_(prog) {}

  Program parse_file() {
    if (peek().kind == Tok::End) throw ParseError("empty input", peek().span);
    while (peek().kind != Tok::End) {
      if (is_kw("labels")) parse_labels();
      else if (is_kw("def")) parse_def();
      else if (is_kw("judgment")) parse_judgment_decl();
      else throw ParseError("expected 'labels', 'def' or 'judgment'", peek().span);
    }
    return *prog_;
  }

  TermPtr parse_single_term() {
    if (peek().kind == Tok::End) throw ParseError("empty input", peek().span);
    TermPtr t = term();
    expect_end();
    return t;
  }
  TypePtr parse_single_type() {
    if (peek().kind == Tok::End) throw ParseError("empty input", peek().span);
    TypePtr t = type();
    expect_end();
    return t;
  }
  LogicJudgment parse_single_judgment() {
    if (peek().kind == Tok::End) throw ParseError("empty input", peek().span);
    LogicJudgment j = judgment();
    expect_end();
    return j;
  }

private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool is_sym(const std::string& s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Sym && peek(k).text == s;
  }
  bool is_kw(const std::string& s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Ident && peek(k).text == s;
  }
  void expect_sym(const std::string& s) {
    if (!is_sym(s)) throw ParseError("expected '" + s + "' but found '" + describe(peek()) + "'", peek().span);
    next();
  }
  void expect_kw(const std::string& s) {
    if (!is_kw(s)) throw ParseError("expected '" + s + "' but found '" + describe(peek()) + "'", peek().span);
    next();
  }
  void expect_end() {
    if (peek().kind != Tok::End) throw ParseError("unexpected trailing '" + describe(peek()) + "'", peek().span);
  }
  static std::string describe(const Token& t) { return t.kind == Tok::End ? "end of input" : t.text; }

  std::string ident() {
    if (peek().kind != Tok::Ident || kKeywords.count(peek().text))
      throw ParseError("expected identifier but found '" + describe(peek()) + "'", peek().span);
    return next().text;
  }

  Grade grade() {
    Span sp = peek().span;
    if (is_kw("inf")) {
      next();
      return Grade::infinity();
    }
    if (peek().kind != Tok::Number) throw ParseError("expected a grade", sp);
    std::string text = next().text;
    if (is_sym("/") && peek(1).kind == Tok::Number) {
      next();
      text += "/" + next().text;
    }
    try {
      return Grade::parse(text);
    } catch (const std::exception& e) {
      throw ParseError(e.what(), sp);
    }
  }

  // ------------------------------------------------------------ declarations

  void parse_labels() {
    expect_kw("labels");
    Span sp = peek().span;
    std::string name = ident();
    expect_sym("=");
    expect_sym("{");
    std::vector<std::string> ls;
    ls.push_back(ident());
    while (is_sym(",")) {
      next();
      ls.push_back(ident());
    }
    expect_sym("}");
    expect_sym(";");
    if (prog_->alphabets.count(name)) throw ParseError("alphabet '" + name + "' redeclared", sp);
    for (const auto& [an, at] : prog_->alphabets)
      for (const auto& l : ls)
        if (std::find(at->labels.begin(), at->labels.end(), l) != at->labels.end())
          throw ParseError("label '" + l + "' already belongs to alphabet '" + an + "'", sp);
    prog_->alphabets[name] = Type::label(name, ls);
    prog_->alphabet_order.push_back(name);
  }

  TypeCtx context(const Grade& default_grade) {
    TypeCtx ctx;
    expect_sym("[");
    if (!is_sym("]")) {
      for (;;) {
        Binding b;
        b.name = ident();
        expect_sym(":");
        b.grade = default_grade;
        if (is_sym("^")) {
          next();
          b.grade = grade();
        }
        b.type = type();
        for (const auto& o : ctx)
          if (o.name == b.name) throw ParseError("duplicate context variable '" + b.name + "'", peek().span);
        ctx.push_back(b);
        if (!is_sym(",")) break;
        next();
      }
    }
    expect_sym("]");
    return ctx;
  }

  void parse_def() {
    expect_kw("def");
    Definition d;
    d.span = peek().span;
    d.name = ident();
    if (is_sym("[")) d.ctx = context(Grade(1));
    if (is_sym(":")) {
      next();
      d.type = type();
    }
    expect_sym("=");
    scope_.clear();
    for (const auto& b : d.ctx) scope_.push_back(b.name);
    d.body = term();
    scope_.clear();
    expect_sym(";");
    prog_->defs.push_back(d);
  }

  LogicJudgment judgment() {
    LogicJudgment j;
    j.delta = context(Grade::infinity());
    for (const auto& b : j.delta)
      if (!b.grade.is_infinite()) throw ParseError("logical contexts are discrete (grade inf)", peek().span);
    scope_.clear();
    for (const auto& b : j.delta) scope_.push_back(b.name);
    if (!is_sym("|-")) {
      j.psi.push_back(term());
      while (is_sym(",")) {
        next();
        j.psi.push_back(term());
      }
    }
    expect_sym("|-");
    j.phi = term();
    scope_.clear();
    return j;
  }

  void parse_judgment_decl() {
    expect_kw("judgment");
    JudgmentDecl d;
    d.span = peek().span;
    d.name = ident();
    d.judgment = judgment();
    expect_sym(";");
    prog_->judgments.push_back(d);
  }

  // ------------------------------------------------------------ types

  TypePtr type() {
    TypePtr a = type_sum();
    if (is_sym("-o")) {
      next();
      Grade r(1);
      if (is_sym("[")) {
        next();
        r = grade();
        expect_sym("]");
      }
      return Type::lolli(a, r, type());
    }
    return a;
  }

  TypePtr type_sum() {
    TypePtr a = type_prod();
    while (is_sym("+")) {
      next();
      a = Type::sum(a, type_prod());
    }
    return a;
  }

  bool at_tensor_op() const { return is_sym("(") && is_kw("x", 1) && is_sym(")", 2); }

  TypePtr type_prod() {
    TypePtr a = type_atom();
    for (;;) {
      if (is_sym("*")) {
        next();
        a = Type::prod(a, type_atom());
      } else if (at_tensor_op()) {
        next();
        next();
        next();
        Grade r(1), s(1);
        if (is_sym("[")) {
          next();
          r = grade();
          expect_sym(",");
          s = grade();
          expect_sym("]");
        }
        a = Type::tensor(a, r, s, type_atom());
      } else {
        return a;
      }
    }
  }

  TypePtr type_atom() {
    Span sp = peek().span;
    if (is_kw("Nat")) return next(), Type::nat();
    if (is_kw("Unit")) return next(), Type::unit();
    if (is_kw("Prop")) return next(), Type::prop();
    if (is_kw("Bool")) return next(), Type::boolean();
    if (is_kw("D")) {
      next();
      expect_sym("(");
      TypePtr a = type();
      expect_sym(")");
      return Type::dist(a);
    }
    if (is_kw("Proc")) {
      next();
      expect_sym("(");
      TypePtr l = type();
      expect_sym(",");
      Grade c = grade();
      expect_sym(")");
      try {
        return Type::proc(l, c);
      } catch (const std::exception& e) {
        throw ParseError(e.what(), sp);
      }
    }
    if (is_sym("(")) {
      next();
      TypePtr a = type();
      expect_sym(")");
      return a;
    }
    if (peek().kind == Tok::Ident && !kKeywords.count(peek().text)) {
      std::string n = next().text;
      auto it = prog_->alphabets.find(n);
      if (it == prog_->alphabets.end()) throw ParseError("unknown type '" + n + "'", sp);
      return it->second;
    }
    throw ParseError("expected a type but found '" + describe(peek()) + "'", sp);
  }

  // ------------------------------------------------------------ terms

  bool bound(const std::string& x) const {
    return std::find(scope_.begin(), scope_.end(), x) != scope_.end();
  }

  template <class F>
  TermPtr under(const std::vector<std::string>& names, F&& f) {
    for (const auto& n : names) scope_.push_back(n);
    TermPtr t = f();
    for (std::size_t i = 0; i < names.size(); ++i) scope_.pop_back();
    return t;
  }

  std::shared_ptr<Term> node(TermKind k, Span sp) {
    auto t = std::make_shared<Term>();
    t->kind = k;
    t->span = sp;
    return t;
  }

  std::string fresh(const std::string& base) { return "_" + base + std::to_string(++fresh_counter_); }

  TermPtr term() {
    Span sp = peek().span;
    if (is_kw("fun") || is_sym("\\")) {
      next();
      auto t = node(TermKind::Lam, sp);
      t->x = ident();
      binder_annotation(*t);
      expect_sym(".");
      t->kids = {under({t->x}, [&] { return term(); })};
      return t;
    }
    if (is_kw("fix")) {
      next();
      auto t = node(TermKind::Fix, sp);
      t->x = ident();
      binder_annotation(*t);
      expect_sym(".");
      t->kids = {under({t->x}, [&] { return term(); })};
      return t;
    }
    if (is_kw("let")) {
      next();
      if (is_sym("(")) {
        next();
        auto t = node(TermKind::LetTensor, sp);
        t->x = ident();
        expect_sym(",");
        t->y = ident();
        expect_sym(")");
        expect_sym("=");
        TermPtr u = term();
        expect_kw("in");
        t->kids = {u, under({t->x, t->y}, [&] { return term(); })};
        return t;
      }
      auto t = node(TermKind::LetDist, sp);
      t->x = ident();
      if (is_sym(":")) {
        next();
        t->ty = type();
      }
      expect_sym("=");
      TermPtr u = term();
      expect_kw("in");
      t->kids = {u, under({t->x}, [&] { return term(); })};
      return t;
    }
    if (is_kw("case")) {
      next();
      auto t = node(TermKind::Case, sp);
      if (is_sym("[")) {
        next();
        t->r = grade();
        expect_sym("]");
      }
      TermPtr scrut = term();
      expect_kw("of");
      expect_kw("inj1");
      t->x = ident();
      expect_sym("=>");
      TermPtr l = under({t->x}, [&] { return term(); });
      expect_sym("|");
      expect_kw("inj2");
      t->y = ident();
      expect_sym("=>");
      TermPtr r = under({t->y}, [&] { return term(); });
      t->kids = {scrut, l, r};
      return t;
    }
    if (is_kw("if")) {
      next();
      auto t = node(TermKind::Case, sp);
      TermPtr c = term();
      expect_kw("then");
      TermPtr a = term();
      expect_kw("else");
      TermPtr b = term();
      std::set<std::string> avoid = free_vars(a);
      for (auto& v : free_vars(b)) avoid.insert(v);
      t->x = fresh_name("_u", avoid);
      t->y = t->x;
      t->kids = {c, a, b};
      return t;
    }
    if (is_kw("exists") || is_kw("forall")) {
      bool ex = is_kw("exists");
      next();
      auto t = node(ex ? TermKind::Exists : TermKind::Forall, sp);
      t->x = ident();
      if (is_sym(":")) {
        next();
        t->ty = type();
      }
      expect_sym(".");
      t->kids = {under({t->x}, [&] { return term(); })};
      return t;
    }
    return wand_level();
  }

  void binder_annotation(Term& t) {
    if (!is_sym(":")) return;
    next();
    if (is_sym("^")) {
      next();
      t.r = grade();
    }
    if (!is_sym(".")) t.ty = type();
  }

  TermPtr binary(TermKind k, TermPtr a, TermPtr b, Span sp) {
    auto t = node(k, sp);
    t->kids = {std::move(a), std::move(b)};
    return t;
  }

  bool binder_ahead() const {
    return is_kw("fun") || is_sym("\\") || is_kw("fix") || is_kw("let") || is_kw("case") ||
           is_kw("if") || is_kw("exists") || is_kw("forall");
  }

  TermPtr wand_level() {
    Span sp = peek().span;
    TermPtr a = or_level();
    if (is_sym("-*")) {
      next();
      return binary(TermKind::Wand, a, binder_ahead() ? term() : wand_level(), sp);
    }
    return a;
  }

  TermPtr or_level() {
    Span sp = peek().span;
    TermPtr a = and_level();
    while (is_sym("\\/")) {
      next();
      a = binary(TermKind::Or, a, binder_ahead() ? term() : and_level(), sp);
    }
    return a;
  }

  TermPtr and_level() {
    Span sp = peek().span;
    TermPtr a = star_level();
    while (is_sym("/\\")) {
      next();
      a = binary(TermKind::And, a, binder_ahead() ? term() : star_level(), sp);
    }
    return a;
  }

  TermPtr star_level() {
    Span sp = peek().span;
    TermPtr a = eq_level();
    while (is_sym("*")) {
      next();
      a = binary(TermKind::Star, a, binder_ahead() ? term() : eq_level(), sp);
    }
    return a;
  }

  TermPtr eq_level() {
    Span sp = peek().span;
    TermPtr a = convex_level();
    if (is_sym("==")) {
      next();
      auto t = node(TermKind::Eq, sp);
      if (is_sym("_")) {
        next();
        t->ty = type_atom();
      }
      t->kids = {a, binder_ahead() ? term() : convex_level()};
      return t;
    }
    return a;
  }

  bool at_convex() const { return is_sym("(") && is_sym("+", 1); }

  TermPtr convex_level() {
    Span sp = peek().span;
    TermPtr a = unary_level();
    if (at_convex()) {
      next();
      next();
      auto t = node(TermKind::Convex, sp);
      Span gs = peek().span;
      t->r = grade();
      if (!(Grade(0) < *t->r && *t->r < Grade(1)))
        throw ParseError("convex weight must lie in (0,1)", gs);
      expect_sym(")");
      t->kids = {a, binder_ahead() ? term() : convex_level()};
      return t;
    }
    return a;
  }

  TermPtr unary_level() {
    Span sp = peek().span;
    if (is_kw("not") || is_sym("~")) {
      next();
      auto t = node(TermKind::Not, sp);
      t->kids = {binder_ahead() ? term() : unary_level()};
      return t;
    }
    if (is_sym("[")) {
      next();
      auto t = node(TermKind::Scale, sp);
      t->r = grade();
      expect_sym("]");
      t->kids = {binder_ahead() ? term() : unary_level()};
      return t;
    }
    return app_level();
  }

  bool atom_start() const {
    const Token& t = peek();
    if (t.kind == Tok::Number) return true;
    if (t.kind == Tok::Ident) {
      static const std::set<std::string> starters = {
          "inj1", "inj2", "pi1", "pi2", "delta", "zero", "succ", "rec", "fold", "unfold",
          "tt", "ff", "true", "false", "map", "kant", "coup"};
      return !kKeywords.count(t.text) || starters.count(t.text);
    }
    if (t.kind == Tok::Sym) {
      if (t.text == "(") return !is_sym("+", 1) && !is_kw("x", 1);
      return t.text == "<";
    }
    return false;
  }

  TermPtr app_level() {
    Span sp = peek().span;
    TermPtr f = atom();
    while (atom_start()) {
      f = binary(TermKind::App, f, atom(), sp);
    }
    return f;
  }

  TermPtr unary_kw(TermKind k, Span sp) {
    next();
    auto t = node(k, sp);
    expect_sym("(");
    t->kids = {term()};
    expect_sym(")");
    return t;
  }

  TermPtr atom() {
    Span sp = peek().span;
    const Token& tk = peek();
    if (tk.kind == Tok::Number) {
      std::string text = next().text;
      if (text.find('.') != std::string::npos) throw ParseError("numerals must be natural numbers", sp);
      return numeral(std::stoull(text));
    }
    if (is_sym("(")) {
      next();
      if (is_sym(")")) {
        next();
        return node(TermKind::UnitV, sp);
      }
      TermPtr a = term();
      if (is_sym(",")) {
        next();
        auto t = node(TermKind::TPair, sp);
        t->kids = {a, term()};
        expect_sym(")");
        if (is_sym("[")) {
          next();
          t->r = grade();
          expect_sym(",");
          t->s = grade();
          expect_sym("]");
        }
        return t;
      }
      if (is_sym(":")) {
        next();
        auto t = node(TermKind::Ann, sp);
        t->ty = type();
        t->kids = {a};
        expect_sym(")");
        return t;
      }
      expect_sym(")");
      return a;
    }
    if (is_sym("<")) {
      next();
      auto t = node(TermKind::Pair, sp);
      TermPtr a = term();
      expect_sym(",");
      TermPtr b = term();
      expect_sym(">");
      t->kids = {a, b};
      return t;
    }
    if (tk.kind != Tok::Ident) throw ParseError("expected a term but found '" + describe(tk) + "'", sp);
    const std::string& w = tk.text;
    if (w == "tt") return next(), node(TermKind::Tt, sp);
    if (w == "ff") return next(), node(TermKind::Ff, sp);
    if (w == "zero") return next(), node(TermKind::Zero, sp);
    if (w == "true" || w == "false") {
      next();
      auto t = node(TermKind::Inj, sp);
      t->index = w == "true" ? 1 : 2;
      t->ty = Type::boolean();
      t->kids = {node(TermKind::UnitV, sp)};
      return t;
    }
    if (w == "delta") return unary_kw(TermKind::Dirac, sp);
    if (w == "succ") return unary_kw(TermKind::Succ, sp);
    if (w == "unfold") return unary_kw(TermKind::Unfold, sp);
    if (w == "pi1" || w == "pi2" || w == "inj1" || w == "inj2") {
      next();
      auto t = node(w[0] == 'p' ? TermKind::Proj : TermKind::Inj, sp);
      t->index = w.back() - '0';
      if (is_sym("[")) {
        next();
        t->ty = type();
        expect_sym("]");
      }
      expect_sym("(");
      t->kids = {term()};
      expect_sym(")");
      return t;
    }
    if (w == "fold") {
      next();
      auto t = node(TermKind::Fold, sp);
      if (is_sym("[")) {
        next();
        t->ty = type();
        expect_sym("]");
      }
      expect_sym("(");
      TermPtr a = term();
      expect_sym(",");
      TermPtr m = term();
      expect_sym(")");
      t->kids = {a, m};
      return t;
    }
    if (w == "rec") {
      next();
      auto t = node(TermKind::Rec, sp);
      expect_sym("(");
      TermPtr z = term();
      expect_sym(",");
      t->x = ident();
      t->y = ident();
      expect_sym(".");
      TermPtr s = under({t->x, t->y}, [&] { return term(); });
      expect_sym(",");
      TermPtr n = term();
      expect_sym(")");
      t->kids = {z, s, n};
      return t;
    }
    if (w == "map") return map_sugar(sp);
    if (w == "kant") return kant_sugar(sp);
    if (w == "coup") return coup_sugar(sp);
    if (kKeywords.count(w)) throw ParseError("unexpected keyword '" + w + "'", sp);
    next();
    if (!bound(w)) {
      if (const Definition* d = prog_->find(w)) {
        if (!d->type) return d->body;
        auto a = node(TermKind::Ann, sp);
        a->ty = d->type;
        a->kids = {d->body};
        return a;
      }
      for (const auto& an : prog_->alphabet_order) {
        const auto& at = prog_->alphabets.at(an);
        auto it = std::find(at->labels.begin(), at->labels.end(), w);
        if (it != at->labels.end()) {
          auto t = node(TermKind::Label, sp);
          t->label = w;
          t->index = static_cast<int>(it - at->labels.begin());
          t->ty = at;
          return t;
        }
      }
    }
    return mk_var(w, sp);
  }

  // map(f, t) = let a = t in delta(f a); f may be succ, fst, snd or any term.
  TermPtr map_sugar(Span sp) {
    next();
    expect_sym("(");
    std::string fn;
    TermPtr f;
    if ((is_kw("succ") || is_kw("fst") || is_kw("snd")) && is_sym(",", 1)) {
      fn = next().text;
    } else {
      f = term();
    }
    expect_sym(",");
    TermPtr mu = term();
    expect_sym(")");
    std::set<std::string> avoid = free_vars(mu);
    if (f)
      for (auto& v : free_vars(f)) avoid.insert(v);
    return map_with(fn, f, mu, sp, avoid);
  }

  TermPtr map_with(const std::string& fn, const TermPtr& f, const TermPtr& mu, Span sp,
                   std::set<std::string> avoid) {
    auto let = node(TermKind::LetDist, sp);
    let->x = fresh_name("_a", avoid);
    avoid.insert(let->x);
    TermPtr a = mk_var(let->x, sp);
    TermPtr img;
    if (fn == "succ") {
      img = mk(TermKind::Succ, {a}, sp);
    } else if (fn == "fst" || fn == "snd") {
      auto lt = node(TermKind::LetTensor, sp);
      lt->x = fresh_name("_l", avoid);
      lt->y = fresh_name("_r", avoid);
      lt->kids = {a, mk_var(fn == "fst" ? lt->x : lt->y, sp)};
      img = lt;
    } else {
      img = mk(TermKind::App, {f, a}, sp);
    }
    let->kids = {mu, mk(TermKind::Dirac, {img}, sp)};
    return let;
  }

  // coup[x, y. R](rho, mu, nu) = (let z = rho in let (x,y) = z in R) * (map(fst,rho) == mu) * (map(snd,rho) == nu)
  TermPtr coupling_formula(const std::string& x, const std::string& y, const TermPtr& rel,
                           const TermPtr& rho, const TermPtr& mu, const TermPtr& nu, Span sp) {
    std::set<std::string> avoid = free_vars(rho);
    for (auto& v : free_vars(mu)) avoid.insert(v);
    for (auto& v : free_vars(nu)) avoid.insert(v);
    for (auto& v : free_vars(rel)) avoid.insert(v);
    auto mean = node(TermKind::LetDist, sp);
    mean->x = fresh_name("_z", avoid);
    auto split = node(TermKind::LetTensor, sp);
    split->x = x;
    split->y = y;
    split->kids = {mk_var(mean->x, sp), rel};
    mean->kids = {rho, split};
    auto eq1 = node(TermKind::Eq, sp);
    eq1->kids = {map_with("fst", nullptr, rho, sp, avoid), mu};
    auto eq2 = node(TermKind::Eq, sp);
    eq2->kids = {map_with("snd", nullptr, rho, sp, avoid), nu};
    return binary(TermKind::Star, binary(TermKind::Star, mean, eq1, sp), eq2, sp);
  }

  TermPtr coup_sugar(Span sp) {
    next();
    expect_sym("[");
    std::string x = ident();
    expect_sym(",");
    std::string y = ident();
    expect_sym(".");
    TermPtr rel = under({x, y}, [&] { return term(); });
    expect_sym("]");
    expect_sym("(");
    TermPtr rho = term();
    expect_sym(",");
    TermPtr mu = term();
    expect_sym(",");
    TermPtr nu = term();
    expect_sym(")");
    return coupling_formula(x, y, rel, rho, mu, nu, sp);
  }

  // kant(mu, nu) = exists w. coup[x, y. x == y](w, mu, nu)
  TermPtr kant_sugar(Span sp) {
    next();
    expect_sym("(");
    TermPtr mu = term();
    expect_sym(",");
    TermPtr nu = term();
    expect_sym(")");
    std::set<std::string> avoid = free_vars(mu);
    for (auto& v : free_vars(nu)) avoid.insert(v);
    auto ex = node(TermKind::Exists, sp);
    ex->x = fresh_name("_w", avoid);
    avoid.insert(ex->x);
    std::string x = fresh_name("_x", avoid), y = fresh_name("_y", avoid);
    auto eq = node(TermKind::Eq, sp);
    eq->kids = {mk_var(x, sp), mk_var(y, sp)};
    ex->kids = {coupling_formula(x, y, eq, mk_var(ex->x, sp), mu, nu, sp)};
    return ex;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Program* prog_;
  std::vector<std::string> scope_;
  int fresh_counter_ = 0;
};

}  // namespace

Program parse_program(const std::string& text) {
  Program p;
  Parser parser(text, &p);
  return parser.parse_file();
}

TermPtr parse_term(const std::string& text, const Program* env) {
  Program p = env ? *env : Program{};
  Parser parser(text, &p);
  return parser.parse_single_term();
}

TypePtr parse_type(const std::string& text, const Program* env) {
  Program p = env ? *env : Program{};
  Parser parser(text, &p);
  return parser.parse_single_type();
}

LogicJudgment parse_judgment(const std::string& text, const Program* env) {
  Program p = env ? *env : Program{};
  Parser parser(text, &p);
  return parser.parse_single_judgment();
}

namespace {
std::string print_decl_ctx(const TypeCtx& g, bool show_grades) {
  std::string s = "[";
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) s += ", ";
    s += g[i].name + " :";
    if (show_grades) s += "^" + g[i].grade.str();
    s += " " + print_type(g[i].type);
  }
  return s + "]";
}
}  // namespace

std::string print_judgment(const LogicJudgment& j) {
  std::string s = print_decl_ctx(j.delta, false) + " ";
  for (std::size_t i = 0; i < j.psi.size(); ++i) {
    if (i) s += ", ";
    s += print_term(j.psi[i]);
  }
  if (!j.psi.empty()) s += " ";
  return s + "|- " + print_term(j.phi);
}

std::string print_program(const Program& p) {
  std::ostringstream os;
  for (const auto& n : p.alphabet_order) {
    const auto& t = p.alphabets.at(n);
    os << "labels " << n << " = {";
    for (std::size_t i = 0; i < t->labels.size(); ++i) os << (i ? ", " : "") << t->labels[i];
    os << "};\n";
  }
  for (const auto& d : p.defs) {
    os << "def " << d.name;
    if (!d.ctx.empty()) os << " " << print_decl_ctx(d.ctx, true);
    if (d.type) os << " : " << print_type(d.type);
    os << " =\n  " << print_term(d.body) << ";\n";
  }
  for (const auto& j : p.judgments) os << "judgment " << j.name << " " << print_judgment(j.judgment) << ";\n";
  return os.str();
}

}  // namespace qlog
