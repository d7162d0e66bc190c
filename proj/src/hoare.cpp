#include "qlog/hoare.hpp"

#include "qlog/transport.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace qlog::hoare {

// ---------------------------------------------------------------- layout

void Layout::declare(const std::string& name, std::size_t length, bool array, Nat lo, Nat hi) {
  if (locs.count(name)) throw HoareError("location '" + name + "' declared twice");
  if (length == 0) throw HoareError("array '" + name + "' has length 0");
  if (hi < lo) throw HoareError("empty range for '" + name + "'");
  locs[name] = LocInfo{slots, length, array, lo, hi};
  order.push_back(name);
  slots += length;
}

const LocInfo& Layout::at(const std::string& name) const {
  auto it = locs.find(name);
  if (it == locs.end()) throw HoareError("undeclared location '" + name + "'");
  return it->second;
}

void Layout::merge(const Layout& other) {
  for (const auto& name : other.order) {
    const LocInfo& o = other.locs.at(name);
    auto it = locs.find(name);
    if (it == locs.end()) {
      declare(name, o.length, o.array, o.lo, o.hi);
    } else if (it->second.array != o.array || it->second.length != o.length) {
      throw HoareError("location '" + name + "' declared with different shapes");
    } else {
      it->second.lo = std::min(it->second.lo, o.lo);
      it->second.hi = std::max(it->second.hi, o.hi);
    }
  }
}

std::vector<Store> Layout::universe(std::size_t cap) const {
  std::vector<Store> out{zero()};
  for (const auto& name : order) {
    const LocInfo& li = locs.at(name);
    for (std::size_t k = 0; k < li.length; ++k) {
      std::vector<Store> next;
      for (const Store& s : out)
        for (Nat v = li.lo; v <= li.hi; ++v) {
          Store t = s;
          t[li.offset + k] = v;
          next.push_back(std::move(t));
          if (next.size() > cap) throw HoareError("store universe exceeds the cap");
        }
      out = std::move(next);
    }
  }
  return out;
}

nlohmann::json Layout::show(const Store& s) const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& name : order) {
    const LocInfo& li = locs.at(name);
    if (li.array) {
      nlohmann::json a = nlohmann::json::array();
      for (std::size_t k = 0; k < li.length; ++k) a.push_back(s[li.offset + k]);
      j[name] = a;
    } else {
      j[name] = s[li.offset];
    }
  }
  return j;
}

// ---------------------------------------------------------------- lexer

namespace {

struct Tok {
  enum Kind { Id, Num, Sym, End } kind;
  std::string text;
  std::size_t line;
};

std::vector<Tok> lex(const std::string& src) {
  static const char* syms[] = {":=", "<=", "==", "&&", "||", "..", "=", "+", "-", "*", "(", ")", "{", "}",
                               "[", "]", ";", "!", ":", "'", ","};
  std::vector<Tok> out;
  std::size_t i = 0, line = 1;
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') ++line;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({Tok::Num, src.substr(i, j - i), line});
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::Id, src.substr(i, j - i), line});
      i = j;
      continue;
    }
    bool found = false;
    for (const char* s : syms) {
      std::size_t n = std::char_traits<char>::length(s);
      if (src.compare(i, n, s) == 0) {
        out.push_back({Tok::Sym, s, line});
        i += n;
        found = true;
        break;
      }
    }
    if (!found) throw HoareError("line " + std::to_string(line) + ": unexpected character '" + std::string(1, c) + "'");
  }
  out.push_back({Tok::End, "", line});
  return out;
}

Nat to_nat(const std::string& s) {
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw HoareError("numeral out of range: " + s);
  }
}

ExprPtr mk(ExprKind k, ExprPtr a = nullptr, ExprPtr c = nullptr) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->a = std::move(a);
  e->c = std::move(c);
  return e;
}

std::shared_ptr<Cmd> mkc(CmdKind k) {
  auto c = std::make_shared<Cmd>();
  c->kind = k;
  return c;
}

class Parser {
public:
  explicit Parser(const std::string& src) : toks_(lex(src)) {}

  const Tok& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at(const std::string& s) const { return peek().kind != Tok::End && peek().text == s && peek().kind != Tok::Num; }
  bool accept(const std::string& s) {
    if (!at(s)) return false;
    ++pos_;
    return true;
  }
  void expect(const std::string& s) {
    if (!accept(s)) fail("expected '" + s + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    std::string got = peek().kind == Tok::End ? "end of input" : "'" + peek().text + "'";
    throw HoareError("line " + std::to_string(peek().line) + ": " + msg + ", got " + got);
  }
  std::string ident() {
    if (peek().kind != Tok::Id) fail("expected an identifier");
    return toks_[pos_++].text;
  }
  Nat number() {
    if (peek().kind != Tok::Num) fail("expected a numeral");
    return to_nat(toks_[pos_++].text);
  }
  bool done() const { return peek().kind == Tok::End; }

  // expressions
  ExprPtr expr() {
    ExprPtr e = cmp();
    while (accept("&&")) e = mk(ExprKind::And, e, cmp());
    return e;
  }
  ExprPtr cmp() {
    ExprPtr e = add();
    if (accept("=") || accept("==")) return mk(ExprKind::Eq, e, add());
    if (accept("<=")) return mk(ExprKind::Le, e, add());
    return e;
  }
  ExprPtr add() {
    ExprPtr e = mul();
    for (;;) {
      if (accept("+")) e = mk(ExprKind::Add, e, mul());
      else if (accept("-")) e = mk(ExprKind::Sub, e, mul());
      else return e;
    }
  }
  ExprPtr mul() {
    ExprPtr e = unary();
    while (accept("*")) e = mk(ExprKind::Mul, e, unary());
    return e;
  }
  ExprPtr unary() {
    if (accept("unif")) return mk(ExprKind::Unif, unary());
    return prim();
  }
  ExprPtr prim() {
    if (peek().kind == Tok::Num) {
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Num;
      e->n = number();
      return e;
    }
    if (at("true") || at("false")) {
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Bool;
      e->b = ident() == "true";
      return e;
    }
    if (accept("!")) {
      auto e = std::make_shared<Expr>();
      e->loc = ident();
      e->kind = ExprKind::Read;
      if (accept("[")) {
        e->kind = ExprKind::ReadArr;
        e->a = expr();
        expect("]");
      }
      return e;
    }
    if (accept("(")) {
      ExprPtr e = expr();
      expect(")");
      return e;
    }
    fail("expected an expression");
  }

  // commands
  CmdPtr seq() {
    CmdPtr c = stmt();
    while (accept(";")) {
      if (at("}") || done()) break;
      auto s = mkc(CmdKind::Seq);
      s->c1 = c;
      s->c2 = stmt();
      c = s;
    }
    return c;
  }
  CmdPtr block() {
    expect("{");
    if (accept("}")) return mkc(CmdKind::Skip);
    CmdPtr c = seq();
    expect("}");
    return c;
  }
  CmdPtr stmt() {
    if (accept("skip")) return mkc(CmdKind::Skip);
    if (at("{")) return block();
    if (accept("if")) {
      auto c = mkc(CmdKind::If);
      c->e = expr();
      c->c1 = block();
      c->c2 = accept("else") ? (at("if") ? stmt() : block()) : mkc(CmdKind::Skip);
      return c;
    }
    if (accept("while")) {
      auto c = mkc(CmdKind::While);
      c->e = expr();
      c->c1 = block();
      return c;
    }
    if (accept("sample")) {
      auto c = mkc(CmdKind::Sample);
      target(*c);
      c->e = expr();
      return c;
    }
    auto c = mkc(CmdKind::Assign);
    target(*c);
    expect(":=");
    c->e = expr();
    return c;
  }
  void target(Cmd& c) {
    c.loc = ident();
    if (accept("[")) {
      c.index = expr();
      expect("]");
    }
  }

  void declarations(Layout& l) {
    for (;;) {
      if (accept("var")) {
        do {
          std::string name = ident();
          auto [lo, hi] = range();
          l.declare(name, 1, false, lo, hi);
        } while (accept(","));
        expect(";");
      } else if (accept("array")) {
        std::string name = ident();
        expect("[");
        Nat len = number();
        expect("]");
        auto [lo, hi] = range();
        l.declare(name, len, true, lo, hi);
        expect(";");
      } else {
        return;
      }
    }
  }
  std::pair<Nat, Nat> range() {
    if (!accept(":")) return {0, 0};
    Nat lo = number();
    expect("..");
    return {lo, number()};
  }

private:
  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
};

std::string print_expr(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Num: return std::to_string(e->n);
    case ExprKind::Bool: return e->b ? "true" : "false";
    case ExprKind::Read: return "!" + e->loc;
    case ExprKind::ReadArr: return "!" + e->loc + "[" + print_expr(e->a) + "]";
    case ExprKind::Add: return "(" + print_expr(e->a) + " + " + print_expr(e->c) + ")";
    case ExprKind::Sub: return "(" + print_expr(e->a) + " - " + print_expr(e->c) + ")";
    case ExprKind::Mul: return "(" + print_expr(e->a) + " * " + print_expr(e->c) + ")";
    case ExprKind::Le: return print_expr(e->a) + " <= " + print_expr(e->c);
    case ExprKind::Eq: return print_expr(e->a) + " = " + print_expr(e->c);
    case ExprKind::And: return "(" + print_expr(e->a) + " && " + print_expr(e->c) + ")";
    case ExprKind::Unif: return "unif(" + print_expr(e->a) + ")";
  }
  return "?";
}

}  // namespace

Program parse_program(const std::string& text) {
  Parser p(text);
  Program prog;
  p.declarations(prog.layout);
  prog.body = p.done() ? mkc(CmdKind::Skip) : p.seq();
  if (!p.done()) p.fail("unexpected trailing input");
  typecheck(prog.layout, prog.body);
  return prog;
}

ExprPtr parse_expr(const std::string& text) {
  Parser p(text);
  ExprPtr e = p.expr();
  if (!p.done()) p.fail("unexpected trailing input");
  return e;
}

std::string print_cmd(const CmdPtr& c) {
  std::string tgt = c->loc + (c->index ? "[" + print_expr(c->index) + "]" : "");
  switch (c->kind) {
    case CmdKind::Skip: return "skip";
    case CmdKind::Assign: return tgt + " := " + print_expr(c->e);
    case CmdKind::Sample: return "sample " + tgt + " " + print_expr(c->e);
    case CmdKind::Seq: return print_cmd(c->c1) + "; " + print_cmd(c->c2);
    case CmdKind::If: return "if " + print_expr(c->e) + " { " + print_cmd(c->c1) + " } else { " + print_cmd(c->c2) + " }";
    case CmdKind::While: return "while " + print_expr(c->e) + " { " + print_cmd(c->c1) + " }";
  }
  return "?";
}

// ---------------------------------------------------------------- typing

namespace {

const char* type_name(ExprType t) {
  switch (t) {
    case ExprType::Nat: return "Nat";
    case ExprType::Bool: return "Bool";
    case ExprType::Dist: return "Dist";
  }
  return "?";
}

void want(ExprType got, ExprType expected, const ExprPtr& e) {
  if (got != expected)
    throw HoareError("type mismatch in '" + print_expr(e) + "': expected " + type_name(expected) + ", got " +
                     type_name(got));
}

}  // namespace

ExprType typecheck(const Layout& l, const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Num: return ExprType::Nat;
    case ExprKind::Bool: return ExprType::Bool;
    case ExprKind::Read:
      if (l.at(e->loc).array) throw HoareError("array '" + e->loc + "' read without an index");
      return ExprType::Nat;
    case ExprKind::ReadArr:
      if (!l.at(e->loc).array) throw HoareError("'" + e->loc + "' is not an array");
      want(typecheck(l, e->a), ExprType::Nat, e);
      return ExprType::Nat;
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul:
      want(typecheck(l, e->a), ExprType::Nat, e);
      want(typecheck(l, e->c), ExprType::Nat, e);
      return ExprType::Nat;
    case ExprKind::Le:
      want(typecheck(l, e->a), ExprType::Nat, e);
      want(typecheck(l, e->c), ExprType::Nat, e);
      return ExprType::Bool;
    case ExprKind::Eq: {
      ExprType a = typecheck(l, e->a);
      if (a == ExprType::Dist) throw HoareError("cannot compare distributions in '" + print_expr(e) + "'");
      want(typecheck(l, e->c), a, e);
      return ExprType::Bool;
    }
    case ExprKind::And:
      want(typecheck(l, e->a), ExprType::Bool, e);
      want(typecheck(l, e->c), ExprType::Bool, e);
      return ExprType::Bool;
    case ExprKind::Unif:
      want(typecheck(l, e->a), ExprType::Nat, e);
      return ExprType::Dist;
  }
  return ExprType::Nat;
}

void typecheck(const Layout& l, const CmdPtr& c) {
  auto check_target = [&] {
    const LocInfo& li = l.at(c->loc);
    if (li.array && !c->index) throw HoareError("array '" + c->loc + "' written without an index");
    if (!li.array && c->index) throw HoareError("'" + c->loc + "' is not an array");
    if (c->index) want(typecheck(l, c->index), ExprType::Nat, c->index);
  };
  switch (c->kind) {
    case CmdKind::Skip: return;
    case CmdKind::Assign:
      check_target();
      want(typecheck(l, c->e), ExprType::Nat, c->e);
      return;
    case CmdKind::Sample:
      check_target();
      want(typecheck(l, c->e), ExprType::Dist, c->e);
      return;
    case CmdKind::Seq:
      typecheck(l, c->c1);
      typecheck(l, c->c2);
      return;
    case CmdKind::If:
      want(typecheck(l, c->e), ExprType::Bool, c->e);
      typecheck(l, c->c1);
      typecheck(l, c->c2);
      return;
    case CmdKind::While:
      want(typecheck(l, c->e), ExprType::Bool, c->e);
      typecheck(l, c->c1);
      return;
  }
}

// ---------------------------------------------------------------- semantics

namespace {

std::size_t slot(const Layout& l, const std::string& loc, const ExprPtr& index, const Store& s) {
  const LocInfo& li = l.at(loc);
  if (!index) return li.offset;
  EVal i = evalExpr(l, s, index);
  if (i.n >= li.length)
    throw HoareError("index " + std::to_string(i.n) + " out of bounds for array '" + loc + "'");
  return li.offset + i.n;
}

Nat nat(const Layout& l, const Store& s, const ExprPtr& e) {
  EVal v = evalExpr(l, s, e);
  if (v.type != ExprType::Nat) throw HoareError("expected a natural number from '" + print_expr(e) + "'");
  return v.n;
}

}  // namespace

EVal evalExpr(const Layout& l, const Store& s, const ExprPtr& e) {
  EVal out;
  switch (e->kind) {
    case ExprKind::Num: out.n = e->n; return out;
    case ExprKind::Bool: out.type = ExprType::Bool; out.b = e->b; return out;
    case ExprKind::Read:
    case ExprKind::ReadArr: out.n = s.at(slot(l, e->loc, e->a, s)); return out;
    case ExprKind::Add: out.n = nat(l, s, e->a) + nat(l, s, e->c); return out;
    case ExprKind::Sub: {
      Nat a = nat(l, s, e->a), b = nat(l, s, e->c);
      out.n = a > b ? a - b : 0;
      return out;
    }
    case ExprKind::Mul: out.n = nat(l, s, e->a) * nat(l, s, e->c); return out;
    case ExprKind::Le:
      out.type = ExprType::Bool;
      out.b = nat(l, s, e->a) <= nat(l, s, e->c);
      return out;
    case ExprKind::Eq: {
      EVal a = evalExpr(l, s, e->a), b = evalExpr(l, s, e->c);
      if (a.type != b.type || a.type == ExprType::Dist) throw HoareError("ill-typed comparison '" + print_expr(e) + "'");
      out.type = ExprType::Bool;
      out.b = a.type == ExprType::Nat ? a.n == b.n : a.b == b.b;
      return out;
    }
    case ExprKind::And: {
      EVal a = evalExpr(l, s, e->a), b = evalExpr(l, s, e->c);
      if (a.type != ExprType::Bool || b.type != ExprType::Bool) throw HoareError("ill-typed conjunction");
      out.type = ExprType::Bool;
      out.b = a.b && b.b;
      return out;
    }
    case ExprKind::Unif:
      out.type = ExprType::Dist;
      out.n = nat(l, s, e->a);
      return out;
  }
  return out;
}

namespace {

class Exec {
public:
  Exec(const Layout& l, const EvalOpts& o) : l_(l), opt_(o) {}

  struct Acc {
    std::map<Store, double> atoms;
    double residual = 0, cutoff = 0;
    void add(const Store& s, double w) { atoms[s] += w; }
    void absorb(const Acc& o, double w) {
      for (const auto& [s, x] : o.atoms) atoms[s] += w * x;
      residual += w * o.residual;
      cutoff += w * o.cutoff;
    }
  };

  Acc run(const CmdPtr& c, const Store& s) {
    Acc out;
    switch (c->kind) {
      case CmdKind::Skip: out.add(s, 1.0); return out;
      case CmdKind::Assign: {
        Store t = s;
        t[slot(l_, c->loc, c->index, s)] = nat(l_, s, c->e);
        out.add(t, 1.0);
        return out;
      }
      case CmdKind::Sample: {
        EVal d = evalExpr(l_, s, c->e);
        if (d.type != ExprType::Dist) throw HoareError("sample needs a distribution");
        std::size_t at = slot(l_, c->loc, c->index, s);
        if (d.n + 1 > opt_.support_cap) throw HoareError("unif support exceeds the cap");
        double w = 1.0 / static_cast<double>(d.n + 1);
        for (Nat v = 0; v <= d.n; ++v) {
          Store t = s;
          t[at] = v;
          out.add(t, w);
        }
        return out;
      }
      case CmdKind::Seq: {
        Acc first = run(c->c1, s);
        out.residual = first.residual;
        out.cutoff = first.cutoff;
        for (const auto& [t, w] : first.atoms) out.absorb(run(c->c2, t), w);
        check(out);
        return out;
      }
      case CmdKind::If: return run(guard(c->e, s) ? c->c1 : c->c2, s);
      case CmdKind::While: return loop(c, s);
    }
    return out;
  }

private:
  bool guard(const ExprPtr& e, const Store& s) {
    EVal g = evalExpr(l_, s, e);
    if (g.type != ExprType::Bool) throw HoareError("guard is not boolean");
    return g.b;
  }

  void check(const Acc& a) const {
    if (a.atoms.size() > opt_.support_cap) throw HoareError("store distribution exceeds the support cap");
  }

  // Ascending iteration: every round settles the stores whose guard fails and runs
  // the body once on the rest.
  Acc loop(const CmdPtr& c, const Store& s) {
    Acc out;
    std::map<Store, double> frontier{{s, 1.0}}, previous;
    for (std::size_t k = 0;; ++k) {
      std::map<Store, double> running;
      double mass = 0;
      for (const auto& [t, w] : frontier) {
        if (guard(c->e, t)) {
          running[t] += w;
          mass += w;
        } else {
          out.add(t, w);
        }
      }
      if (running.empty()) break;
      if (running == previous) {
        // the same stores recur with the same weights: a certain divergence
        out.residual += mass;
        break;
      }
      if (k >= opt_.max_iter || mass < opt_.tol) {
        out.residual += mass;
        out.cutoff += mass;
        break;
      }
      Acc next;
      for (const auto& [t, w] : running) next.absorb(run(c->c1, t), w);
      check(next);
      out.residual += next.residual;
      out.cutoff += next.cutoff;
      previous = std::move(running);
      frontier = std::move(next.atoms);
    }
    check(out);
    return out;
  }

  const Layout& l_;
  const EvalOpts& opt_;
};

}  // namespace

CmdResult evalCmd(const Layout& l, const CmdPtr& c, const Store& s, const EvalOpts& opt) {
  if (s.size() != l.slots) throw HoareError("store does not match the declared locations");
  Exec ex(l, opt);
  Exec::Acc a = ex.run(c, s);
  std::vector<StoreDist::Atom> atoms(a.atoms.begin(), a.atoms.end());
  CmdResult r;
  r.dist = StoreDist::from_atoms(std::move(atoms), std::max(0.0, a.residual), ResidualKind::Divergence);
  r.cutoff = a.cutoff;
  return r;
}

// ---------------------------------------------------------------- predicates

namespace {

struct PTerm;
using PTermPtr = std::shared_ptr<const PTerm>;
struct PTerm {
  enum Kind { Num, Loc, Add, Sub, Mul } kind;
  Nat n = 0;
  bool right = false;  // s' rather than s
  std::string loc;
  PTermPtr a, b;  // for Loc, a is the optional index
};

}  // namespace

struct Pred {
  enum Kind { TT, FF, Eq, Le, And, Or } kind;
  PTermPtr x, y;
  PredPtr l, r;
};

namespace {

class PredParser {
public:
  explicit PredParser(const std::string& src) : p_(src) {}

  PredPtr pred() {
    PredPtr e = conj();
    while (p_.accept("||")) e = bin(Pred::Or, e, conj());
    return e;
  }

  void finish() {
    if (!p_.done()) p_.fail("unexpected trailing input in predicate");
  }

private:
  static PredPtr bin(Pred::Kind k, PredPtr l, PredPtr r) {
    auto p = std::make_shared<Pred>();
    p->kind = k;
    p->l = std::move(l);
    p->r = std::move(r);
    return p;
  }
  PredPtr conj() {
    PredPtr e = atom();
    while (p_.accept("&&")) e = bin(Pred::And, e, atom());
    return e;
  }
  PredPtr atom() {
    auto p = std::make_shared<Pred>();
    if (p_.accept("tt")) {
      p->kind = Pred::TT;
      return p;
    }
    if (p_.accept("ff")) {
      p->kind = Pred::FF;
      return p;
    }
    if (p_.accept("(")) {
      PredPtr e = pred();
      p_.expect(")");
      return e;
    }
    p->x = term();
    if (p_.accept("=") || p_.accept("==")) p->kind = Pred::Eq;
    else if (p_.accept("<=")) p->kind = Pred::Le;
    else p_.fail("expected '=' or '<='");
    p->y = term();
    return p;
  }
  PTermPtr term() {
    PTermPtr e = factor();
    for (;;) {
      if (p_.accept("+")) e = tbin(PTerm::Add, e, factor());
      else if (p_.accept("-")) e = tbin(PTerm::Sub, e, factor());
      else return e;
    }
  }
  PTermPtr factor() {
    PTermPtr e = prim();
    while (p_.accept("*")) e = tbin(PTerm::Mul, e, prim());
    return e;
  }
  static PTermPtr tbin(PTerm::Kind k, PTermPtr a, PTermPtr b) {
    auto t = std::make_shared<PTerm>();
    t->kind = k;
    t->a = std::move(a);
    t->b = std::move(b);
    return t;
  }
  PTermPtr prim() {
    auto t = std::make_shared<PTerm>();
    if (p_.peek().kind == Tok::Num) {
      t->kind = PTerm::Num;
      t->n = p_.number();
      return t;
    }
    if (p_.accept("s")) {
      t->kind = PTerm::Loc;
      t->right = p_.accept("'");
      p_.expect("(");
      t->loc = p_.ident();
      if (p_.accept("[")) {
        t->a = term();
        p_.expect("]");
      }
      p_.expect(")");
      return t;
    }
    p_.fail("expected s(x), s'(x) or a numeral");
  }

  Parser p_;
};

// A scalar, or a whole array.
std::vector<Nat> term_value(const Layout& l, const PTermPtr& t, const Store& s, const Store& u) {
  auto scalar = [&](const PTermPtr& x) {
    auto v = term_value(l, x, s, u);
    if (v.size() != 1) throw HoareError("whole arrays can only be compared with =");
    return v[0];
  };
  switch (t->kind) {
    case PTerm::Num: return {t->n};
    case PTerm::Loc: {
      const LocInfo& li = l.at(t->loc);
      const Store& st = t->right ? u : s;
      if (t->a) {
        if (!li.array) throw HoareError("'" + t->loc + "' is not an array");
        Nat i = scalar(t->a);
        if (i >= li.length) throw HoareError("index out of bounds for '" + t->loc + "'");
        return {st[li.offset + i]};
      }
      return std::vector<Nat>(st.begin() + li.offset, st.begin() + li.offset + li.length);
    }
    case PTerm::Add: return {scalar(t->a) + scalar(t->b)};
    case PTerm::Sub: {
      Nat a = scalar(t->a), b = scalar(t->b);
      return {a > b ? a - b : 0};
    }
    case PTerm::Mul: return {scalar(t->a) * scalar(t->b)};
  }
  return {};
}

}  // namespace

PredPtr parse_pred(const std::string& text) {
  PredParser p(text);
  PredPtr out = p.pred();
  p.finish();
  return out;
}

PropVal evalPred(const Layout& l, const PredPtr& p, const Store& s, const Store& t) {
  switch (p->kind) {
    case Pred::TT: return 0.0;
    case Pred::FF: return 1.0;
    case Pred::Eq: return term_value(l, p->x, s, t) == term_value(l, p->y, s, t) ? 0.0 : 1.0;
    case Pred::Le: {
      auto a = term_value(l, p->x, s, t), b = term_value(l, p->y, s, t);
      if (a.size() != 1 || b.size() != 1) throw HoareError("<= needs scalars");
      return a[0] <= b[0] ? 0.0 : 1.0;
    }
    case Pred::And: return std::max<double>(evalPred(l, p->l, s, t), evalPred(l, p->r, s, t));
    case Pred::Or: return std::min<double>(evalPred(l, p->l, s, t), evalPred(l, p->r, s, t));
  }
  return 1.0;
}

PropVal lifted(const Layout& l, const PredPtr& p, Lift mode, const Store* s, const Store* t) {
  if (!s && !t) return 0.0;
  if (!s) return mode == Lift::Leq ? 0.0 : 1.0;
  if (!t) return 1.0;
  return evalPred(l, p, *s, *t);
}

double couplingCost(const Layout& l, const PredPtr& psi, Lift mode, const StoreDist& mu, const StoreDist& nu) {
  std::vector<const Store*> xs, ys;
  std::vector<double> a, b;
  for (const auto& at : mu.atoms()) {
    xs.push_back(&at.first);
    a.push_back(at.second);
  }
  for (const auto& at : nu.atoms()) {
    ys.push_back(&at.first);
    b.push_back(at.second);
  }
  xs.push_back(nullptr);
  a.push_back(std::max(0.0, 1.0 - std::accumulate(a.begin(), a.end(), 0.0)));
  ys.push_back(nullptr);
  b.push_back(std::max(0.0, 1.0 - std::accumulate(b.begin(), b.end(), 0.0)));
  std::vector<std::vector<double>> cost(xs.size(), std::vector<double>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) cost[i][j] = lifted(l, psi, mode, xs[i], ys[j]);
  return clamp01(transport::solve<double>(a, b, cost).cost);
}

nlohmann::json TripleResult::to_json() const {
  return {{"value", value}, {"radius", radius}, {"pairs", pairs}, {"worst", worst}};
}

TripleResult tripleValue(const Layout& l, const PredPtr& phi, const CmdPtr& c, const CmdPtr& c2,
                         const PredPtr& psi, Lift mode, const std::vector<std::pair<Store, Store>>& pairs,
                         const EvalOpts& opt) {
  TripleResult out;
  out.worst = nullptr;
  for (const auto& [s, t] : pairs) {
    ++out.pairs;
    PropVal pre = evalPred(l, phi, s, t);
    if (pre >= 1.0) continue;
    CmdResult left = evalCmd(l, c, s, opt), right = evalCmd(l, c2, t, opt);
    double value = wand(pre, couplingCost(l, psi, mode, left.dist, right.dist));
    // cutoff mass could still terminate anywhere
    double radius = std::min(1.0, left.cutoff + right.cutoff);
    out.radius = std::max(out.radius, radius);
    if (value > out.value || out.worst.is_null()) {
      if (value >= out.value) out.value = value;
      out.worst = {{"s", l.show(s)}, {"s'", l.show(t)}, {"value", value}};
    }
  }
  return out;
}

// ---------------------------------------------------------------- almost sure termination

Program asTermination() { return parse_program("var l : 0..1;\nl := 0;\nwhile !l = 0 { sample l unif 1 }\n"); }

std::vector<AsTermRow> asTerminationCheck(int max_n) {
  Program p = asTermination();
  Program skip = parse_program("var l : 0..1; skip");
  std::vector<std::pair<Store, Store>> pairs;
  for (const Store& s : p.layout.universe())
    for (const Store& t : p.layout.universe()) pairs.push_back({s, t});
  PredPtr tt = parse_pred("tt");
  std::vector<AsTermRow> rows;
  for (int n = 1; n <= max_n; ++n) {
    EvalOpts opt;
    opt.max_iter = static_cast<std::size_t>(n);
    opt.tol = 0;
    AsTermRow row;
    row.n = n;
    row.mass = evalCmd(p.layout, p.body, p.layout.zero(), opt).dist.support_mass();
    TripleResult tr = tripleValue(p.layout, tt, p.body, skip.body, tt, Lift::Eq, pairs, opt);
    row.triple = tr.value;
    row.radius = tr.radius;
    double expect = 1.0 - std::ldexp(1.0, -n);
    row.ok = row.mass == expect && row.triple <= std::ldexp(1.0, -n) + 1e-12;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------- PRP/PRF

namespace {

std::string decls(int L, int N) {
  std::ostringstream o;
  o << "var i, val, tmp, cand, cnt, found, j, used;\n";
  o << "array arr[" << L << "] : 0.." << (N - 1) << ";\n";
  return o.str();
}

// Sets val to the tmp-th value (counting from 0) missing from arr[0..i-1].
const char* kNthUnused = R"(cand := 0; cnt := 0; found := 0;
while !found = 0 {
  j := 0; used := 0;
  while !j + 1 <= !i {
    if !arr[!j] = !cand { used := 1 } else { skip };
    j := !j + 1
  };
  if !used = 0 {
    if !cnt = !tmp { val := !cand; found := 1 } else { cnt := !cnt + 1 }
  } else { skip };
  cand := !cand + 1
})";

std::string ri_loop_src(int N) {
  return "sample tmp unif(" + std::to_string(N - 1) + " - !i);\n" + kNthUnused + ";\narr[!i] := !val;\ni := !i + 1";
}

std::string rf_loop_src(int N) {
  return "sample val unif(" + std::to_string(N - 1) + ");\narr[!i] := !val;\ni := !i + 1";
}

// i <= Q-1 rewritten as i + 1 <= Q so that Q = 0 stays in the naturals
std::string outer(int Q, const std::string& body) {
  return "i := 0;\nwhile !i + 1 <= " + std::to_string(Q) + " {\n" + body + "\n}";
}

void check_params(int L, int N) {
  if (L < 1 || N < 1 || L > N) throw HoareError("PRP/PRF needs 1 <= L <= N");
  double states = std::pow(static_cast<double>(N), L);
  if (states > 1e6) throw HoareError("PRP/PRF enumeration N^L exceeds the cap");
}

std::map<std::vector<Nat>, double> project(const Layout& l, const StoreDist& d, const std::string& loc) {
  const LocInfo& li = l.at(loc);
  std::map<std::vector<Nat>, double> out;
  for (const auto& [s, w] : d.atoms())
    out[std::vector<Nat>(s.begin() + li.offset, s.begin() + li.offset + li.length)] += w;
  return out;
}

double total_variation(const std::map<std::vector<Nat>, double>& p, const std::map<std::vector<Nat>, double>& q) {
  double sum = 0;
  for (const auto& [k, w] : p) {
    auto it = q.find(k);
    sum += std::abs(w - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, w] : q)
    if (!p.count(k)) sum += w;
  return sum / 2;
}

}  // namespace

Rational prp_eps(int q, int n) { return Rational(static_cast<long long>(q) * (q - 1), 2LL * n); }

Program nthUnused(int L) { return parse_program(decls(L, 1) + kNthUnused); }
Program riProgram(int L, int N, int Q) { return parse_program(decls(L, N) + outer(Q, ri_loop_src(N))); }
Program rfProgram(int L, int N, int Q) { return parse_program(decls(L, N) + outer(Q, rf_loop_src(N))); }
Program riLoop(int L, int N) { return parse_program(decls(L, N) + ri_loop_src(N)); }
Program rfLoop(int L, int N) { return parse_program(decls(L, N) + rf_loop_src(N)); }

nlohmann::json PrpReport::to_json() const {
  return {{"L", L},
          {"N", N},
          {"max_q", max_q},
          {"nth_unused_ok", nth_unused_ok},
          {"loop_value", loop_value},
          {"tv", tv},
          {"lp", lp},
          {"eps", eps},
          {"loop_ok", loop_ok},
          {"cumulative_ok", cumulative_ok},
          {"telescoping_ok", telescoping_ok},
          {"lp_matches_tv", lp_matches_tv},
          {"eps_L_minus_1", eps_l_minus_1},
          {"eps_L", eps_l},
          {"tv_at_L", tv_at_l},
          {"ok", ok}};
}

PrpReport prpPrfCheck(int L, int N, int max_q, double tol) {
  check_params(L, N);
  max_q = std::clamp(max_q, 0, L);
  PrpReport rep;
  rep.L = L;
  rep.N = N;
  rep.max_q = max_q;
  Program nth = parse_program(decls(L, N) + kNthUnused);
  const Layout& lay = nth.layout;
  const LocInfo& arr = lay.at("arr");
  auto loc = [&](const char* name) { return lay.at(name).offset; };

  // every array content f in [0, N-1]^L
  std::vector<std::vector<Nat>> fs{{}};
  for (int k = 0; k < L; ++k) {
    std::vector<std::vector<Nat>> next;
    for (const auto& f : fs)
      for (int v = 0; v < N; ++v) {
        auto g = f;
        g.push_back(static_cast<Nat>(v));
        next.push_back(std::move(g));
      }
    fs = std::move(next);
  }

  // (a) nth_unused: deterministic, leaves arr and i alone, and k -> val is an injection
  // into the values missing from f(0..i0-1)
  rep.nth_unused_ok = true;
  Program skip = parse_program(decls(L, N) + "skip");
  for (const auto& f : fs) {
    for (int i0 = 0; i0 < L && rep.nth_unused_ok; ++i0) {
      std::set<Nat> seen;
      for (int k = 0; k <= N - i0 - 1; ++k) {
        Store s = lay.zero();
        std::copy(f.begin(), f.end(), s.begin() + arr.offset);
        s[loc("i")] = i0;
        s[loc("tmp")] = k;
        StoreDist left = evalCmd(lay, skip.body, s).dist;
        StoreDist right = evalCmd(lay, nth.body, s).dist;
        bool ok = right.size() == 1 && right.residual() == 0 && left.size() == 1;
        if (ok) {
          const Store& t = right.atoms()[0].first;
          Nat val = t[loc("val")];
          ok = t[loc("i")] == static_cast<Nat>(i0) && std::equal(f.begin(), f.end(), t.begin() + arr.offset) &&
               val < static_cast<Nat>(N) && std::find(f.begin(), f.begin() + i0, val) == f.begin() + i0 &&
               seen.insert(val).second;
        }
        if (!ok) rep.nth_unused_ok = false;
      }
    }
  }

  // (b) one loop iteration from Phi(Q) to Phi(Q+1) costs Q/N
  Program ril = riLoop(L, N), rfl = rfLoop(L, N);
  rep.loop_ok = true;
  for (int Q = 0; Q < max_q && Q < L; ++Q) {
    std::string q = std::to_string(Q), q1 = std::to_string(Q + 1);
    PredPtr pre = parse_pred("s(arr) = s'(arr) && s(i) = " + q + " && s'(i) = " + q);
    PredPtr post = parse_pred("s(arr) = s'(arr) && s(i) = " + q1 + " && s'(i) = " + q1);
    std::set<std::vector<Nat>> prefixes;
    for (const auto& f : fs) {
      std::vector<Nat> g(f.begin(), f.begin() + Q);
      g.resize(L, 0);
      prefixes.insert(g);
    }
    std::vector<std::pair<Store, Store>> pairs;
    for (const auto& f : prefixes) {
      Store s = lay.zero();
      std::copy(f.begin(), f.end(), s.begin() + arr.offset);
      s[loc("i")] = Q;
      pairs.push_back({s, s});
    }
    TripleResult tr = tripleValue(lay, pre, ril.body, rfl.body, post, Lift::Eq, pairs);
    rep.loop_value.push_back(tr.value);
    if (tr.value > static_cast<double>(Q) / N + tol) rep.loop_ok = false;
  }

  // (c) cumulative distance after Q iterations
  rep.cumulative_ok = true;
  rep.lp_matches_tv = true;
  for (int Q = 0; Q <= max_q; ++Q) {
    Program ri = riProgram(L, N, Q), rf = rfProgram(L, N, Q);
    StoreDist a = evalCmd(lay, ri.body, lay.zero()).dist;
    StoreDist b = evalCmd(lay, rf.body, lay.zero()).dist;
    double tv = total_variation(project(lay, a, "arr"), project(lay, b, "arr"));
    std::string q = std::to_string(Q);
    PredPtr post = parse_pred("s(arr) = s'(arr) && s(i) = " + q + " && s'(i) = " + q);
    double lp = couplingCost(lay, post, Lift::Eq, a, b);
    rep.tv.push_back(tv);
    rep.lp.push_back(lp);
    rep.eps.push_back(rational_str(prp_eps(Q, N)));
    if (tv > rational_to_double(prp_eps(Q, N)) + tol) rep.cumulative_ok = false;
    if (std::abs(tv - lp) > 1e-9) rep.lp_matches_tv = false;
    if (Q == L) rep.tv_at_l = tv;
  }

  rep.telescoping_ok = true;
  for (int Q = 0; Q <= L; ++Q)
    if (prp_eps(Q, N) + Rational(Q, N) != prp_eps(Q + 1, N)) rep.telescoping_ok = false;
  rep.eps_l_minus_1 = rational_str(prp_eps(L - 1, N));
  rep.eps_l = rational_str(prp_eps(L, N));
  rep.ok = rep.nth_unused_ok && rep.loop_ok && rep.cumulative_ok && rep.telescoping_ok && rep.lp_matches_tv;
  return rep;
}

}  // namespace qlog::hoare
