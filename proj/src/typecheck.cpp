#include "qlog/typecheck.hpp"

#include <nlohmann/json.hpp>

#include <functional>

namespace qlog {

std::string TypeErrorInfo::text() const {
  return span.str() + ": [" + rule + "] " + message;
}

std::string TypeErrorInfo::json() const {
  nlohmann::json j = {{"rule", rule}, {"span", span.str()}, {"message", message}};
  return j.dump();
}

std::string print_usage(const Usage& u) {
  std::string s = "{";
  bool first = true;
  for (const auto& [k, g] : u) {
    if (g.is_zero()) continue;
    if (!first) s += ", ";
    first = false;
    s += k + " -> " + g.str();
  }
  return s + "}";
}

namespace {

[[noreturn]] void fail(const std::string& rule, Span span, const std::string& msg) {
  throw TypeError(TypeErrorInfo{rule, span, msg});
}

Usage add(const Usage& a, const Usage& b) {
  Usage out = a;
  for (const auto& [k, g] : b) out[k] = out.count(k) ? out[k] + g : g;
  return out;
}

Usage scale(const Grade& r, const Usage& a) {
  Usage out;
  for (const auto& [k, g] : a) out[k] = r * g;
  return out;
}

Usage join(const Usage& a, const Usage& b) {
  Usage out = a;
  for (const auto& [k, g] : b) out[k] = out.count(k) ? max(out[k], g) : g;
  return out;
}

Grade at(const Usage& u, const std::string& x) {
  auto it = u.find(x);
  return it == u.end() ? Grade(0) : it->second;
}

Usage without(Usage u, std::initializer_list<std::string> xs) {
  for (const auto& x : xs) u.erase(x);
  return u;
}

std::string kind_rule(TermKind k) { return term_kind_name(k); }

// Finds the type of the existential binder w in a coupling-shaped body:
// an equation whose side is map(fst, w) (or snd) and whose other side synthesizes D(A).
TypePtr infer_coupling_binder(const TermPtr& body, const std::string& w, const TypeEnv& env);

class Checker {
public:
  Synthesis go(const TypeEnv& env, const TermPtr& t, const TypePtr& expected) {
    Synthesis s = infer(env, t, expected);
    if (expected && !type_equal(s.type, expected))
      fail(kind_rule(t->kind), t->span,
           "type mismatch: expected " + print_type(expected) + " but found " + print_type(s.type));
    return s;
  }

private:
  static TypeEnv bind(const TypeEnv& env, const std::string& x, const TypePtr& a) {
    TypeEnv e = env;
    e[x] = a;
    return e;
  }

  static std::shared_ptr<Term> copy(const TermPtr& t) { return std::make_shared<Term>(*t); }

  Synthesis infer(const TypeEnv& env, const TermPtr& t, const TypePtr& expected) {
    const Span sp = t->span;
    switch (t->kind) {
      case TermKind::Var: {
        auto it = env.find(t->x);
        if (it == env.end()) fail("var", sp, "unbound variable '" + t->x + "'");
        return {it->second, {{t->x, Grade(1)}}, t};
      }
      case TermKind::Lam: {
        TypePtr a = t->ty;
        Grade r = t->r ? *t->r : Grade(1);
        TypePtr b_expected;
        if (expected && expected->kind == TypeKind::Lolli) {
          if (!a) a = expected->a;
          if (!t->r) r = expected->r;
          b_expected = expected->b;
        }
        if (!a) fail("abs", sp, "cannot infer the type of '" + t->x + "'; annotate the binder");
        Synthesis body = go(bind(env, t->x, a), t->kid(0), b_expected);
        Grade ux = at(body.usage, t->x);
        if (r < ux)
          fail("abs", sp, "'" + t->x + "' is used with sensitivity " + ux.str() +
                              " but the binder allows " + r.str());
        auto e = copy(t);
        e->ty = a;
        e->r = r;
        e->kids = {body.term};
        return {Type::lolli(a, r, body.type), without(body.usage, {t->x}), e};
      }
      case TermKind::App: {
        Synthesis f = go(env, t->kid(0), nullptr);
        if (f.type->kind != TypeKind::Lolli)
          fail("app", sp, "applying a term of non-function type " + print_type(f.type));
        Synthesis u = go(env, t->kid(1), f.type->a);
        return {f.type->b, add(f.usage, scale(f.type->r, u.usage)),
                with_kids(t, {f.term, u.term})};
      }
      case TermKind::UnitV:
        return {Type::unit(), {}, t};
      case TermKind::Pair: {
        TypePtr ea, eb;
        if (expected && expected->kind == TypeKind::Prod) ea = expected->a, eb = expected->b;
        Synthesis l = go(env, t->kid(0), ea);
        Synthesis r = go(env, t->kid(1), eb);
        return {Type::prod(l.type, r.type), join(l.usage, r.usage), with_kids(t, {l.term, r.term})};
      }
      case TermKind::Proj: {
        Synthesis s = go(env, t->kid(0), t->ty);
        if (s.type->kind != TypeKind::Prod)
          fail("proj", sp, "projection from non-product type " + print_type(s.type));
        auto e = copy(t);
        e->ty = s.type;
        e->kids = {s.term};
        return {t->index == 1 ? s.type->a : s.type->b, s.usage, e};
      }
      case TermKind::Inj: {
        TypePtr sum = t->ty ? t->ty : expected;
        if (!sum) fail("inj", sp, "cannot infer the sum type; write inj" + std::to_string(t->index) + "[A + B](...)");
        if (sum->kind != TypeKind::Sum) fail("inj", sp, "injection into non-sum type " + print_type(sum));
        Synthesis s = go(env, t->kid(0), t->index == 1 ? sum->a : sum->b);
        auto e = copy(t);
        e->ty = sum;
        e->kids = {s.term};
        return {sum, s.usage, e};
      }
      case TermKind::Case: {
        Synthesis s = go(env, t->kid(0), nullptr);
        if (s.type->kind != TypeKind::Sum)
          fail("case", sp, "case analysis on non-sum type " + print_type(s.type));
        TypeEnv el = bind(env, t->x, s.type->a), er = bind(env, t->y, s.type->b);
        Synthesis l, r;
        if (!expected) {
          try {
            l = go(el, t->kid(1), nullptr);
            r = go(er, t->kid(2), l.type);
          } catch (const TypeError&) {
            r = go(er, t->kid(2), nullptr);
            l = go(el, t->kid(1), r.type);
          }
        } else {
          l = go(el, t->kid(1), expected);
          r = go(er, t->kid(2), expected);
        }
        Grade need = max(Grade(1), max(at(l.usage, t->x), at(r.usage, t->y)));
        Grade g = need;
        if (t->r) {
          if (*t->r < need)
            fail("case", sp, "branch variables need sensitivity " + need.str() +
                                 " but the case is annotated " + t->r->str());
          g = *t->r;
        }
        Usage bu = join(without(l.usage, {t->x}), without(r.usage, {t->y}));
        auto e = copy(t);
        e->r = g;
        e->kids = {s.term, l.term, r.term};
        return {l.type, add(scale(g, s.usage), bu), e};
      }
      case TermKind::TPair: {
        Grade r = t->r ? *t->r : Grade(1), s = t->s ? *t->s : Grade(1);
        TypePtr ea, eb;
        if (expected && expected->kind == TypeKind::Tensor) {
          ea = expected->a;
          eb = expected->b;
          if (!t->r) r = expected->r;
          if (!t->s) s = expected->s;
        }
        Synthesis a = go(env, t->kid(0), ea);
        Synthesis b = go(env, t->kid(1), eb);
        auto e = copy(t);
        e->r = r;
        e->s = s;
        e->kids = {a.term, b.term};
        return {Type::tensor(a.type, r, s, b.type), add(scale(r, a.usage), scale(s, b.usage)), e};
      }
      case TermKind::LetTensor: {
        Synthesis u = go(env, t->kid(0), nullptr);
        if (u.type->kind != TypeKind::Tensor)
          fail("let-tensor", sp, "destructuring non-tensor type " + print_type(u.type));
        TypeEnv e2 = bind(bind(env, t->x, u.type->a), t->y, u.type->b);
        Synthesis body = go(e2, t->kid(1), expected);
        Grade ux = at(body.usage, t->x), uy = at(body.usage, t->y);
        if (u.type->r < ux)
          fail("let-tensor", sp, "'" + t->x + "' is used with sensitivity " + ux.str() +
                                     " but the tensor provides " + u.type->r.str());
        if (u.type->s < uy)
          fail("let-tensor", sp, "'" + t->y + "' is used with sensitivity " + uy.str() +
                                     " but the tensor provides " + u.type->s.str());
        auto e = copy(t);
        e->r = u.type->r;
        e->s = u.type->s;
        e->kids = {u.term, body.term};
        return {body.type, add(without(body.usage, {t->x, t->y}), u.usage), e};
      }
      case TermKind::Dirac: {
        TypePtr ea = expected && expected->kind == TypeKind::Dist ? expected->a : nullptr;
        Synthesis s = go(env, t->kid(0), ea);
        return {Type::dist(s.type), s.usage, with_kids(t, {s.term})};
      }
      case TermKind::Convex: {
        const Grade& p = *t->r;
        if (!(Grade(0) < p && p < Grade(1))) fail("oplus", sp, "weight must lie in (0,1)");
        Synthesis l, r;
        try {
          l = go(env, t->kid(0), expected);
          r = go(env, t->kid(1), l.type);
        } catch (const TypeError&) {
          if (expected) throw;
          r = go(env, t->kid(1), nullptr);
          l = go(env, t->kid(0), r.type);
        }
        if (!isIBAlgebraType(l.type))
          fail("oplus", sp, "convex combination at non-IB type " + print_type(l.type));
        return {l.type, add(scale(p, l.usage), scale(Grade(1) - p, r.usage)),
                with_kids(t, {l.term, r.term})};
      }
      case TermKind::LetDist: {
        Synthesis u = go(env, t->kid(0), t->ty ? Type::dist(t->ty) : nullptr);
        if (u.type->kind != TypeKind::Dist)
          fail("let", sp, "let-binding from non-distribution type " + print_type(u.type));
        Synthesis body = go(bind(env, t->x, u.type->a), t->kid(1), expected);
        if (!isIBAlgebraType(body.type))
          fail("let", sp, "body type " + print_type(body.type) + " is not an IB algebra");
        Grade r = at(body.usage, t->x);
        if (r.is_infinite())
          fail("let", sp, "'" + t->x + "' is used with infinite sensitivity; r < inf required");
        auto e = copy(t);
        e->ty = u.type->a;
        e->r = r;  // sensitivity of the bound variable, used for error radii
        e->kids = {u.term, body.term};
        return {body.type, add(without(body.usage, {t->x}), scale(r, u.usage)), e};
      }
      case TermKind::Zero:
        return {Type::nat(), {}, t};
      case TermKind::Succ: {
        Synthesis s = go(env, t->kid(0), Type::nat());
        return {Type::nat(), s.usage, with_kids(t, {s.term})};
      }
      case TermKind::Rec: {
        Synthesis z = go(env, t->kid(0), expected);
        Synthesis s = go(bind(bind(env, t->x, z.type), t->y, Type::nat()), t->kid(1), z.type);
        Synthesis n = go(env, t->kid(2), Type::nat());
        for (const auto* v : {&t->x, &t->y}) {
          Grade g = at(s.usage, *v);
          if (Grade(1) < g)
            fail("rec", sp, "'" + *v + "' is used with sensitivity " + g.str() + " in the step; at most 1 allowed");
        }
        Usage u = add(add(z.usage, scale(Grade::infinity(), without(s.usage, {t->x, t->y}))), n.usage);
        return {z.type, u, with_kids(t, {z.term, s.term, n.term})};
      }
      case TermKind::Fix: {
        TypePtr a = t->ty ? t->ty : expected;
        if (!a) fail("fix", sp, "cannot infer the type of the fixed point; annotate 'fix " + t->x + " : A.'");
        Synthesis body = go(bind(env, t->x, a), t->kid(0), a);
        Grade p = at(body.usage, t->x);
        if (t->r) {
          if (*t->r < p)
            fail("fix", sp, "'" + t->x + "' is used with sensitivity " + p.str() +
                                " above the annotated " + t->r->str());
          p = *t->r;
        }
        if (!(p < Grade(1)))
          fail("fix", sp, "recursion is not contractive: '" + t->x + "' has sensitivity " + p.str() +
                              " but p < 1 is required");
        Usage rest;
        Grade factor = Grade(1) / (Grade(1) - p);
        for (const auto& [k, g] : without(body.usage, {t->x})) rest[k] = g * factor;
        auto e = copy(t);
        e->ty = a;
        e->r = p;
        e->kids = {body.term};
        return {a, rest, e};
      }
      case TermKind::Label:
        return {t->ty, {}, t};
      case TermKind::Fold: {
        TypePtr pt = t->ty ? t->ty : expected;
        if (!pt) fail("fld", sp, "cannot infer the process type; write fold[Proc(A, c)](...)");
        if (pt->kind != TypeKind::Proc) fail("fld", sp, "fold at non-process type " + print_type(pt));
        Synthesis a = go(env, t->kid(0), pt->a);
        Synthesis m = go(env, t->kid(1), Type::dist(pt));
        auto e = copy(t);
        e->ty = pt;
        e->kids = {a.term, m.term};
        return {pt, add(a.usage, scale(pt->r, m.usage)), e};
      }
      case TermKind::Unfold: {
        Synthesis s = go(env, t->kid(0), nullptr);
        if (s.type->kind != TypeKind::Proc)
          fail("ufld", sp, "unfolding non-process type " + print_type(s.type));
        return {Type::tensor(s.type->a, Grade(1), s.type->r, Type::dist(s.type)), s.usage,
                with_kids(t, {s.term})};
      }
      case TermKind::Ann: {
        Synthesis s = go(env, t->kid(0), t->ty);
        return {t->ty, s.usage, with_kids(t, {s.term})};
      }
      case TermKind::Tt:
      case TermKind::Ff:
        return {Type::prop(), {}, t};
      case TermKind::Eq: {
        Synthesis l, r;
        if (t->ty) {
          l = go(env, t->kid(0), t->ty);
          r = go(env, t->kid(1), t->ty);
        } else {
          try {
            l = go(env, t->kid(0), nullptr);
            r = go(env, t->kid(1), l.type);
          } catch (const TypeError& first) {
            try {
              r = go(env, t->kid(1), nullptr);
              l = go(env, t->kid(0), r.type);
            } catch (const TypeError&) {
              throw first;
            }
          }
        }
        auto e = copy(t);
        e->ty = l.type;
        e->kids = {l.term, r.term};
        return {Type::prop(), add(l.usage, r.usage), e};
      }
      case TermKind::Star:
      case TermKind::Wand:
      case TermKind::And:
      case TermKind::Or: {
        Synthesis l = go(env, t->kid(0), Type::prop());
        Synthesis r = go(env, t->kid(1), Type::prop());
        bool additive = t->kind == TermKind::Star || t->kind == TermKind::Wand;
        return {Type::prop(), additive ? add(l.usage, r.usage) : join(l.usage, r.usage),
                with_kids(t, {l.term, r.term})};
      }
      case TermKind::Scale: {
        if (t->r->is_zero()) fail("scale", sp, "scaling a predicate requires r > 0");
        Synthesis s = go(env, t->kid(0), Type::prop());
        return {Type::prop(), scale(*t->r, s.usage), with_kids(t, {s.term})};
      }
      case TermKind::Not: {
        Synthesis s = go(env, t->kid(0), Type::prop());
        return {Type::prop(), s.usage, with_kids(t, {s.term})};
      }
      case TermKind::Exists:
      case TermKind::Forall: {
        TypePtr a = t->ty;
        if (!a) a = infer_coupling_binder(t->kid(0), t->x, env);
        if (!a) fail(kind_rule(t->kind), sp, "cannot infer the type of '" + t->x + "'; annotate the binder");
        Synthesis body = go(bind(env, t->x, a), t->kid(0), Type::prop());
        auto e = copy(t);
        e->ty = a;
        e->kids = {body.term};
        return {Type::prop(), without(body.usage, {t->x}), e};
      }
    }
    fail("internal", sp, "unhandled term");
  }
};

// Recognizes `let a = w in delta(let (l, r) = a in l)` (or r).
int marginal_of(const TermPtr& t, const std::string& w) {
  if (t->kind != TermKind::LetDist) return 0;
  const TermPtr& src = t->kid(0);
  if (src->kind != TermKind::Var || src->x != w) return 0;
  const TermPtr& d = t->kid(1);
  if (d->kind != TermKind::Dirac) return 0;
  const TermPtr& lt = d->kid(0);
  if (lt->kind != TermKind::LetTensor || lt->kid(0)->kind != TermKind::Var ||
      lt->kid(0)->x != t->x || lt->kid(1)->kind != TermKind::Var)
    return 0;
  if (lt->kid(1)->x == lt->x) return 1;
  if (lt->kid(1)->x == lt->y) return 2;
  return 0;
}

void find_marginals(const TermPtr& t, const std::string& w, const TypeEnv& env, TypePtr& left,
                    TypePtr& right) {
  if (t->kind == TermKind::Eq) {
    for (int side = 0; side < 2; ++side) {
      int m = marginal_of(t->kid(side), w);
      if (!m) continue;
      try {
        Synthesis other = Checker().go(env, t->kid(1 - side), nullptr);
        if (other.type->kind == TypeKind::Dist) (m == 1 ? left : right) = other.type->a;
      } catch (const TypeError&) {
      }
    }
    return;
  }
  if (t->kind == TermKind::Star || t->kind == TermKind::And || t->kind == TermKind::Scale)
    for (const auto& k : t->kids) find_marginals(k, w, env, left, right);
}

TypePtr infer_coupling_binder(const TermPtr& body, const std::string& w, const TypeEnv& env) {
  TypePtr left, right;
  find_marginals(body, w, env, left, right);
  if (!left || !right) return nullptr;
  return Type::dist(Type::tensor(left, Grade(1), Grade(1), right));
}

const Term* first_occurrence(const TermPtr& t, const std::string& x) {
  if (t->kind == TermKind::Var && t->x == x) return t.get();
  for (const auto& k : t->kids)
    if (const Term* o = first_occurrence(k, x)) return o;
  return nullptr;
}

}  // namespace

Synthesis synthesize(const TypeEnv& env, const TermPtr& t, const TypePtr& expected) {
  return Checker().go(env, t, expected);
}

CheckResult check(const TypeCtx& gamma, const TermPtr& t, const TypePtr& a) {
  CheckResult res;
  try {
    TypeEnv env;
    for (const auto& b : gamma) {
      if (env.count(b.name)) fail("ctx", t->span, "duplicate context variable '" + b.name + "'");
      env[b.name] = b.type;
    }
    Synthesis s = synthesize(env, t, a);
    res.usage = s.usage;
    res.type = s.type;
    res.elaborated = s.term;
    for (const auto& b : gamma) {
      Grade u = at(s.usage, b.name);
      if (b.grade < u) {
        const Term* occ = first_occurrence(t, b.name);
        fail("var", occ ? occ->span : t->span,
             "'" + b.name + "' is used with sensitivity " + u.str() + " but the context grants " +
                 b.grade.str());
      }
    }
    res.ok = true;
  } catch (const TypeError& e) {
    res.ok = false;
    res.error = e.info;
  }
  return res;
}

CheckResult checkPredicate(const TypeCtx& delta, const TermPtr& phi) {
  for (const auto& b : delta) {
    if (!b.grade.is_infinite()) {
      CheckResult r;
      r.error = TypeErrorInfo{"ctx", phi->span,
                              "logical context must be discrete but '" + b.name + "' has grade " +
                                  b.grade.str()};
      return r;
    }
  }
  return check(delta, phi, Type::prop());
}

std::vector<DeclReport> check_program(const Program& p) {
  std::vector<DeclReport> out;
  for (const auto& d : p.defs) out.push_back({d.name, "def", check(d.ctx, d.body, d.type)});
  for (const auto& j : p.judgments) {
    DeclReport r{j.name, "judgment", {}};
    r.result.ok = true;
    for (const auto& psi : j.judgment.psi) {
      r.result = checkPredicate(j.judgment.delta, psi);
      if (!r.result.ok) break;
    }
    if (r.result.ok) r.result = checkPredicate(j.judgment.delta, j.judgment.phi);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace qlog
