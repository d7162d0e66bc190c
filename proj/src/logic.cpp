#include "qlog/logic.hpp"

#include "qlog/typecheck.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <random>
#include <thread>

namespace qlog {

using nlohmann::json;

// ---------------------------------------------------------------- semantics

Approx evalProp(const TypeCtx& delta, const Env& env, const TermPtr& phi, const EvalOptions& opt) {
  CheckResult cr = checkPredicate(delta, phi);
  if (!cr.ok) throw LogicError("ill-formed predicate " + print_term(phi) + ": " + cr.error->text());
  return eval(env, cr.elaborated, opt);
}

namespace {

std::vector<ValuePtr> random_dists(const std::vector<ValuePtr>& base, std::mt19937_64& rng, int count) {
  std::vector<ValuePtr> out;
  if (base.empty()) return out;
  std::uniform_int_distribution<std::size_t> pick(0, base.size() - 1);
  std::uniform_int_distribution<int> weight(1, 8);
  std::size_t max_support = std::min<std::size_t>(3, base.size());
  std::uniform_int_distribution<std::size_t> size(1, max_support);
  for (int k = 0; k < count; ++k) {
    std::size_t n = size(rng);
    std::vector<std::pair<ValuePtr, int>> raw;
    int total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      int w = weight(rng);
      raw.push_back({base[pick(rng)], w});
      total += w;
    }
    std::vector<DistV::Atom> atoms;
    for (auto& [v, w] : raw) atoms.push_back({v, static_cast<double>(w) / total});
    out.push_back(v_dist(DistV::from_atoms(std::move(atoms))));
  }
  return out;
}

std::vector<ValuePtr> candidates(const Binding& b, const EnumSpec* spec, std::mt19937_64& rng, bool& sampled) {
  bool s = false;
  if (auto vals = enumerate_type(b.type, spec, &s)) {
    sampled = sampled || s;
    return *vals;
  }
  auto base_of = [&](const TypePtr& t) -> std::optional<std::vector<ValuePtr>> {
    bool s2 = false;
    if (auto v = enumerate_type(t, spec, &s2)) {
      sampled = sampled || s2;
      return v;
    }
    if (t->kind == TypeKind::Nat) {
      sampled = true;
      return std::vector<ValuePtr>{v_nat(0), v_nat(1), v_nat(2), v_nat(3)};
    }
    return std::nullopt;
  };
  if (b.type->kind == TypeKind::Nat) return *base_of(b.type);
  if (b.type->kind == TypeKind::Dist) {
    if (auto base = base_of(b.type->a)) {
      sampled = true;
      return random_dists(*base, rng, 6);
    }
  }
  throw LogicError("no environments for " + b.name + " : " + print_type(b.type) + "; add an enum entry");
}

}  // namespace

std::vector<EnvSample> sample_envs(const TypeCtx& delta, const EnumSpec* spec, std::size_t max_envs,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  bool sampled = false;
  std::vector<std::vector<ValuePtr>> cand;
  std::size_t total = 1;
  bool overflow = false;
  for (const auto& b : delta) {
    cand.push_back(candidates(b, spec, rng, sampled));
    if (cand.back().empty()) return {};
    if (total > max_envs / cand.back().size() + 1) overflow = true;
    total *= cand.back().size();
  }
  overflow = overflow || total > max_envs;
  auto build = [&](const std::vector<std::size_t>& idx) {
    EnvSample s;
    s.shown = json::object();
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const ValuePtr& v = cand[i][idx[i]];
      s.env = env_bind(s.env, delta[i].name, Approx{v, 0.0});
      s.shown[delta[i].name] = value_to_json(v);
    }
    s.sampled = sampled || overflow;
    return s;
  };
  std::vector<EnvSample> out;
  std::vector<std::size_t> idx(delta.size(), 0);
  if (!overflow) {
    for (;;) {
      out.push_back(build(idx));
      std::size_t i = 0;
      for (; i < idx.size(); ++i) {
        if (++idx[i] < cand[i].size()) break;
        idx[i] = 0;
      }
      if (i == idx.size()) break;
    }
    return out;
  }
  for (std::size_t k = 0; k < max_envs; ++k) {
    for (std::size_t i = 0; i < idx.size(); ++i)
      idx[i] = std::uniform_int_distribution<std::size_t>(0, cand[i].size() - 1)(rng);
    out.push_back(build(idx));
  }
  return out;
}

json SemanticReport::to_json() const {
  json m = json::array();
  for (const auto& e : margins)
    m.push_back({{"env", e.env}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"radius", e.radius}, {"margin", e.margin},
                 {"sampled", e.sampled}});
  json j{{"status", ok ? "ok" : "fail"}, {"one_sided", one_sided}, {"margins", m}};
  if (!error.empty()) j["error"] = error;
  return j;
}

SemanticReport checkSemantic(const LogicJudgment& j, const std::vector<EnvSample>& envs, const EvalOptions& opt,
                             double tol) {
  SemanticReport rep;
  std::vector<TermPtr> psi;
  TermPtr phi;
  try {
    for (const auto& p : j.psi) {
      CheckResult cr = checkPredicate(j.delta, p);
      if (!cr.ok) throw LogicError("ill-formed hypothesis " + print_term(p) + ": " + cr.error->text());
      psi.push_back(cr.elaborated);
    }
    CheckResult cr = checkPredicate(j.delta, j.phi);
    if (!cr.ok) throw LogicError("ill-formed goal " + print_term(j.phi) + ": " + cr.error->text());
    phi = cr.elaborated;
  } catch (const std::exception& e) {
    rep.ok = false;
    rep.error = e.what();
    return rep;
  }

  rep.margins.resize(envs.size());
  std::vector<std::string> errors(envs.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      EnvMargin& m = rep.margins[i];
      m.env = envs[i].shown;
      m.sampled = envs[i].sampled;
      try {
        double lhs = 0, rad = 0;
        for (const auto& p : psi) {
          Approx a = eval(envs[i].env, p, opt);
          lhs = oplus(lhs, a.value->prop);
          rad += a.radius;
          m.sampled = m.sampled || a.sampled;
        }
        Approx g = eval(envs[i].env, phi, opt);
        m.lhs = lhs;
        m.rhs = g.value->prop;
        m.radius = rad + g.radius;
        m.sampled = m.sampled || g.sampled;
        m.margin = m.lhs + m.radius + tol - m.rhs;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::size_t threads = opt.jobs > 0 ? opt.jobs : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, envs.size());
  if (threads <= 1) {
    work(0, envs.size());
  } else {
    std::vector<std::future<void>> fs;
    std::size_t chunk = (envs.size() + threads - 1) / threads;
    for (std::size_t lo = 0; lo < envs.size(); lo += chunk)
      fs.push_back(std::async(std::launch::async, work, lo, std::min(envs.size(), lo + chunk)));
    for (auto& f : fs) f.get();
  }
  for (std::size_t i = 0; i < envs.size(); ++i) {
    if (!errors[i].empty()) {
      rep.ok = false;
      if (rep.error.empty()) rep.error = errors[i];
      continue;
    }
    if (rep.margins[i].margin < 0) rep.ok = false;
    rep.one_sided = rep.one_sided || rep.margins[i].sampled;
  }
  return rep;
}

Approx couplingValue(const TermPtr& rel, const std::string& x, const std::string& y, const TypePtr& a,
                     const TypePtr& b, const DistV& rho, const DistV& mu, const DistV& nu, const TypeCtx& delta,
                     const Env& env, const EvalOptions& opt) {
  TypeCtx d2 = delta;
  d2.push_back({x, Grade::infinity(), a});
  d2.push_back({y, Grade::infinity(), b});
  CheckResult cr = checkPredicate(d2, rel);
  if (!cr.ok) throw LogicError("ill-formed relation: " + cr.error->text());
  double mean = rho.residual(), rad = 0;
  bool sampled = false;
  std::vector<DistV::Atom> left, right;
  for (const auto& [v, w] : rho.atoms()) {
    if (v->kind != VKind::Pair && v->kind != VKind::TPair) throw LogicError("coupling atoms must be pairs");
    Env e = env_bind(env_bind(env, x, Approx{v->a, 0.0}), y, Approx{v->b, 0.0});
    Approx r = eval(e, cr.elaborated, opt);
    mean += w * r.value->prop;
    rad = std::max(rad, r.radius);
    sampled = sampled || r.sampled;
    left.push_back({v->a, w});
    right.push_back({v->b, w});
  }
  DistV m1 = DistV::from_atoms(std::move(left), rho.residual(), rho.residual_kind());
  DistV m2 = DistV::from_atoms(std::move(right), rho.residual(), rho.residual_kind());
  auto metric = [&](const TypePtr& t) {
    return [&, t](const ValuePtr& p, const ValuePtr& q) { return distanceAt(t, p, q, opt).value; };
  };
  double k1 = coupling_infimum(m1, mu, metric(a));
  double k2 = coupling_infimum(m2, nu, metric(b));
  return Approx{v_prop(std::min(1.0, mean + k1 + k2)), rad, sampled};
}

// ---------------------------------------------------------------- normalization

namespace {

std::shared_ptr<Term> clone(const TermPtr& t) { return std::make_shared<Term>(*t); }

TermPtr var(const std::string& x) { return mk_var(x); }

std::set<std::string> all_names(const TermPtr& t) {
  std::set<std::string> s = free_vars(t);
  if (!t->x.empty()) s.insert(t->x);
  if (!t->y.empty()) s.insert(t->y);
  for (const auto& k : t->kids) {
    auto ks = all_names(k);
    s.insert(ks.begin(), ks.end());
  }
  return s;
}

// body[a/x, b/y] simultaneously.
TermPtr subst2(const TermPtr& body, const std::string& x, const TermPtr& a, const std::string& y, const TermPtr& b) {
  std::set<std::string> avoid = all_names(body);
  for (auto& n : free_vars(a)) avoid.insert(n);
  for (auto& n : free_vars(b)) avoid.insert(n);
  std::string fx = fresh_name("_s", avoid);
  avoid.insert(fx);
  std::string fy = fresh_name("_s", avoid);
  TermPtr t = subst(subst(body, x, var(fx)), y, var(fy));
  return subst(subst(t, fx, a), fy, b);
}

struct Normalizer {
  long budget = 200000;

  TermPtr unfold_fix(const TermPtr& t) {
    if (t->kind == TermKind::Fix) return subst(t->kid(0), t->x, t);
    if (t->kids.empty()) return t;
    std::vector<TermPtr> kids;
    for (const auto& k : t->kids) kids.push_back(unfold_fix(k));
    return with_kids(t, std::move(kids));
  }

  void flatten(const TermPtr& t, const Rational& w, std::vector<std::pair<TermPtr, Rational>>& out) {
    if (t->kind == TermKind::Convex && t->r && !t->r->is_infinite()) {
      const Rational& p = t->r->rational();
      flatten(t->kid(0), w * p, out);
      flatten(t->kid(1), w * (1 - p), out);
      return;
    }
    for (auto& [leaf, lw] : out)
      if (alpha_equal(leaf, t)) {
        lw += w;
        return;
      }
    out.push_back({t, w});
  }

  TermPtr convex_nf(const TermPtr& t) {
    std::vector<std::pair<TermPtr, Rational>> leaves;
    flatten(t, Rational(1), leaves);
    leaves.erase(std::remove_if(leaves.begin(), leaves.end(), [](auto& l) { return l.second == 0; }), leaves.end());
    std::stable_sort(leaves.begin(), leaves.end(),
                     [](const auto& a, const auto& b) { return print_term(a.first) < print_term(b.first); });
    TermPtr acc = leaves.back().first;
    Rational mass = leaves.back().second;
    for (std::size_t i = leaves.size() - 1; i-- > 0;) {
      Rational total = mass + leaves[i].second;
      auto n = clone(t);
      n->kids = {leaves[i].first, acc};
      n->r = Grade(leaves[i].second / total);
      n->span = {};
      acc = n;
      mass = total;
    }
    return acc;
  }

  TermPtr step(const TermPtr& t) {
    switch (t->kind) {
      case TermKind::Ann:
        return t->kid(0);
      case TermKind::App:
        if (t->kid(0)->kind == TermKind::Lam) return subst(t->kid(0)->kid(0), t->kid(0)->x, t->kid(1));
        break;
      case TermKind::Proj:
        if (t->kid(0)->kind == TermKind::Pair) return t->kid(0)->kid(t->index == 1 ? 0 : 1);
        break;
      case TermKind::Case:
        if (t->kid(0)->kind == TermKind::Inj) {
          bool left = t->kid(0)->index == 1;
          return subst(t->kid(left ? 1 : 2), left ? t->x : t->y, t->kid(0)->kid(0));
        }
        break;
      case TermKind::LetTensor:
        if (t->kid(0)->kind == TermKind::TPair)
          return subst2(t->kid(1), t->x, t->kid(0)->kid(0), t->y, t->kid(0)->kid(1));
        break;
      case TermKind::LetDist: {
        const TermPtr& m = t->kid(0);
        const TermPtr& body = t->kid(1);
        if (m->kind == TermKind::Dirac) return subst(body, t->x, m->kid(0));
        if (m->kind == TermKind::Convex) {
          auto l = clone(t), r = clone(t);
          l->kids = {m->kid(0), body};
          r->kids = {m->kid(1), body};
          return with_kids(m, {l, r});
        }
        if (m->kind == TermKind::LetDist) {
          // let x = (let y = a in b) in c  ~>  let y = a in (let x = b in c)
          std::set<std::string> avoid = all_names(body);
          for (auto& n : all_names(m)) avoid.insert(n);
          std::string y = fresh_name(m->x, avoid);
          auto inner = clone(t);
          inner->kids = {subst(m->kid(1), m->x, var(y)), body};
          auto outer = clone(m);
          outer->x = y;
          outer->kids = {m->kid(0), inner};
          return outer;
        }
        if (body->kind == TermKind::Dirac && body->kid(0)->kind == TermKind::Var && body->kid(0)->x == t->x)
          return m;
        break;
      }
      case TermKind::Rec: {
        const TermPtr& n = t->kid(2);
        if (n->kind == TermKind::Zero) return t->kid(0);
        if (n->kind == TermKind::Succ) {
          auto prev = clone(t);
          prev->kids = {t->kid(0), t->kid(1), n->kid(0)};
          return subst2(t->kid(1), t->x, prev, t->y, n->kid(0));
        }
        break;
      }
      case TermKind::Unfold:
        if (t->kid(0)->kind == TermKind::Fold) {
          auto p = std::make_shared<Term>();
          p->kind = TermKind::TPair;
          p->kids = {t->kid(0)->kid(0), t->kid(0)->kid(1)};
          return p;
        }
        break;
      case TermKind::Convex: {
        TermPtr c = convex_nf(t);
        if (!alpha_equal(c, t)) return c;
        break;
      }
      default:
        break;
    }
    return nullptr;
  }

  TermPtr norm(const TermPtr& t) {
    if (--budget < 0) throw LogicError("normalization budget exhausted");
    TermPtr cur = t;
    if (!cur->kids.empty()) {
      std::vector<TermPtr> kids;
      bool changed = false;
      for (const auto& k : cur->kids) {
        kids.push_back(norm(k));
        changed = changed || kids.back() != k;
      }
      if (changed) cur = with_kids(cur, std::move(kids));
    }
    if (TermPtr next = step(cur)) return norm(next);
    return cur;
  }
};

}  // namespace

TermPtr normalize(const TermPtr& t, int unfold) {
  Normalizer n;
  TermPtr u = t;
  for (int k = 0; k < unfold; ++k) u = n.unfold_fix(u);
  return n.norm(u);
}

bool judgmentally_equal(const TermPtr& a, const TermPtr& b, int unfold) {
  return alpha_equal(normalize(a, unfold), normalize(b, unfold));
}

// ---------------------------------------------------------------- rule table

const std::vector<std::string>& rule_names() {
  static const std::vector<std::string> names = {
      "true",    "false",   "ass",      "ex",       "pr",       "dup-up",     "dup-down", "der-up",
      "der-down", "inc",    "assoc1",   "assoc2",   "g-rec",    "star-i",     "star-e",   "wand-i",
      "wand-e",  "not-i",   "and-i",    "and-el",   "and-er",   "not-e",      "or-il",    "or-ir",
      "or-e",    "exists-i", "exists-e", "forall-i", "forall-e", "eq-i",      "eq-e",     "ind-tensor",
      "ind-sum", "ind-nat", "ind-dist", "scale-exists", "scale-forall"};
  return names;
}

std::optional<std::string> canonical_rule(const std::string& name) {
  static const std::map<std::string, std::string> alias = {
      {"dup↑", "dup-up"},       {"dup↓", "dup-down"},     {"der↑", "der-up"},       {"der↓", "der-down"},
      {"assoc₁", "assoc1"},     {"assoc₂", "assoc2"},     {"*-i", "star-i"},        {"*-e", "star-e"},
      {"−*-i", "wand-i"},       {"−*-e", "wand-e"},       {"-*-i", "wand-i"},       {"-*-e", "wand-e"},
      {"¬-i", "not-i"},         {"¬-e", "not-e"},         {"∧-i", "and-i"},         {"∧-el", "and-el"},
      {"∧-er", "and-er"},       {"∨-il", "or-il"},        {"∨-ir", "or-ir"},        {"∨-e", "or-e"},
      {"∃-i", "exists-i"},      {"∃-e", "exists-e"},      {"∀-i", "forall-i"},      {"∀-e", "forall-e"},
      {"ind⊗", "ind-tensor"},   {"ind₊", "ind-sum"},      {"ind+", "ind-sum"},      {"ind_N", "ind-nat"},
      {"ind_D", "ind-dist"},    {"indN", "ind-nat"},      {"indD", "ind-dist"}};
  const auto& names = rule_names();
  if (std::find(names.begin(), names.end(), name) != names.end()) return name;
  auto it = alias.find(name);
  if (it != alias.end()) return it->second;
  return std::nullopt;
}

namespace {

Derivation parse_node(const json& j, const Program* env, const std::string& path) {
  auto where = [&](const std::string& msg) { return LogicError(path + ": " + msg); };
  if (!j.is_object()) throw where("derivation node must be an object");
  Derivation d;
  if (!j.contains("rule") || !j["rule"].is_string()) throw where("missing rule");
  auto rule = canonical_rule(j["rule"].get<std::string>());
  if (!rule) throw where("unknown rule '" + j["rule"].get<std::string>() + "'");
  d.rule = *rule;
  if (!j.contains("judgment") || !j["judgment"].is_string()) throw where("missing judgment");
  d.judgment_text = j["judgment"].get<std::string>();
  try {
    d.judgment = parse_judgment(d.judgment_text, env);
  } catch (const ParseError& e) {
    throw where("judgment does not parse: " + std::string(e.what()));
  }
  d.params = j.value("params", json::object());
  json kids = j.value("children", json::array());
  for (std::size_t i = 0; i < kids.size(); ++i) {
    if (d.rule == "ind-dist" && i == 1) {
      d.templ = kids[i];
      continue;
    }
    d.children.push_back(parse_node(kids[i], env, path + "/" + std::to_string(i)));
  }
  return d;
}

// Replaces $p and $q (= 1 - p) in every string of a template.
json instantiate(const json& j, const std::string& p, const std::string& q) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    for (auto [tok, rep] : {std::pair<std::string, std::string>{"$p", p}, {"$q", q}}) {
      for (std::size_t pos = 0; (pos = s.find(tok, pos)) != std::string::npos; pos += rep.size())
        s.replace(pos, tok.size(), rep);
    }
    return s;
  }
  if (j.is_array() || j.is_object()) {
    json out = j;
    for (auto& [k, v] : out.items()) v = instantiate(v, p, q);
    return out;
  }
  return j;
}

using Preds = std::vector<TermPtr>;

TermPtr mk_scale(const Grade& r, const TermPtr& a) {
  auto t = std::make_shared<Term>();
  t->kind = TermKind::Scale;
  t->r = r;
  t->kids = {a};
  return t;
}

TermPtr mk_node(TermKind k, std::vector<TermPtr> kids) {
  auto t = std::make_shared<Term>();
  t->kind = k;
  t->kids = std::move(kids);
  return t;
}

bool is_scale(const TermPtr& t, Grade& r, TermPtr& body) {
  if (t->kind != TermKind::Scale || !t->r) return false;
  r = *t->r;
  body = t->kid(0);
  return true;
}

Preds without(const Preds& ps, std::initializer_list<std::size_t> idx) {
  Preds out;
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) out.push_back(ps[i]);
  return out;
}

Preds plus(Preds a, const Preds& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

class Checker {
public:
  Checker(const Program* env, DerivationReport& rep) : env_(env), rep_(rep) {}

  void run(const Derivation& d, const std::string& path) {
    ++rep_.nodes;
    rep_.rules.insert(d.rule);
    if (d.rule == "not-e") rep_.classical = true;
    unfold_ = d.params.value("unfold", 0);
    path_ = path;
    rule_ = d.rule;
    try {
      well_formed(d.judgment);
      check_rule(d);
    } catch (const LogicError& e) {
      fail(e.what());
    } catch (const std::exception& e) {
      fail(std::string("error: ") + e.what());
    }
    for (std::size_t i = 0; i < d.children.size(); ++i) run(d.children[i], path + "/" + std::to_string(i));
  }

private:
  const Program* env_;
  DerivationReport& rep_;
  int unfold_ = 0;
  std::string path_, rule_;
  std::map<std::pair<const Term*, int>, TermPtr> nf_cache_;
  std::vector<TermPtr> keep_;  // keeps cached keys alive

  void fail(const std::string& msg) {
    rep_.ok = false;
    rep_.violations.push_back({path_, rule_, msg});
  }

  [[noreturn]] void bad(const std::string& msg) { throw LogicError(msg); }

  void require(bool cond, const std::string& msg) {
    if (!cond) bad(msg);
  }

  TermPtr nf(const TermPtr& t, int unfold) {
    auto key = std::make_pair(t.get(), unfold);
    auto it = nf_cache_.find(key);
    if (it != nf_cache_.end()) return it->second;
    keep_.push_back(t);
    return nf_cache_[key] = normalize(t, unfold);
  }

  // Each side may be unrolled independently, up to the node's unfold count.
  bool eq(const TermPtr& a, const TermPtr& b) {
    for (int i = 0; i <= unfold_; ++i)
      for (int k = 0; k <= unfold_; ++k)
        if (alpha_equal(nf(a, i), nf(b, k))) return true;
    return false;
  }

  bool ms_eq(const Preds& a, const Preds& b) {
    if (a.size() != b.size()) return false;
    std::vector<bool> used(b.size(), false);
    for (const auto& x : a) {
      bool found = false;
      for (std::size_t j = 0; j < b.size() && !found; ++j)
        if (!used[j] && eq(x, b[j])) used[j] = found = true;
      if (!found) return false;
    }
    return true;
  }

  std::string show(const Preds& ps) {
    std::string s;
    for (std::size_t i = 0; i < ps.size(); ++i) s += (i ? ", " : "") + print_term(ps[i]);
    return s.empty() ? "." : s;
  }

  void well_formed(const LogicJudgment& j) {
    for (const auto& b : j.delta)
      require(b.grade.is_infinite(), "context variable " + b.name + " must have grade inf");
    auto chk = [&](const TermPtr& p) {
      CheckResult cr = checkPredicate(j.delta, p);
      if (!cr.ok) bad("ill-formed judgment: " + print_term(p) + ": " + cr.error->text());
    };
    for (const auto& p : j.psi) chk(p);
    chk(j.phi);
  }

  void arity(const Derivation& d, std::size_t n) {
    require(d.children.size() == n, "expects " + std::to_string(n) + " premise(s), got " +
                                         std::to_string(d.children.size()));
  }

  bool same_delta(const TypeCtx& a, const TypeCtx& b) {
    if (a.size() != b.size()) return false;
    for (const auto& x : a) {
      auto it = std::find_if(b.begin(), b.end(), [&](const Binding& y) { return y.name == x.name; });
      if (it == b.end() || !type_equal(it->type, x.type)) return false;
    }
    return true;
  }

  // New variables of the child context, in order.
  TypeCtx extension(const TypeCtx& parent, const TypeCtx& child, std::size_t count) {
    TypeCtx extra;
    for (const auto& b : child) {
      auto it = std::find_if(parent.begin(), parent.end(), [&](const Binding& p) { return p.name == b.name; });
      if (it == parent.end()) extra.push_back(b);
      else require(type_equal(it->type, b.type), "premise changes the type of " + b.name);
    }
    require(child.size() == parent.size() + extra.size(), "premise drops context variables");
    require(extra.size() == count, "premise must extend the context by " + std::to_string(count) +
                                       " variable(s)");
    return extra;
  }

  void same_ctx(const Derivation& d, const Derivation& c) {
    require(same_delta(d.judgment.delta, c.judgment.delta), "premise has a different term context");
  }

  void hyps(const Preds& got, const Preds& want) {
    require(ms_eq(got, want), "premise hypotheses are {" + show(got) + "}, expected {" + show(want) + "}");
  }

  void goal(const TermPtr& got, const TermPtr& want) {
    require(eq(got, want), "goal is " + print_term(got) + ", expected " + print_term(want));
  }

  Grade grade_param(const Derivation& d, const char* key) {
    const json& v = d.params.at(key);
    if (v.is_number_integer()) return Grade(v.get<long long>());
    if (v.is_string()) return Grade::parse(v.get<std::string>());
    bad(std::string("parameter ") + key + " must be a grade");
  }
  std::optional<Grade> opt_grade(const Derivation& d, const char* key) {
    if (!d.params.contains(key)) return std::nullopt;
    return grade_param(d, key);
  }
  TermPtr term_param(const Derivation& d, const char* key) {
    require(d.params.contains(key) && d.params[key].is_string(), std::string("missing parameter ") + key);
    return parse_term(d.params[key].get<std::string>(), env_);
  }
  std::string name_param(const Derivation& d, const char* key) {
    require(d.params.contains(key) && d.params[key].is_string(), std::string("missing parameter ") + key);
    return d.params[key].get<std::string>();
  }

  TypePtr type_of(const TypeCtx& delta, const TermPtr& t) {
    CheckResult cr = check(delta, t, nullptr);
    if (!cr.ok) bad("term " + print_term(t) + " is ill-typed: " + cr.error->text());
    return cr.type;
  }

  void has_type(const TypeCtx& delta, const TermPtr& t, const TypePtr& a) {
    CheckResult cr = check(delta, t, a);
    if (!cr.ok) bad("term " + print_term(t) + " does not have type " + print_type(a) + ": " + cr.error->text());
  }

  // Binder type of a quantifier, read from the elaborated predicate.
  TypePtr quant_type(const TypeCtx& delta, const TermPtr& q) {
    if (q->ty) return q->ty;
    CheckResult cr = checkPredicate(delta, q);
    require(cr.ok && cr.elaborated->ty, "cannot determine the quantified type of " + print_term(q));
    return cr.elaborated->ty;
  }

  void sensitive(const TypeCtx& delta, const std::string& x, const Grade& r, const TypePtr& a, const TermPtr& pred) {
    require(std::none_of(delta.begin(), delta.end(), [&](const Binding& b) { return b.name == x; }),
            "variable " + x + " already occurs in the context");
    TypeCtx g = delta;
    g.push_back({x, r, a});
    CheckResult cr = check(g, pred, Type::prop());
    if (!cr.ok) bad("predicate " + print_term(pred) + " is not " + r.str() + "-sensitive in " + x + ": " +
                    cr.error->text());
  }

  void check_rule(const Derivation& d) {
    const LogicJudgment& J = d.judgment;
    const Preds& Psi = J.psi;
    const TermPtr& phi = J.phi;
    const std::string& r = d.rule;
    auto child = [&](std::size_t i) -> const LogicJudgment& { return d.children.at(i).judgment; };

    if (r == "true") {
      arity(d, 0);
      require(eq(phi, mk_node(TermKind::Tt, {})), "goal must be tt");
    } else if (r == "false") {
      arity(d, 0);
      auto ff = mk_node(TermKind::Ff, {});
      require(std::any_of(Psi.begin(), Psi.end(), [&](auto& p) { return eq(p, ff); }), "no ff among hypotheses");
    } else if (r == "ass") {
      arity(d, 0);
      require(std::any_of(Psi.begin(), Psi.end(), [&](auto& p) { return eq(p, phi); }),
              "goal " + print_term(phi) + " is not a hypothesis");
    } else if (r == "ex") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      hyps(child(0).psi, Psi);
      goal(child(0).phi, phi);
    } else if (r == "pr") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      Grade s;
      TermPtr body;
      require(is_scale(phi, s, body), "goal must be scaled");
      if (auto g = opt_grade(d, "r")) require(*g == s, "goal scale differs from parameter r");
      goal(mk_scale(s, child(0).phi), phi);
      Preds want;
      for (const auto& p : child(0).psi) want.push_back(mk_scale(s, p));
      require(ms_eq(Psi, want), "hypotheses must be the premise hypotheses scaled by " + s.str());
    } else if (r == "dup-down" || r == "dup-up") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      goal(child(0).phi, phi);
      // split side: the one holding r phi, s phi
      const Preds& split = r == "dup-down" ? Psi : child(0).psi;
      const Preds& merged = r == "dup-down" ? child(0).psi : Psi;
      bool ok = false;
      for (std::size_t i = 0; i < split.size() && !ok; ++i)
        for (std::size_t k = i + 1; k < split.size() && !ok; ++k) {
          Grade a, b;
          TermPtr x, y;
          if (!is_scale(split[i], a, x) || !is_scale(split[k], b, y) || !eq(x, y)) continue;
          ok = ms_eq(merged, plus(without(split, {i, k}), {mk_scale(a + b, x)}));
        }
      require(ok, "no pair r phi, s phi matching (r+s) phi in the other judgment");
    } else if (r == "der-down" || r == "der-up") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      goal(child(0).phi, phi);
      const Preds& scaled = r == "der-down" ? Psi : child(0).psi;
      const Preds& plain = r == "der-down" ? child(0).psi : Psi;
      bool ok = false;
      for (std::size_t i = 0; i < scaled.size() && !ok; ++i) {
        Grade a;
        TermPtr x;
        if (!is_scale(scaled[i], a, x) || !(a == Grade(1))) continue;
        ok = ms_eq(plain, plus(without(scaled, {i}), {x}));
      }
      require(ok, "no hypothesis 1 psi matching psi in the other judgment");
    } else if (r == "inc") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      goal(child(0).phi, phi);
      const Preds& cp = child(0).psi;
      bool ok = false, order_fail = false;
      for (std::size_t i = 0; i < cp.size() && !ok; ++i)
        for (std::size_t k = 0; k < Psi.size() && !ok; ++k) {
          Grade a, b;
          TermPtr x, y;
          if (!is_scale(cp[i], a, x) || !is_scale(Psi[k], b, y) || !eq(x, y)) continue;
          if (!ms_eq(without(cp, {i}), without(Psi, {k}))) continue;
          if (a <= b) ok = true;
          else order_fail = true;
        }
      require(ok, order_fail ? "side condition r <= s fails" : "no hypothesis r psi weakened to s psi");
    } else if (r == "assoc1") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      goal(child(0).phi, phi);
      const Preds& cp = child(0).psi;
      bool ok = false;
      for (std::size_t i = 0; i < cp.size() && !ok; ++i) {
        Grade a, b;
        TermPtr x, y;
        if (!is_scale(cp[i], a, x) || !is_scale(x, b, y)) continue;
        ok = ms_eq(Psi, plus(without(cp, {i}), {mk_scale(a * b, y)}));
      }
      require(ok, "no hypothesis r(s psi) matching (rs) psi");
    } else if (r == "assoc2") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      goal(child(0).phi, phi);
      const Preds& cp = child(0).psi;
      bool ok = false, side = false;
      for (std::size_t k = 0; k < Psi.size() && !ok; ++k) {
        Grade a, p;
        TermPtr x, y;
        if (!is_scale(Psi[k], a, x) || !is_scale(x, p, y)) continue;
        if (!ms_eq(cp, plus(without(Psi, {k}), {mk_scale(a * p, y)}))) continue;
        if (p <= Grade(1) || a >= Grade(1)) ok = true;
        else side = true;
      }
      require(ok, side ? "side condition p <= 1 or r >= 1 fails" : "no hypothesis r(p psi) matching (rp) psi");
    } else if (r == "g-rec") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      goal(child(0).phi, phi);
      std::optional<Grade> p = opt_grade(d, "p");
      if (!p) {
        for (const auto& h : child(0).psi) {
          Grade a;
          TermPtr x;
          if (is_scale(h, a, x) && eq(x, phi)) p = a;
        }
        require(p.has_value(), "premise lacks the hypothesis p phi");
      }
      require(*p > Grade(0) && *p < Grade(1), "side condition p in (0,1) fails for p = " + p->str());
      Preds want;
      for (const auto& h : Psi) want.push_back(mk_scale(Grade(1) - *p, h));
      want.push_back(mk_scale(*p, phi));
      hyps(child(0).psi, want);
    } else if (r == "star-i") {
      arity(d, 2);
      same_ctx(d, d.children[0]);
      same_ctx(d, d.children[1]);
      require(phi->kind == TermKind::Star, "goal must be a * b");
      goal(child(0).phi, phi->kid(0));
      goal(child(1).phi, phi->kid(1));
      hyps(Psi, plus(child(0).psi, child(1).psi));
    } else if (r == "star-e") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      goal(child(0).phi, phi);
      bool ok = false;
      for (std::size_t i = 0; i < Psi.size() && !ok; ++i)
        if (Psi[i]->kind == TermKind::Star)
          ok = ms_eq(child(0).psi, plus(without(Psi, {i}), {Psi[i]->kid(0), Psi[i]->kid(1)}));
      require(ok, "no hypothesis a * b split in the premise");
    } else if (r == "wand-i") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      require(phi->kind == TermKind::Wand, "goal must be a -* b");
      goal(child(0).phi, phi->kid(1));
      hyps(child(0).psi, plus(Psi, {phi->kid(0)}));
    } else if (r == "wand-e") {
      arity(d, 2);
      same_ctx(d, d.children[0]);
      same_ctx(d, d.children[1]);
      const TermPtr& w = child(0).phi;
      require(w->kind == TermKind::Wand, "first premise must prove a -* b");
      goal(w->kid(1), phi);
      goal(child(1).phi, w->kid(0));
      hyps(Psi, plus(child(0).psi, child(1).psi));
    } else if (r == "not-i") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      require(phi->kind == TermKind::Not, "goal must be a negation");
      goal(child(0).phi, mk_node(TermKind::Ff, {}));
      hyps(child(0).psi, plus(Psi, {phi->kid(0)}));
    } else if (r == "not-e") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      goal(child(0).phi, mk_node(TermKind::Ff, {}));
      hyps(child(0).psi, plus(Psi, {mk_node(TermKind::Not, {phi})}));
    } else if (r == "and-i") {
      arity(d, 2);
      require(phi->kind == TermKind::And, "goal must be a conjunction");
      for (std::size_t i = 0; i < 2; ++i) {
        same_ctx(d, d.children[i]);
        hyps(child(i).psi, Psi);
        goal(child(i).phi, phi->kid(i));
      }
    } else if (r == "and-el" || r == "and-er") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      hyps(child(0).psi, Psi);
      require(child(0).phi->kind == TermKind::And, "premise must prove a conjunction");
      goal(child(0).phi->kid(r == "and-el" ? 0 : 1), phi);
    } else if (r == "or-il" || r == "or-ir") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      hyps(child(0).psi, Psi);
      require(phi->kind == TermKind::Or, "goal must be a disjunction");
      goal(child(0).phi, phi->kid(r == "or-il" ? 0 : 1));
    } else if (r == "or-e") {
      arity(d, 2);
      same_ctx(d, d.children[0]);
      same_ctx(d, d.children[1]);
      goal(child(0).phi, phi);
      goal(child(1).phi, phi);
      bool ok = false;
      for (std::size_t i = 0; i < Psi.size() && !ok; ++i)
        if (Psi[i]->kind == TermKind::Or)
          ok = ms_eq(child(0).psi, plus(without(Psi, {i}), {Psi[i]->kid(0)})) &&
               ms_eq(child(1).psi, plus(without(Psi, {i}), {Psi[i]->kid(1)}));
      require(ok, "no hypothesis a \\/ b matching the two cases");
    } else if (r == "exists-i") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      require(phi->kind == TermKind::Exists, "goal must be an existential");
      TermPtr t = term_param(d, "witness");
      has_type(J.delta, t, quant_type(J.delta, phi));
      hyps(child(0).psi, Psi);
      goal(child(0).phi, subst(phi->kid(0), phi->x, t));
    } else if (r == "forall-e") {
      arity(d, 1);
      same_ctx(d, d.children[0]);
      const TermPtr& q = child(0).phi;
      require(q->kind == TermKind::Forall, "premise must prove a universal");
      TermPtr t = term_param(d, "witness");
      has_type(J.delta, t, quant_type(J.delta, q));
      hyps(child(0).psi, Psi);
      goal(phi, subst(q->kid(0), q->x, t));
    } else if (r == "exists-e") {
      arity(d, 1);
      TypeCtx extra = extension(J.delta, child(0).delta, 1);
      goal(child(0).phi, phi);
      bool ok = false, infinite = false;
      for (std::size_t i = 0; i < Psi.size() && !ok; ++i) {
        Grade a;
        TermPtr q;
        if (!is_scale(Psi[i], a, q) || q->kind != TermKind::Exists) continue;
        if (!type_equal(quant_type(J.delta, q), extra[0].type)) continue;
        TermPtr inst = mk_scale(a, subst(q->kid(0), q->x, mk_var(extra[0].name)));
        if (!ms_eq(child(0).psi, plus(without(Psi, {i}), {inst}))) continue;
        if (a.is_infinite()) infinite = true;
        else ok = true;
      }
      require(ok, infinite ? "side condition r < inf fails" : "no hypothesis r(exists x. phi) opened in the premise");
    } else if (r == "forall-i") {
      arity(d, 1);
      TypeCtx extra = extension(J.delta, child(0).delta, 1);
      hyps(child(0).psi, Psi);
      Grade a;
      TermPtr q;
      require(is_scale(phi, a, q) && q->kind == TermKind::Forall, "goal must be r(forall x. phi)");
      require(type_equal(quant_type(J.delta, q), extra[0].type), "eigenvariable has the wrong type");
      goal(child(0).phi, mk_scale(a, subst(q->kid(0), q->x, mk_var(extra[0].name))));
    } else if (r == "scale-exists" || r == "scale-forall") {
      // r(Q x. phi) and Q x. r phi are interderivable (r finite for exists).
      arity(d, 1);
      same_ctx(d, d.children[0]);
      hyps(child(0).psi, Psi);
      TermKind qk = r == "scale-exists" ? TermKind::Exists : TermKind::Forall;
      auto swap_form = [&](const TermPtr& t) -> TermPtr {
        Grade a;
        TermPtr q;
        if (is_scale(t, a, q) && q->kind == qk) {
          require(qk == TermKind::Forall || !a.is_infinite(), "side condition r < inf fails");
          auto n = clone(q);
          n->kids = {mk_scale(a, q->kid(0))};
          return n;
        }
        if (t->kind == qk && is_scale(t->kid(0), a, q)) {
          require(qk == TermKind::Forall || !a.is_infinite(), "side condition r < inf fails");
          auto n = clone(t);
          n->kids = {q};
          return mk_scale(a, n);
        }
        return nullptr;
      };
      TermPtr other = swap_form(child(0).phi);
      require(other != nullptr, "premise goal has neither form");
      goal(phi, other);
    } else if (r == "eq-i") {
      arity(d, 0);
      require(phi->kind == TermKind::Eq, "goal must be an equation");
      require(eq(phi->kid(0), phi->kid(1)), "sides differ: " + print_term(phi->kid(0)) + " vs " +
                                                 print_term(phi->kid(1)));
    } else if (r == "eq-e") {
      arity(d, 2);
      same_ctx(d, d.children[0]);
      same_ctx(d, d.children[1]);
      std::string x = name_param(d, "var");
      TermPtr pred = term_param(d, "pred");
      Grade s(1);
      TermPtr e = child(1).phi, body;
      if (is_scale(e, s, body)) e = body;
      require(e->kind == TermKind::Eq, "second premise must prove r(t = u)");
      if (auto g = opt_grade(d, "r")) require(*g == s, "second premise scale differs from parameter r");
      const TermPtr& t = e->kid(0);
      const TermPtr& u = e->kid(1);
      TypePtr a = d.params.contains("type") ? parse_type(d.params["type"].get<std::string>(), env_)
                                            : type_of(J.delta, t);
      has_type(J.delta, t, a);
      has_type(J.delta, u, a);
      sensitive(J.delta, x, s, a, pred);
      goal(child(0).phi, subst(pred, x, t));
      goal(phi, subst(pred, x, u));
      hyps(Psi, plus(child(0).psi, child(1).psi));
    } else if (r == "ind-tensor" || r == "ind-sum" || r == "ind-nat" || r == "ind-dist") {
      std::string z = name_param(d, "var");
      TermPtr pred = term_param(d, "pred");
      TermPtr t = term_param(d, "term");
      TypePtr ty = type_of(J.delta, t);
      goal(phi, subst(pred, z, t));
      if (r == "ind-tensor") {
        require(ty->kind == TypeKind::Tensor, "term must have a tensor type");
        arity(d, 1);
        TypeCtx extra = extension(J.delta, child(0).delta, 2);
        require(type_equal(extra[0].type, ty->a) && type_equal(extra[1].type, ty->b),
                "new variables must have the component types");
        hyps(child(0).psi, Psi);
        auto pair = mk_node(TermKind::TPair, {mk_var(extra[0].name), mk_var(extra[1].name)});
        goal(child(0).phi, subst(pred, z, pair));
      } else if (r == "ind-sum") {
        require(ty->kind == TypeKind::Sum, "term must have a sum type");
        arity(d, 2);
        for (int i = 0; i < 2; ++i) {
          TypeCtx extra = extension(J.delta, child(i).delta, 1);
          require(type_equal(extra[0].type, i == 0 ? ty->a : ty->b), "new variable must have the summand type");
          hyps(child(i).psi, Psi);
          auto inj = std::make_shared<Term>();
          inj->kind = TermKind::Inj;
          inj->index = i + 1;
          inj->ty = ty;
          inj->kids = {mk_var(extra[0].name)};
          goal(child(i).phi, subst(pred, z, inj));
        }
      } else if (r == "ind-nat") {
        require(ty->kind == TypeKind::Nat, "term must have type Nat");
        arity(d, 2);
        same_ctx(d, d.children[0]);
        hyps(child(0).psi, Psi);
        goal(child(0).phi, subst(pred, z, mk_node(TermKind::Zero, {})));
        TypeCtx extra = extension(J.delta, child(1).delta, 1);
        require(extra[0].type->kind == TypeKind::Nat, "induction variable must have type Nat");
        TermPtr m = mk_var(extra[0].name);
        hyps(child(1).psi, {subst(pred, z, m)});
        goal(child(1).phi, subst(pred, z, mk_node(TermKind::Succ, {m})));
      } else {
        require(ty->kind == TypeKind::Dist, "term must have a distribution type");
        Grade s = grade_param(d, "r");
        require(!s.is_infinite(), "side condition r < inf fails");
        sensitive(J.delta, z, s, ty, pred);
        arity(d, 1);
        require(!d.templ.is_null(), "missing step premise");
        TypeCtx extra = extension(J.delta, child(0).delta, 1);
        require(type_equal(extra[0].type, ty->a), "base variable must have the element type");
        hyps(child(0).psi, Psi);
        goal(child(0).phi, subst(pred, z, mk_node(TermKind::Dirac, {mk_var(extra[0].name)})));
        step_premise(d, z, pred, ty);
      }
    } else {
      bad("unknown rule");
    }
  }

  // The convex step of ind-dist is a template in p; check it at several weights.
  void step_premise(const Derivation& d, const std::string& z, const TermPtr& pred, const TypePtr& ty) {
    static const std::vector<std::pair<std::string, std::string>> weights = {
        {"1/2", "1/2"}, {"1/3", "2/3"}, {"3/4", "1/4"}, {"1/10", "9/10"}};
    std::string base = path_;
    for (const auto& [p, q] : weights) {
      std::string sub = base + "/1@" + p;
      Derivation inst;
      try {
        inst = parse_node(instantiate(d.templ, p, q), env_, sub);
      } catch (const LogicError& e) {
        bad(std::string("step premise: ") + e.what());
      }
      const LogicJudgment& s = inst.judgment;
      TypeCtx extra = extension(d.judgment.delta, s.delta, 2);
      require(type_equal(extra[0].type, ty) && type_equal(extra[1].type, ty),
              "step premise variables must have type " + print_type(ty));
      TermPtr mu = mk_var(extra[0].name), nu = mk_var(extra[1].name);
      Grade gp = Grade::parse(p), gq = Grade::parse(q);
      hyps(s.psi, {mk_scale(gp, subst(pred, z, mu)), mk_scale(gq, subst(pred, z, nu))});
      auto mix = mk_node(TermKind::Convex, {mu, nu});
      std::const_pointer_cast<Term>(mix)->r = gp;
      goal(s.phi, subst(pred, z, mix));
      Checker sub_checker(env_, rep_);
      sub_checker.run(inst, sub);
      path_ = base;
      rule_ = d.rule;
    }
  }
};

void collect(const json& j, const Program* env, std::vector<LogicJudgment>& out) {
  if (j.contains("judgment")) out.push_back(parse_judgment(j["judgment"].get<std::string>(), env));
  json kids = j.value("children", json::array());
  auto rule = canonical_rule(j.value("rule", std::string()));
  for (std::size_t i = 0; i < kids.size(); ++i) {
    if (rule && *rule == "ind-dist" && i == 1) collect(instantiate(kids[i], "1/2", "1/2"), env, out);
    else collect(kids[i], env, out);
  }
}

}  // namespace

Derivation parse_derivation(const json& j, const Program* env) { return parse_node(j, env, "root"); }

json DerivationReport::to_json() const {
  json v = json::array();
  for (const auto& x : violations) v.push_back({{"path", x.path}, {"rule", x.rule}, {"message", x.message}});
  return json{{"status", ok ? "ok" : "rejected"},
              {"nodes", nodes},
              {"classical", classical},
              {"rules", std::vector<std::string>(rules.begin(), rules.end())},
              {"violations", v}};
}

DerivationReport checkDerivation(const json& d, const Program* env) {
  DerivationReport rep;
  Derivation root;
  try {
    root = parse_derivation(d, env);
  } catch (const std::exception& e) {
    rep.ok = false;
    rep.violations.push_back({"root", d.value("rule", std::string("?")), e.what()});
    return rep;
  }
  Checker(env, rep).run(root, "root");
  return rep;
}

std::vector<LogicJudgment> derivation_judgments(const json& d, const Program* env) {
  std::vector<LogicJudgment> out;
  collect(d, env, out);
  return out;
}

}  // namespace qlog
