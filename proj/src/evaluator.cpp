#include "qlog/evaluator.hpp"

#include "qlog/processes.hpp"
#include "qlog/typecheck.hpp"

#include <algorithm>
#include <cmath>

namespace qlog {

// ---------------------------------------------------------------- enum spec

const EnumEntry* EnumSpec::find(const TypePtr& t) const {
  auto it = entries.find(print_type(t));
  return it == entries.end() ? nullptr : &it->second;
}

EnumSpec EnumSpec::from_json(const nlohmann::json& j, const Program* env) {
  EnumSpec spec;
  for (const auto& [key, val] : j.items()) {
    TypePtr ty = parse_type(key, env);
    EnumEntry e;
    std::string mode = val.value("mode", "finite");
    if (mode == "finite") {
      e.finite = true;
      e.nat_max = val.value("max", 0ULL);
    } else if (mode == "samples") {
      for (const auto& s : val.at("terms")) e.samples.push_back(parse_term(s.get<std::string>(), env));
    } else if (mode == "chains") {
      if (ty->kind != TypeKind::Proc) throw std::invalid_argument("enum spec: chains need a process type");
      const auto& alpha = ty->a->labels;
      for (const auto& c : val.at("chains")) {
        std::vector<ValuePtr> labels;
        for (const auto& l : c.at("labels")) {
          auto it = std::find(alpha.begin(), alpha.end(), l.get<std::string>());
          if (it == alpha.end()) throw std::invalid_argument("enum spec: unknown label " + l.dump());
          labels.push_back(v_label(static_cast<int>(it - alpha.begin()), *it));
        }
        std::vector<std::vector<std::pair<std::size_t, double>>> rows;
        for (const auto& r : c.at("rows")) {
          rows.emplace_back();
          for (const auto& t : r) rows.back().push_back({t.at(0).get<std::size_t>(), t.at(1).get<double>()});
        }
        e.values.push_back(v_proc(make_chain(labels, rows).at(0)));
      }
    } else {
      throw std::invalid_argument("enum spec: unknown mode '" + mode + "'");
    }
    spec.entries[print_type(ty)] = std::move(e);
  }
  return spec;
}

// ---------------------------------------------------------------- helpers

namespace {

double scaled(const std::optional<Grade>& g, double rad) {
  if (rad <= 0) return 0;
  if (!g) return rad;
  if (g->is_infinite()) return 1.0;
  return std::min(1.0, g->to_double() * rad);
}

double cap(double r) { return std::clamp(r, 0.0, 1.0); }

double truncation_residual(const ValuePtr& v) {
  if (v->kind != VKind::Dist) return 0;
  return v->dist->residual_kind() == ResidualKind::Truncation ? v->dist->residual() : 0;
}

const DistV& as_dist(const ValuePtr& v, const char* what) {
  if (v->kind != VKind::Dist) throw EvalError(std::string(what) + ": expected a distribution");
  return *v->dist;
}

double as_prop(const ValuePtr& v, const char* what) {
  if (v->kind != VKind::Prop) throw EvalError(std::string(what) + ": expected a truth value");
  return v->prop;
}

ValuePtr convex_values(double p, const ValuePtr& a, const ValuePtr& b) {
  if (a->kind != b->kind) throw EvalError("oplus: operands of different shapes");
  switch (a->kind) {
    case VKind::Dist:
      return v_dist(convex(p, *a->dist, *b->dist));
    case VKind::Prop:
      return v_prop(p * a->prop + (1 - p) * b->prop);
    case VKind::TPair:
      return v_tpair(convex_values(p, a->a, b->a), convex_values(p, a->b, b->b));
    default:
      throw EvalError("oplus: unsupported IB algebra value");
  }
}

// Weighted combination of body results of a let over a (sub)distribution.
// `residual` is unassigned mass of the bound distribution.
ValuePtr barycenter(const std::vector<std::pair<double, ValuePtr>>& items, double residual,
                    ResidualKind kind, const ValuePtr& shape, double& extra_radius) {
  switch (shape->kind) {
    case VKind::Dist: {
      std::vector<DistV::Atom> atoms;
      double res = residual;
      ResidualKind k = kind;
      bool any = residual > 0;
      for (const auto& [w, v] : items) {
        const DistV& d = as_dist(v, "let");
        for (const auto& at : d.atoms()) atoms.push_back({at.first, w * at.second});
        if (d.residual() > 0) {
          if (any && d.residual_kind() != k) k = ResidualKind::Truncation;
          else k = d.residual_kind();
          any = true;
        }
        res += w * d.residual();
      }
      return v_dist(DistV::from_atoms(std::move(atoms), res, k));
    }
    case VKind::Prop: {
      double s = 0;
      for (const auto& [w, v] : items) s += w * as_prop(v, "let");
      extra_radius += residual;
      return v_prop(std::min(s, 1.0));
    }
    case VKind::TPair: {
      std::vector<std::pair<double, ValuePtr>> left, right;
      for (const auto& [w, v] : items) {
        left.push_back({w, v->a});
        right.push_back({w, v->b});
      }
      double e1 = 0, e2 = 0;
      ValuePtr a = barycenter(left, residual, kind, shape->a, e1);
      ValuePtr b = barycenter(right, residual, kind, shape->b, e2);
      extra_radius += std::max(e1, e2);
      return v_tpair(a, b);
    }
    default:
      throw EvalError("let: body is not an IB algebra value");
  }
}

bool process_shaped(const TypePtr& a) {
  switch (a->kind) {
    case TypeKind::Proc: return true;
    case TypeKind::Prod:
    case TypeKind::Tensor: return process_shaped(a->a) && process_shaped(a->b);
    default: return false;
  }
}

bool has_function(const TypePtr& a) {
  if (!a) return false;
  if (a->kind == TypeKind::Lolli) return true;
  if (a->kind == TypeKind::Prod || a->kind == TypeKind::Tensor || a->kind == TypeKind::Sum)
    return has_function(a->a) || has_function(a->b);
  return false;
}

ValuePtr placeholder(const TypePtr& a) {
  if (a->kind == TypeKind::Proc) return v_proc(make_proc_node(nullptr, nullptr));
  ValuePtr l = placeholder(a->a), r = placeholder(a->b);
  return a->kind == TypeKind::Prod ? v_pair(l, r) : v_tpair(l, r);
}

void tie_knot(const ValuePtr& ph, const ValuePtr& v) {
  if (ph->kind == VKind::Proc) {
    if (v->kind != VKind::Proc) throw EvalError("fix: body did not produce a process");
    if (v->proc->deref() == ph->proc.get())
      throw EvalError("fix: unguarded recursive process definition");
    ph->proc->forward = v->proc;
    return;
  }
  tie_knot(ph->a, v->a);
  tie_knot(ph->b, v->b);
}

int marginal_of(const TermPtr& t, const std::string& w) {
  if (t->kind != TermKind::LetDist) return 0;
  if (t->kid(0)->kind != TermKind::Var || t->kid(0)->x != w) return 0;
  const TermPtr& d = t->kid(1);
  if (d->kind != TermKind::Dirac) return 0;
  const TermPtr& lt = d->kid(0);
  if (lt->kind != TermKind::LetTensor || lt->kid(0)->kind != TermKind::Var || lt->kid(0)->x != t->x ||
      lt->kid(1)->kind != TermKind::Var)
    return 0;
  if (lt->kid(1)->x == lt->x) return 1;
  if (lt->kid(1)->x == lt->y) return 2;
  return 0;
}

void flatten_star(const TermPtr& t, std::vector<TermPtr>& out) {
  if (t->kind == TermKind::Star) {
    flatten_star(t->kid(0), out);
    flatten_star(t->kid(1), out);
  } else {
    out.push_back(t);
  }
}

}  // namespace

// ---------------------------------------------------------------- coupling shape

std::optional<CouplingShape> match_coupling(const TermPtr& ex) {
  if (ex->kind != TermKind::Exists) return std::nullopt;
  const std::string& w = ex->x;
  std::vector<TermPtr> parts;
  flatten_star(ex->kid(0), parts);
  if (parts.size() != 3) return std::nullopt;
  CouplingShape out;
  bool have_mean = false;
  for (const auto& p : parts) {
    if (p->kind == TermKind::LetDist && p->kid(0)->kind == TermKind::Var && p->kid(0)->x == w &&
        p->kid(1)->kind == TermKind::LetTensor && p->kid(1)->kid(0)->kind == TermKind::Var &&
        p->kid(1)->kid(0)->x == p->x) {
      const TermPtr& lt = p->kid(1);
      if (free_vars(lt->kid(1)).count(p->x) || free_vars(lt->kid(1)).count(w)) return std::nullopt;
      out.x = lt->x;
      out.y = lt->y;
      out.rel = lt->kid(1);
      have_mean = true;
      continue;
    }
    if (p->kind != TermKind::Eq) return std::nullopt;
    bool matched = false;
    for (int side = 0; side < 2 && !matched; ++side) {
      int m = marginal_of(p->kid(side), w);
      if (!m) continue;
      const TermPtr& other = p->kid(1 - side);
      if (free_vars(other).count(w)) return std::nullopt;
      (m == 1 ? out.mu : out.nu) = other;
      matched = true;
    }
    if (!matched) return std::nullopt;
  }
  if (!have_mean || !out.mu || !out.nu) return std::nullopt;
  return out;
}

double coupling_infimum(const DistV& mu, const DistV& nu,
                        const std::function<double(const ValuePtr&, const ValuePtr&)>& cost) {
  std::vector<double> a, b;
  for (const auto& at : mu.atoms()) a.push_back(at.second);
  for (const auto& at : nu.atoms()) b.push_back(at.second);
  bool bot_a = mu.residual() > 0, bot_b = nu.residual() > 0;
  if (bot_a) a.push_back(mu.residual());
  if (bot_b) b.push_back(nu.residual());
  if (a.empty() || b.empty()) return 0.0;
  std::vector<std::vector<double>> c(a.size(), std::vector<double>(b.size(), 1.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      bool bi = i >= mu.size(), bj = j >= nu.size();
      if (bi && bj) c[i][j] = 0.0;
      else if (bi || bj) c[i][j] = 1.0;
      else c[i][j] = clamp01(cost(mu.atoms()[i].first, nu.atoms()[j].first));
    }
  }
  return clamp01(transport::solve<double>(a, b, c).cost);
}

// ---------------------------------------------------------------- seeds

ValuePtr canonicalSeed(const TypePtr& a) {
  switch (a->kind) {
    case TypeKind::Nat: return v_nat(0);
    case TypeKind::Unit: return v_unit();
    case TypeKind::Prod: return v_pair(canonicalSeed(a->a), canonicalSeed(a->b));
    case TypeKind::Tensor: return v_tpair(canonicalSeed(a->a), canonicalSeed(a->b));
    case TypeKind::Sum: return v_inj(1, canonicalSeed(a->a));
    case TypeKind::Dist: return v_dist(DistV::dirac(canonicalSeed(a->a)));
    case TypeKind::Lolli: return v_closure(make_constant_closure(Approx{canonicalSeed(a->b), 0.0}));
    case TypeKind::Prop: return v_prop(0.0);
    case TypeKind::Label: return v_label(0, a->labels.at(0));
    case TypeKind::Proc: {
      auto node = make_proc_node(canonicalSeed(a->a), nullptr);
      std::weak_ptr<ProcNode> self = node;
      node->thunk = [self]() {
        auto n = self.lock();
        if (!n) throw EvalError("seed process expired");
        return DistV::dirac(v_proc(n));
      };
      return v_proc(node);
    }
  }
  throw EvalError("no seed for type");
}

// ---------------------------------------------------------------- fixed points

Approx fixEval(const std::function<Approx(const Approx&)>& f, const Grade& p, const TypePtr& a,
               int fuel, double tol) {
  if (!(p < Grade(1))) throw EvalError("fixEval: contraction factor must be below 1");
  Approx x;
  x.radius = 1.0;
  x.value = a->kind == TypeKind::Dist ? v_dist(DistV::bottom(ResidualKind::Truncation))
                                      : canonicalSeed(a);
  for (int k = 0; k < fuel; ++k) {
    Approx nx = f(x);
    if (value_equal(nx.value, x.value)) {
      // x is the unique fixed point; what remains is error from the environment.
      Approx exact = f(Approx{x.value, 0.0, x.sampled});
      double pd = p.to_double();
      nx.radius = cap(exact.radius / (1 - pd));
      return nx;
    }
    x = std::move(nx);
    if (x.radius <= tol) break;
  }
  return x;
}

// ---------------------------------------------------------------- enumeration

namespace {

std::optional<std::vector<ValuePtr>> enum_rec(const TypePtr& a, const EnumSpec* spec, bool& sampled) {
  if (spec) {
    if (const EnumEntry* e = spec->find(a)) {
      if (!e->values.empty()) {
        sampled = true;
        return e->values;
      }
      if (!e->samples.empty()) {
        sampled = true;
        std::vector<ValuePtr> out;
        EvalOptions o;
        o.enums = spec;
        for (const auto& t : e->samples) out.push_back(eval_closed(t, a, o).value);
        return out;
      }
      if (e->finite && a->kind == TypeKind::Nat) {
        std::vector<ValuePtr> out;
        for (unsigned long long n = 0; n <= e->nat_max; ++n) out.push_back(v_nat(n));
        return out;
      }
    }
  }
  switch (a->kind) {
    case TypeKind::Unit: return std::vector<ValuePtr>{v_unit()};
    case TypeKind::Label: {
      std::vector<ValuePtr> out;
      for (std::size_t i = 0; i < a->labels.size(); ++i) out.push_back(v_label(static_cast<int>(i), a->labels[i]));
      return out;
    }
    case TypeKind::Sum: {
      auto l = enum_rec(a->a, spec, sampled), r = enum_rec(a->b, spec, sampled);
      if (!l || !r) return std::nullopt;
      std::vector<ValuePtr> out;
      for (auto& v : *l) out.push_back(v_inj(1, v));
      for (auto& v : *r) out.push_back(v_inj(2, v));
      return out;
    }
    case TypeKind::Prod:
    case TypeKind::Tensor: {
      auto l = enum_rec(a->a, spec, sampled), r = enum_rec(a->b, spec, sampled);
      if (!l || !r) return std::nullopt;
      std::vector<ValuePtr> out;
      for (auto& x : *l)
        for (auto& y : *r) out.push_back(a->kind == TypeKind::Prod ? v_pair(x, y) : v_tpair(x, y));
      return out;
    }
    default:
      return std::nullopt;
  }
}

}  // namespace

std::optional<std::vector<ValuePtr>> enumerate_type(const TypePtr& a, const EnumSpec* spec, bool* sampled) {
  bool s = false;
  auto out = enum_rec(a, spec, s);
  if (sampled) *sampled = s;
  return out;
}

// ---------------------------------------------------------------- metrics

Distance distanceAt(const TypePtr& a, const ValuePtr& v1, const ValuePtr& v2, const EvalOptions& opt) {
  Distance d;
  switch (a->kind) {
    case TypeKind::Nat:
    case TypeKind::Unit:
    case TypeKind::Label:
      d.value = value_equal(v1, v2) ? 0.0 : 1.0;
      return d;
    case TypeKind::Prop:
      d.value = std::abs(v1->prop - v2->prop);
      return d;
    case TypeKind::Prod: {
      Distance x = distanceAt(a->a, v1->a, v2->a, opt), y = distanceAt(a->b, v1->b, v2->b, opt);
      d.value = std::max(x.value, y.value);
      d.radius = std::max(x.radius, y.radius);
      d.lower_bound = x.lower_bound || y.lower_bound;
      return d;
    }
    case TypeKind::Tensor: {
      Distance x = distanceAt(a->a, v1->a, v2->a, opt), y = distanceAt(a->b, v1->b, v2->b, opt);
      auto sc = [](const Grade& g, double v) {
        if (v <= 0) return 0.0;
        return g.is_infinite() ? 1.0 : std::min(1.0, g.to_double() * v);
      };
      d.value = std::min(1.0, sc(a->r, x.value) + sc(a->s, y.value));
      d.radius = std::min(1.0, sc(a->r, x.radius) + sc(a->s, y.radius));
      d.lower_bound = x.lower_bound || y.lower_bound;
      return d;
    }
    case TypeKind::Sum:
      if (v1->index != v2->index) {
        d.value = 1.0;
        return d;
      }
      return distanceAt(v1->index == 1 ? a->a : a->b, v1->a, v2->a, opt);
    case TypeKind::Dist: {
      if (v1 == v2) return d;
      double rad = 0;
      bool lower = false;
      std::map<std::pair<const Value*, const Value*>, double> memo;
      d.value = coupling_infimum(*v1->dist, *v2->dist, [&](const ValuePtr& x, const ValuePtr& y) {
        auto key = std::make_pair(x.get(), y.get());
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        Distance e = distanceAt(a->a, x, y, opt);
        rad = std::max(rad, e.radius);
        lower = lower || e.lower_bound;
        return memo[key] = e.value;
      });
      d.radius = rad;
      d.lower_bound = lower;
      return d;
    }
    case TypeKind::Proc: {
      ProcDistance pd = behavioralDistance(v1->proc, v2->proc, a->r, opt.proc_tol);
      d.value = pd.value;
      d.radius = pd.radius;
      return d;
    }
    case TypeKind::Lolli: {
      bool sampled = false;
      auto probes = enumerate_type(a->a, opt.enums, &sampled);
      if (!probes) throw EvalError("distance at " + print_type(a) + " needs a probe set for " + print_type(a->a));
      for (const auto& x : *probes) {
        Approx fx = apply(Approx{v1, 0.0}, Approx{x, 0.0}, opt);
        Approx gx = apply(Approx{v2, 0.0}, Approx{x, 0.0}, opt);
        Distance e = distanceAt(a->b, fx.value, gx.value, opt);
        d.value = std::max(d.value, e.value);
        d.radius = std::max(d.radius, cap(e.radius + fx.radius + gx.radius));
        d.lower_bound = d.lower_bound || e.lower_bound;
      }
      d.lower_bound = d.lower_bound || sampled;
      return d;
    }
  }
  throw EvalError("distanceAt: unsupported type");
}

// ---------------------------------------------------------------- evaluation

namespace {

Approx eval_fix(const Env& env, const TermPtr& t, const EvalOptions& opt);

Approx ev(const Env& env, const TermPtr& t, const EvalOptions& opt) {
  switch (t->kind) {
    case TermKind::Var: {
      const Approx* a = env_lookup(env, t->x);
      if (!a) throw EvalError("unbound variable '" + t->x + "' at " + t->span.str());
      return *a;
    }
    case TermKind::Lam:
      return Approx{v_closure(make_closure(env, t->x, t->kid(0))), 0.0};
    case TermKind::App: {
      Approx f = ev(env, t->kid(0), opt);
      Approx u = ev(env, t->kid(1), opt);
      return apply(f, u, opt);
    }
    case TermKind::UnitV:
      return Approx{v_unit(), 0.0};
    case TermKind::Pair: {
      Approx a = ev(env, t->kid(0), opt), b = ev(env, t->kid(1), opt);
      return Approx{v_pair(a.value, b.value), std::max(a.radius, b.radius), a.sampled || b.sampled};
    }
    case TermKind::TPair: {
      Approx a = ev(env, t->kid(0), opt), b = ev(env, t->kid(1), opt);
      return Approx{v_tpair(a.value, b.value), cap(scaled(t->r, a.radius) + scaled(t->s, b.radius)),
                    a.sampled || b.sampled};
    }
    case TermKind::Proj: {
      Approx a = ev(env, t->kid(0), opt);
      if (a.value->kind != VKind::Pair) throw EvalError("projection from a non-pair");
      return Approx{t->index == 1 ? a.value->a : a.value->b, a.radius, a.sampled};
    }
    case TermKind::Inj: {
      Approx a = ev(env, t->kid(0), opt);
      return Approx{v_inj(t->index, a.value), a.radius, a.sampled};
    }
    case TermKind::Case: {
      Approx s = ev(env, t->kid(0), opt);
      if (s.value->kind != VKind::Inj) throw EvalError("case on a non-injection");
      bool left = s.value->index == 1;
      Env e2 = env_bind(env, left ? t->x : t->y, Approx{s.value->a, s.radius, s.sampled});
      Approx r = ev(e2, t->kid(left ? 1 : 2), opt);
      if (s.radius >= 1.0) r.radius = 1.0;
      r.sampled = r.sampled || s.sampled;
      return r;
    }
    case TermKind::LetTensor: {
      Approx u = ev(env, t->kid(0), opt);
      if (u.value->kind != VKind::TPair) throw EvalError("let-tensor on a non-tensor");
      auto share = [&](const std::optional<Grade>& g) {
        if (u.radius <= 0) return 0.0;
        if (!g || g->is_zero()) return 1.0;
        if (g->is_infinite()) return 0.0;
        return cap(u.radius / g->to_double());
      };
      Env e2 = env_bind(env_bind(env, t->x, Approx{u.value->a, share(t->r), u.sampled}), t->y,
                        Approx{u.value->b, share(t->s), u.sampled});
      Approx r = ev(e2, t->kid(1), opt);
      r.sampled = r.sampled || u.sampled;
      return r;
    }
    case TermKind::Dirac: {
      Approx a = ev(env, t->kid(0), opt);
      return Approx{v_dist(DistV::dirac(a.value)), a.radius, a.sampled};
    }
    case TermKind::Convex: {
      double p = t->r->to_double();
      Approx a = ev(env, t->kid(0), opt), b = ev(env, t->kid(1), opt);
      return Approx{convex_values(p, a.value, b.value), cap(p * a.radius + (1 - p) * b.radius),
                    a.sampled || b.sampled};
    }
    case TermKind::LetDist: {
      Approx u = ev(env, t->kid(0), opt);
      const DistV& mu = as_dist(u.value, "let");
      std::vector<std::pair<double, ValuePtr>> items;
      double body_rad = 0;
      bool sampled = u.sampled;
      ValuePtr shape;
      for (const auto& at : mu.atoms()) {
        Approx b = ev(env_bind(env, t->x, Approx{at.first, 0.0}), t->kid(1), opt);
        items.push_back({at.second, b.value});
        body_rad += at.second * b.radius;
        sampled = sampled || b.sampled;
        if (!shape) shape = b.value;
      }
      if (!shape) {
        // Empty support: evaluate the body once at a seed to learn the result shape.
        if (!t->ty) throw EvalError("let over an empty distribution");
        Approx b = ev(env_bind(env, t->x, Approx{canonicalSeed(t->ty), 1.0}), t->kid(1), opt);
        shape = b.value;
      }
      double extra = 0;
      ValuePtr v = barycenter(items, mu.residual(), mu.residual_kind(), shape, extra);
      double r = body_rad + scaled(t->r, u.radius) + extra;
      return Approx{v, cap(r), sampled};
    }
    case TermKind::Zero:
      return Approx{v_nat(0), 0.0};
    case TermKind::Succ: {
      Approx a = ev(env, t->kid(0), opt);
      if (a.value->kind != VKind::Nat) throw EvalError("succ of a non-number");
      return Approx{v_nat(a.value->nat + 1), a.radius, a.sampled};
    }
    case TermKind::Rec: {
      Approx n = ev(env, t->kid(2), opt);
      if (n.value->kind != VKind::Nat) throw EvalError("rec on a non-number");
      Approx acc = ev(env, t->kid(0), opt);
      for (unsigned long long i = 0; i < n.value->nat; ++i) {
        Env e2 = env_bind(env_bind(env, t->x, acc), t->y, Approx{v_nat(i), n.radius});
        acc = ev(e2, t->kid(1), opt);
      }
      if (n.radius >= 1.0) acc.radius = 1.0;
      return acc;
    }
    case TermKind::Fix:
      return eval_fix(env, t, opt);
    case TermKind::Label:
      return Approx{v_label(t->index, t->label), 0.0};
    case TermKind::Fold: {
      Approx lab = ev(env, t->kid(0), opt);
      EvalOptions o = opt;
      o.enums = nullptr;
      TermPtr m = t->kid(1);
      auto node = make_proc_node(lab.value, [env, m, o]() {
        Approx s = ev(env, m, o);
        return as_dist(s.value, "fold");
      });
      return Approx{v_proc(node), lab.radius};
    }
    case TermKind::Unfold: {
      Approx a = ev(env, t->kid(0), opt);
      if (a.value->kind != VKind::Proc) throw EvalError("unfold of a non-process");
      ProcNode* n = a.value->proc->deref();
      return Approx{v_tpair(n->get_label(), v_dist(n->step())), a.radius};
    }
    case TermKind::Ann:
      return ev(env, t->kid(0), opt);
    case TermKind::Tt:
      return Approx{v_prop(0.0), 0.0};
    case TermKind::Ff:
      return Approx{v_prop(1.0), 0.0};
    case TermKind::Eq: {
      if (!t->ty) throw EvalError("equality without a type annotation; typecheck first");
      Approx a = ev(env, t->kid(0), opt), b = ev(env, t->kid(1), opt);
      Distance d = distanceAt(t->ty, a.value, b.value, opt);
      double r = a.radius + b.radius + d.radius + truncation_residual(a.value) +
                 truncation_residual(b.value);
      return Approx{v_prop(d.value), cap(r), a.sampled || b.sampled || d.lower_bound};
    }
    case TermKind::Star:
    case TermKind::Wand:
    case TermKind::And:
    case TermKind::Or: {
      Approx a = ev(env, t->kid(0), opt), b = ev(env, t->kid(1), opt);
      double x = as_prop(a.value, "connective"), y = as_prop(b.value, "connective");
      double v = 0, r = 0;
      switch (t->kind) {
        case TermKind::Star: v = oplus(x, y); r = a.radius + b.radius; break;
        case TermKind::Wand: v = wand(x, y); r = a.radius + b.radius; break;
        case TermKind::And: v = std::max(x, y); r = std::max(a.radius, b.radius); break;
        default: v = std::min(x, y); r = std::max(a.radius, b.radius); break;
      }
      return Approx{v_prop(v), cap(r), a.sampled || b.sampled};
    }
    case TermKind::Scale: {
      Approx a = ev(env, t->kid(0), opt);
      double v = scaleProp(*t->r, as_prop(a.value, "scale"));
      return Approx{v_prop(v), scaled(t->r, a.radius), a.sampled};
    }
    case TermKind::Not: {
      Approx a = ev(env, t->kid(0), opt);
      return Approx{v_prop(1.0 - as_prop(a.value, "not")), a.radius, a.sampled};
    }
    case TermKind::Exists:
    case TermKind::Forall: {
      bool ex = t->kind == TermKind::Exists;
      if (ex) {
        if (auto shape = match_coupling(t)) {
          Approx mu = ev(env, shape->mu, opt), nu = ev(env, shape->nu, opt);
          double rrad = 0;
          bool sampled = mu.sampled || nu.sampled;
          double v = coupling_infimum(as_dist(mu.value, "coupling"), as_dist(nu.value, "coupling"),
                                      [&](const ValuePtr& x, const ValuePtr& y) {
                                        Env e2 = env_bind(env_bind(env, shape->x, Approx{x, 0.0}),
                                                          shape->y, Approx{y, 0.0});
                                        Approx r = ev(e2, shape->rel, opt);
                                        rrad = std::max(rrad, r.radius);
                                        sampled = sampled || r.sampled;
                                        return as_prop(r.value, "coupling relation");
                                      });
          double r = rrad + mu.radius + nu.radius + truncation_residual(mu.value) +
                     truncation_residual(nu.value);
          return Approx{v_prop(v), cap(r), sampled};
        }
      }
      if (!t->ty) throw EvalError("quantifier without a type annotation; typecheck first");
      bool sampled = false;
      auto vals = enumerate_type(t->ty, opt.enums, &sampled);
      if (!vals) throw EvalError("no enumeration for quantified type " + print_type(t->ty));
      double best = ex ? 1.0 : 0.0, rad = 0;
      for (const auto& v : *vals) {
        Approx b = ev(env_bind(env, t->x, Approx{v, 0.0}), t->kid(0), opt);
        double x = as_prop(b.value, "quantifier");
        best = ex ? std::min(best, x) : std::max(best, x);
        rad = std::max(rad, b.radius);
        sampled = sampled || b.sampled;
      }
      return Approx{v_prop(best), rad, sampled};
    }
  }
  throw EvalError("unhandled term kind");
}

Approx eval_fix(const Env& env, const TermPtr& t, const EvalOptions& opt) {
  if (!t->ty || !t->r) throw EvalError("fix without annotations; typecheck first");
  const TypePtr& a = t->ty;
  const Grade& p = *t->r;
  if (process_shaped(a)) {
    ValuePtr ph = placeholder(a);
    Approx r = ev(env_bind(env, t->x, Approx{ph, 0.0}), t->kid(0), opt);
    tie_knot(ph, r.value);
    return r;
  }
  if (has_function(a)) {
    Approx x{canonicalSeed(a), 1.0};
    double pd = p.to_double();
    for (int k = 0; k < opt.fuel; ++k) {
      double prev = x.radius;
      x = ev(env_bind(env, t->x, x), t->kid(0), opt);
      x.radius = cap(x.radius + pd * prev);
      if (p.is_zero()) break;
    }
    return x;
  }
  return fixEval([&](const Approx& x) { return ev(env_bind(env, t->x, x), t->kid(0), opt); }, p, a,
                 opt.fuel, opt.tol);
}

}  // namespace

Approx eval(const Env& env, const TermPtr& t, const EvalOptions& opt) {
  Approx a = ev(env, t, opt);
  a.radius = cap(a.radius);
  return a;
}

Approx apply(const Approx& f, const Approx& arg, const EvalOptions& opt) {
  if (f.value->kind != VKind::Closure) throw EvalError("applying a non-function");
  Closure& c = *f.value->clo;
  if (!c.body) {
    Approx r = c.constant;
    r.radius = cap(r.radius + f.radius);
    return r;
  }
  bool memoizable = arg.radius == 0 && !arg.sampled && is_first_order(arg.value);
  if (memoizable) {
    std::lock_guard<std::mutex> lock(c.memo_mutex);
    auto it = c.memo.find(arg.value);
    if (it != c.memo.end()) {
      Approx r = it->second;
      r.radius = cap(r.radius + f.radius);
      return r;
    }
  }
  Approx r = ev(env_bind(c.env, c.x, arg), c.body, opt);
  if (memoizable) {
    std::lock_guard<std::mutex> lock(c.memo_mutex);
    c.memo.emplace(arg.value, r);
  }
  r.radius = cap(r.radius + f.radius);
  r.sampled = r.sampled || f.sampled;
  return r;
}

Approx eval_closed(const TermPtr& t, const TypePtr& a, const EvalOptions& opt) {
  CheckResult cr = check({}, t, a);
  if (!cr.ok) throw EvalError("ill-typed term: " + cr.error->text());
  return eval(nullptr, cr.elaborated, opt);
}

// ---------------------------------------------------------------- json

nlohmann::json value_to_json(const ValuePtr& v) {
  using nlohmann::json;
  switch (v->kind) {
    case VKind::Nat: return v->nat;
    case VKind::Unit: return json{{"unit", true}};
    case VKind::Pair: return json{{"pair", {value_to_json(v->a), value_to_json(v->b)}}};
    case VKind::TPair: return json{{"tensor", {value_to_json(v->a), value_to_json(v->b)}}};
    case VKind::Inj: return json{{"inj", v->index}, {"v", value_to_json(v->a)}};
    case VKind::Label: return v->label;
    case VKind::Prop: return v->prop;
    case VKind::Dist: {
      json sup = json::array();
      for (const auto& at : v->dist->atoms()) sup.push_back({{"v", value_to_json(at.first)}, {"w", at.second}});
      return json{{"support", sup}, {"residual", v->dist->residual()}};
    }
    case VKind::Proc: {
      ProcNode* n = v->proc->deref();
      json j{{"proc", n->id}};
      if (n->label) j["label"] = value_to_json(n->label);
      return j;
    }
    case VKind::Closure: return json{{"closure", v->clo->id}};
  }
  return nullptr;
}

nlohmann::json approx_to_json(const Approx& a) {
  nlohmann::json j{{"value", value_to_json(a.value)}, {"radius", a.radius}};
  if (a.sampled) j["sampled"] = true;
  return j;
}

}  // namespace qlog
