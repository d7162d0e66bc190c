#include "qlog/value.hpp"

#include <sstream>

namespace qlog {

namespace {
std::atomic<std::uint64_t> next_id{1};

int cmp_values(const ValuePtr& a, const ValuePtr& b);

int cmp_double(double x, double y) { return x < y ? -1 : (y < x ? 1 : 0); }

int cmp_dist(const DistV& x, const DistV& y) {
  if (int c = cmp_double(x.residual(), y.residual())) return c;
  const auto& xa = x.atoms();
  const auto& ya = y.atoms();
  for (std::size_t i = 0; i < xa.size() && i < ya.size(); ++i) {
    if (int c = cmp_values(xa[i].first, ya[i].first)) return c;
    if (int c = cmp_double(xa[i].second, ya[i].second)) return c;
  }
  return xa.size() < ya.size() ? -1 : (xa.size() > ya.size() ? 1 : 0);
}

int cmp_values(const ValuePtr& a, const ValuePtr& b) {
  if (a == b) return 0;
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  switch (a->kind) {
    case VKind::Nat:
      return a->nat < b->nat ? -1 : (a->nat > b->nat ? 1 : 0);
    case VKind::Unit:
      return 0;
    case VKind::Pair:
    case VKind::TPair:
      if (int c = cmp_values(a->a, b->a)) return c;
      return cmp_values(a->b, b->b);
    case VKind::Inj:
      if (a->index != b->index) return a->index < b->index ? -1 : 1;
      return cmp_values(a->a, b->a);
    case VKind::Label:
      if (a->index != b->index) return a->index < b->index ? -1 : 1;
      return a->label.compare(b->label) < 0 ? -1 : (a->label == b->label ? 0 : 1);
    case VKind::Prop:
      return cmp_double(a->prop, b->prop);
    case VKind::Dist:
      return cmp_dist(*a->dist, *b->dist);
    case VKind::Proc: {
      auto ia = a->proc->deref()->id, ib = b->proc->deref()->id;
      return ia < ib ? -1 : (ia > ib ? 1 : 0);
    }
    case VKind::Closure:
      return a->clo->id < b->clo->id ? -1 : (a->clo->id > b->clo->id ? 1 : 0);
  }
  return 0;
}
}  // namespace

bool ValueLess::operator()(const ValuePtr& a, const ValuePtr& b) const { return cmp_values(a, b) < 0; }

bool value_equal(const ValuePtr& a, const ValuePtr& b) { return cmp_values(a, b) == 0; }

bool is_first_order(const ValuePtr& v) {
  switch (v->kind) {
    case VKind::Pair:
    case VKind::TPair:
      return is_first_order(v->a) && is_first_order(v->b);
    case VKind::Inj:
      return is_first_order(v->a);
    case VKind::Dist:
      for (const auto& at : v->dist->atoms())
        if (!is_first_order(at.first)) return false;
      return true;
    case VKind::Proc:
    case VKind::Closure:
      return false;
    default:
      return true;
  }
}

namespace {
std::shared_ptr<Value> blank(VKind k) {
  auto v = std::make_shared<Value>();
  v->kind = k;
  return v;
}
}  // namespace

ValuePtr v_nat(unsigned long long n) {
  auto v = blank(VKind::Nat);
  v->nat = n;
  return v;
}
ValuePtr v_unit() {
  static ValuePtr u = blank(VKind::Unit);
  return u;
}
ValuePtr v_pair(ValuePtr a, ValuePtr b) {
  auto v = blank(VKind::Pair);
  v->a = std::move(a);
  v->b = std::move(b);
  return v;
}
ValuePtr v_tpair(ValuePtr a, ValuePtr b) {
  auto v = blank(VKind::TPair);
  v->a = std::move(a);
  v->b = std::move(b);
  return v;
}
ValuePtr v_inj(int index, ValuePtr a) {
  auto v = blank(VKind::Inj);
  v->index = index;
  v->a = std::move(a);
  return v;
}
ValuePtr v_label(int index, std::string name) {
  auto v = blank(VKind::Label);
  v->index = index;
  v->label = std::move(name);
  return v;
}
ValuePtr v_prop(double x) {
  auto v = blank(VKind::Prop);
  v->prop = clamp01(x);
  return v;
}
ValuePtr v_dist(DistV d) {
  auto v = blank(VKind::Dist);
  v->dist = std::make_shared<const DistV>(std::move(d));
  return v;
}
ValuePtr v_bool(bool b) { return v_inj(b ? 1 : 2, v_unit()); }
ValuePtr v_proc(std::shared_ptr<ProcNode> n) {
  auto v = blank(VKind::Proc);
  v->proc = std::move(n);
  return v;
}
ValuePtr v_closure(std::shared_ptr<Closure> c) {
  auto v = blank(VKind::Closure);
  v->clo = std::move(c);
  return v;
}

Env env_bind(const Env& env, const std::string& name, Approx a) {
  auto n = std::make_shared<EnvNode>();
  n->name = name;
  n->entry = std::move(a);
  n->next = env;
  return n;
}

const Approx* env_lookup(const Env& env, const std::string& name) {
  for (const EnvNode* n = env.get(); n; n = n->next.get())
    if (n->name == name) return &n->entry;
  return nullptr;
}

std::shared_ptr<Closure> make_closure(Env env, std::string x, TermPtr body) {
  auto c = std::make_shared<Closure>();
  c->env = std::move(env);
  c->x = std::move(x);
  c->body = std::move(body);
  c->id = next_id++;
  return c;
}

std::shared_ptr<Closure> make_constant_closure(Approx k) {
  auto c = std::make_shared<Closure>();
  c->constant = std::move(k);
  c->id = next_id++;
  return c;
}

ProcNode* ProcNode::deref() {
  ProcNode* n = this;
  while (n->forward) n = n->forward.get();
  return n;
}

const DistV& ProcNode::step() {
  ProcNode* n = deref();
  if (n != this) return n->step();
  std::lock_guard<std::mutex> lock(mutex_);
  if (!cache_) {
    if (!thunk) throw std::runtime_error("process node forced before its definition was tied");
    cache_ = thunk();
  }
  return *cache_;
}

const ValuePtr& ProcNode::get_label() {
  ProcNode* n = deref();
  if (!n->label) throw std::runtime_error("process label depends on its own definition");
  return n->label;
}

std::shared_ptr<ProcNode> make_proc_node(ValuePtr label, std::function<DistV()> thunk) {
  auto n = std::make_shared<ProcNode>();
  n->label = std::move(label);
  n->thunk = std::move(thunk);
  n->id = next_id++;
  return n;
}

std::string print_value(const ValuePtr& v) {
  std::ostringstream os;
  switch (v->kind) {
    case VKind::Nat: os << v->nat; break;
    case VKind::Unit: os << "()"; break;
    case VKind::Pair: os << "<" << print_value(v->a) << ", " << print_value(v->b) << ">"; break;
    case VKind::TPair: os << "(" << print_value(v->a) << ", " << print_value(v->b) << ")"; break;
    case VKind::Inj: os << "inj" << v->index << "(" << print_value(v->a) << ")"; break;
    case VKind::Label: os << v->label; break;
    case VKind::Prop: os << v->prop; break;
    case VKind::Dist: {
      os << "{";
      bool first = true;
      for (const auto& at : v->dist->atoms()) {
        if (!first) os << ", ";
        first = false;
        os << print_value(at.first) << ": " << at.second;
      }
      if (v->dist->residual() > 0) os << (first ? "" : ", ") << "_|_: " << v->dist->residual();
      os << "}";
      break;
    }
    case VKind::Proc: {
      ProcNode* n = v->proc->deref();
      os << "proc#" << n->id;
      if (n->label) os << "[" << print_value(n->label) << "]";
      break;
    }
    case VKind::Closure: os << "<closure#" << v->clo->id << ">"; break;
  }
  return os.str();
}

}  // namespace qlog
