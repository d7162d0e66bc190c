#pragma once

#include "qlog/measures.hpp"
#include "qlog/syntax.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace qlog {

struct Value;
using ValuePtr = std::shared_ptr<const Value>;

struct ValueLess {
  bool operator()(const ValuePtr& a, const ValuePtr& b) const;
};

using DistV = SubDist<ValuePtr, ValueLess>;

enum class VKind { Nat, Unit, Pair, TPair, Inj, Label, Prop, Dist, Proc, Closure };

struct ProcNode;
struct Closure;

struct Value {
  VKind kind = VKind::Unit;
  unsigned long long nat = 0;
  double prop = 0.0;
  int index = 0;  // injection index or label ordinal
  std::string label;
  ValuePtr a, b;
  std::shared_ptr<const DistV> dist;
  std::shared_ptr<ProcNode> proc;
  std::shared_ptr<Closure> clo;
};

bool value_equal(const ValuePtr& a, const ValuePtr& b);
// True when the value contains no closures or processes.
bool is_first_order(const ValuePtr& v);

ValuePtr v_nat(unsigned long long n);
ValuePtr v_unit();
ValuePtr v_pair(ValuePtr a, ValuePtr b);
ValuePtr v_tpair(ValuePtr a, ValuePtr b);
ValuePtr v_inj(int index, ValuePtr a);
ValuePtr v_label(int index, std::string name);
ValuePtr v_prop(double x);
ValuePtr v_dist(DistV d);
ValuePtr v_bool(bool b);  // true = inj1 (), false = inj2 ()

/// A value with a certified bound on its distance to the exact denotation.
struct Approx {
  ValuePtr value;
  double radius = 0.0;
  bool sampled = false;  // some quantifier was approximated by samples
};

// Persistent environment: a linked list of bindings.
struct EnvNode;
using Env = std::shared_ptr<const EnvNode>;
struct EnvNode {
  std::string name;
  Approx entry;
  Env next;
};
Env env_bind(const Env& env, const std::string& name, Approx a);
const Approx* env_lookup(const Env& env, const std::string& name);

/// Function value. Either a lambda over an environment or a constant function.
struct Closure {
  Env env;
  std::string x;
  TermPtr body;  // null for a constant function
  Approx constant;
  std::uint64_t id = 0;

  std::mutex memo_mutex;
  std::map<ValuePtr, Approx, ValueLess> memo;  // first-order exact arguments only
};

std::shared_ptr<Closure> make_closure(Env env, std::string x, TermPtr body);
std::shared_ptr<Closure> make_constant_closure(Approx c);

/// Node of a (possibly cyclic) Markov process graph. The transition distribution
/// is computed on first demand and cached.
struct ProcNode {
  ValuePtr label;
  std::function<DistV()> thunk;
  std::shared_ptr<ProcNode> forward;  // set when the node is a fixed-point placeholder
  std::uint64_t id = 0;
  std::string name;  // optional, for reports

  ProcNode* deref();
  const DistV& step();
  const ValuePtr& get_label();

private:
  std::mutex mutex_;
  std::optional<DistV> cache_;
};

std::shared_ptr<ProcNode> make_proc_node(ValuePtr label, std::function<DistV()> thunk);
ValuePtr v_proc(std::shared_ptr<ProcNode> n);
ValuePtr v_closure(std::shared_ptr<Closure> c);

std::string print_value(const ValuePtr& v);

}  // namespace qlog
