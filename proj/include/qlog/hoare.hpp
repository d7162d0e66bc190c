#pragma once

#include "qlog/measures.hpp"
#include "qlog/quantale.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace qlog::hoare {

class HoareError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- stores

using Nat = std::uint64_t;
using Store = std::vector<Nat>;  // flat slots, see Layout

struct LocInfo {
  std::size_t offset = 0, length = 1;
  bool array = false;
  Nat lo = 0, hi = 0;  // range used when enumerating stores
};

struct Layout {
  std::map<std::string, LocInfo> locs;
  std::vector<std::string> order;  // declaration order
  std::size_t slots = 0;

  void declare(const std::string& name, std::size_t length, bool array, Nat lo = 0, Nat hi = 0);
  const LocInfo& at(const std::string& name) const;
  bool has(const std::string& name) const { return locs.count(name) > 0; }
  Store zero() const { return Store(slots, 0); }
  // Adds the locations of other; shared names must agree in shape.
  void merge(const Layout& other);
  // Every store with each slot in its declared range.
  std::vector<Store> universe(std::size_t cap = 100000) const;
  nlohmann::json show(const Store& s) const;
};

// ---------------------------------------------------------------- syntax

enum class ExprKind { Num, Bool, Read, ReadArr, Add, Sub, Mul, Le, Eq, And, Unif };
enum class ExprType { Nat, Bool, Dist };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;
struct Expr {
  ExprKind kind;
  Nat n = 0;
  bool b = false;
  std::string loc;
  ExprPtr a, c;  // operands; for ReadArr, a is the index
};

enum class CmdKind { Skip, Assign, Sample, Seq, If, While };

struct Cmd;
using CmdPtr = std::shared_ptr<const Cmd>;
struct Cmd {
  CmdKind kind;
  std::string loc;
  ExprPtr index;  // array element target, or null
  ExprPtr e;      // assigned value, sampled distribution or guard
  CmdPtr c1, c2;
};

struct Program {
  Layout layout;
  CmdPtr body;
};

/// Parses the .imp surface syntax: declarations `var x : lo..hi;` and
/// `array a[n] : lo..hi;` followed by a command.
Program parse_program(const std::string& text);
ExprPtr parse_expr(const std::string& text);
std::string print_cmd(const CmdPtr& c);

ExprType typecheck(const Layout& l, const ExprPtr& e);
void typecheck(const Layout& l, const CmdPtr& c);

// ---------------------------------------------------------------- semantics

struct EVal {
  ExprType type = ExprType::Nat;
  Nat n = 0;  // Nat value, or the bound of unif
  bool b = false;
};

EVal evalExpr(const Layout& l, const Store& s, const ExprPtr& e);

using StoreDist = SubDist<Store>;

struct EvalOpts {
  std::size_t max_iter = 10000;  // body executions per loop entry
  double tol = 1e-12;            // stop when the still-running mass drops below tol
  std::size_t support_cap = 1 << 20;
};

struct CmdResult {
  StoreDist dist;     // residual = divergence plus cutoff mass
  double cutoff = 0;  // part of the residual due to stopping early
};

CmdResult evalCmd(const Layout& l, const CmdPtr& c, const Store& s, const EvalOpts& opt = {});

// ---------------------------------------------------------------- triples

/// Store-pair predicates: tt, ff, comparisons of expressions over s(x), s'(x),
/// s(a[e]), s'(a[e]) and numerals, joined by && and ||. Whole arrays compare with =.
struct Pred;
using PredPtr = std::shared_ptr<const Pred>;
PredPtr parse_pred(const std::string& text);
PropVal evalPred(const Layout& l, const PredPtr& p, const Store& s, const Store& t);

enum class Lift { Eq, Leq };

// Mode-lifted value of a predicate; nullptr stands for bottom.
PropVal lifted(const Layout& l, const PredPtr& p, Lift mode, const Store* s, const Store* t);

/// Least expected lifted cost over couplings of mu and nu, bottom adjoined to both.
double couplingCost(const Layout& l, const PredPtr& psi, Lift mode, const StoreDist& mu, const StoreDist& nu);

struct TripleResult {
  double value = 0, radius = 0;
  std::size_t pairs = 0;
  nlohmann::json worst;  // the maximizing store pair
  nlohmann::json to_json() const;
};

TripleResult tripleValue(const Layout& l, const PredPtr& phi, const CmdPtr& c, const CmdPtr& c2,
                         const PredPtr& psi, Lift mode, const std::vector<std::pair<Store, Store>>& pairs,
                         const EvalOpts& opt = {});

// ---------------------------------------------------------------- examples

/// l := 0; while !l = 0 { sample l unif 1 }
Program asTermination();

struct AsTermRow {
  int n = 0;
  double mass = 0, triple = 0, radius = 0;
  bool ok = false;
};
std::vector<AsTermRow> asTerminationCheck(int max_n);

struct PrpReport {
  int L = 0, N = 0, max_q = 0;
  bool nth_unused_ok = false;
  std::vector<double> loop_value;          // tripleValue per Q, compared with Q/N
  std::vector<double> tv;                  // TV distance of arr projections per Q
  std::vector<double> lp;                  // same via the coupling LP
  std::vector<std::string> eps;            // eps_Q exact
  bool loop_ok = false, cumulative_ok = false, telescoping_ok = false, lp_matches_tv = false;
  std::string eps_l_minus_1, eps_l;
  double tv_at_l = 0;
  bool ok = false;
  nlohmann::json to_json() const;
};

Rational prp_eps(int q, int n);
Program nthUnused(int L);
Program riProgram(int L, int N, int Q);
Program rfProgram(int L, int N, int Q);
Program riLoop(int L, int N);
Program rfLoop(int L, int N);

PrpReport prpPrfCheck(int L, int N, int max_q, double tol = 1e-9);

}  // namespace qlog::hoare
