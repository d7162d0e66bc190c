#pragma once

#include "qlog/value.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qlog {

/// How to range over a type for quantifiers, probes and sampled environments.
/// Keyed by the printed type.
struct EnumEntry {
  bool finite = false;
  unsigned long long nat_max = 0;  // finite Nat ranges are 0..nat_max
  std::vector<TermPtr> samples;    // closed terms
  std::vector<ValuePtr> values;    // explicit values, e.g. finite process chains
};

struct EnumSpec {
  std::map<std::string, EnumEntry> entries;

  const EnumEntry* find(const TypePtr& t) const;
  // {"Nat": {"mode": "finite", "max": 3}, "D(Nat)": {"mode": "samples", "terms": ["delta(0)"]},
  //  "Proc(L,1)": {"mode": "chains", "chains": [{"labels": ["b"], "rows": [[[0, 1]]]}]}}
  // A chain is a finite labelled Markov chain; the sample is its state 0.
  static EnumSpec from_json(const nlohmann::json& j, const Program* env = nullptr);
};

struct EvalOptions {
  int fuel = 30;            // fixed-point iterations / unfoldings
  double tol = 1e-12;       // early stop for Banach iteration
  double proc_tol = 1e-6;   // behavioral distances inside predicates
  const EnumSpec* enums = nullptr;
  unsigned jobs = 0;        // worker threads for per-environment checks, 0 = all cores
};

class EvalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Evaluates an elaborated (type-annotated) term.
Approx eval(const Env& env, const TermPtr& t, const EvalOptions& opt = {});

// Applies a function value.
Approx apply(const Approx& f, const Approx& arg, const EvalOptions& opt = {});

/// Banach iteration x_{n+1} = f(x_n) from the canonical seed of `a` (the fully
/// truncated subdistribution at D types). Stops after `fuel` steps, when the radius
/// drops to tol, or at an exact fixed point.
Approx fixEval(const std::function<Approx(const Approx&)>& f, const Grade& p, const TypePtr& a,
               int fuel, double tol);

ValuePtr canonicalSeed(const TypePtr& a);

struct Distance {
  double value = 0.0;
  double radius = 0.0;       // numerical uncertainty (process distances)
  bool lower_bound = false;  // computed over a finite probe set
};

// The metric of the type. Function types need probes from opt.enums.
Distance distanceAt(const TypePtr& a, const ValuePtr& v1, const ValuePtr& v2,
                    const EvalOptions& opt = {});

// Values of a type per the EnumSpec (or automatically for small finite types).
// Returns nullopt when the type cannot be enumerated. `sampled` tells whether
// the list is a proper sample rather than the whole type.
std::optional<std::vector<ValuePtr>> enumerate_type(const TypePtr& a, const EnumSpec* spec,
                                                    bool* sampled = nullptr);

/// Pieces of `exists w. coup[x, y. R](w, mu, nu)`.
struct CouplingShape {
  std::string x, y;
  TermPtr rel, mu, nu;
};
std::optional<CouplingShape> match_coupling(const TermPtr& exists_term);

// inf over couplings of mu and nu of the mean of cost; residual mass is matched
// against an adjoined bottom point at distance 1.
double coupling_infimum(const DistV& mu, const DistV& nu,
                        const std::function<double(const ValuePtr&, const ValuePtr&)>& cost);

nlohmann::json value_to_json(const ValuePtr& v);
nlohmann::json approx_to_json(const Approx& a);

// Closed-term helper: typechecks against `a` (or synthesizes) and evaluates.
Approx eval_closed(const TermPtr& t, const TypePtr& a = nullptr, const EvalOptions& opt = {});

}  // namespace qlog
