#pragma once

#include "qlog/evaluator.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace qlog {

class LogicError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- semantics

/// Truth value of a predicate (0 = true) in an environment for the discrete context delta.
Approx evalProp(const TypeCtx& delta, const Env& env, const TermPtr& phi, const EvalOptions& opt = {});

struct EnvSample {
  Env env;
  nlohmann::json shown;  // variable -> value
  bool sampled = false;
};

/// Environments inhabiting delta: the full product of enumerations when it has at most
/// max_envs elements, otherwise a seeded random selection. Distribution variables over
/// enumerable types get random finite distributions; unbounded Nat defaults to 0..3.
std::vector<EnvSample> sample_envs(const TypeCtx& delta, const EnumSpec* spec, std::size_t max_envs = 64,
                                   std::uint64_t seed = 1);

struct EnvMargin {
  nlohmann::json env;
  double lhs = 0, rhs = 0, radius = 0;
  double margin = 0;  // lhs + radius + tol - rhs
  bool sampled = false;
};

struct SemanticReport {
  bool ok = true;
  bool one_sided = false;  // some quantifier or environment was sampled
  std::vector<EnvMargin> margins;
  std::string error;
  nlohmann::json to_json() const;
};

/// Checks [[psi_1]] + ... + [[psi_n]] >= [[phi]] on every environment.
SemanticReport checkSemantic(const LogicJudgment& j, const std::vector<EnvSample>& envs,
                             const EvalOptions& opt = {}, double tol = 1e-9);

/// mean over rho of R(x, y), plus the two marginal distances, truncated at 1.
Approx couplingValue(const TermPtr& rel, const std::string& x, const std::string& y, const TypePtr& a,
                     const TypePtr& b, const DistV& rho, const DistV& mu, const DistV& nu,
                     const TypeCtx& delta = {}, const Env& env = nullptr, const EvalOptions& opt = {});

// ---------------------------------------------------------------- derivations

/// Judgmental normal form: beta, projections, case and tensor matching, monad laws for
/// let over delta / oplus / let, rec on numerals, unfold of fold, and a canonical form
/// for chains of oplus. Fixed points are unrolled `unfold` times first.
TermPtr normalize(const TermPtr& t, int unfold = 0);
bool judgmentally_equal(const TermPtr& a, const TermPtr& b, int unfold = 0);

struct Derivation {
  std::string rule;  // canonical rule id
  std::string judgment_text;
  LogicJudgment judgment;
  nlohmann::json params;
  std::vector<Derivation> children;
  nlohmann::json templ;  // unparsed child for template premises (ind-dist step)
};

// Canonical rule ids; unicode spellings are accepted as aliases.
const std::vector<std::string>& rule_names();
std::optional<std::string> canonical_rule(const std::string& name);

Derivation parse_derivation(const nlohmann::json& j, const Program* env = nullptr);

struct Violation {
  std::string path;  // "root/0/1"
  std::string rule;
  std::string message;
};

struct DerivationReport {
  bool ok = true;
  std::vector<Violation> violations;
  std::size_t nodes = 0;
  bool classical = false;  // uses not-e
  std::set<std::string> rules;
  nlohmann::json to_json() const;
};

DerivationReport checkDerivation(const nlohmann::json& d, const Program* env = nullptr);

/// Collects every judgment of a parsed derivation (template premises instantiated at p = 1/2).
std::vector<LogicJudgment> derivation_judgments(const nlohmann::json& d, const Program* env = nullptr);

}  // namespace qlog
