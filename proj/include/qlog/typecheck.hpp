#pragma once

#include "qlog/syntax.hpp"

#include <map>
#include <string>
#include <vector>

namespace qlog {

// Per-variable sensitivity; absent names have grade 0.
using Usage = std::map<std::string, Grade>;

struct TypeErrorInfo {
  std::string rule;
  Span span;
  std::string message;

  std::string text() const;
  std::string json() const;
};

class TypeError : public std::runtime_error {
public:
  explicit TypeError(TypeErrorInfo info)
      : std::runtime_error(info.text()), info(std::move(info)) {}
  TypeErrorInfo info;
};

struct Synthesis {
  TypePtr type;
  Usage usage;
  TermPtr term;  // elaborated: annotations filled in
};

using TypeEnv = std::map<std::string, TypePtr>;

// Principal type and pointwise-minimal usage. Throws TypeError.
Synthesis synthesize(const TypeEnv& env, const TermPtr& t, const TypePtr& expected = nullptr);

struct CheckResult {
  bool ok = false;
  std::optional<TypeErrorInfo> error;
  Usage usage;
  TypePtr type;
  TermPtr elaborated;
};

// Gamma |- t : a, i.e. synthesis succeeds at type a with usage <= Gamma pointwise.
// A null `a` synthesizes the type.
CheckResult check(const TypeCtx& gamma, const TermPtr& t, const TypePtr& a);
// Delta |- phi : Prop with Delta discrete.
CheckResult checkPredicate(const TypeCtx& delta, const TermPtr& phi);

struct DeclReport {
  std::string name;
  std::string kind;  // "def" or "judgment"
  CheckResult result;
};

std::vector<DeclReport> check_program(const Program& p);

std::string print_usage(const Usage& u);

}  // namespace qlog
