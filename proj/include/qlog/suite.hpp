#pragma once

#include "qlog/syntax.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace qlog {

// ---------------------------------------------------------------- corpus files

struct QlogFileReport {
  std::string path;
  bool parsed = false;
  std::string parse_error;
  std::optional<std::string> expect;  // rule named by a `-- expect: RULE` header
  std::vector<nlohmann::json> decls;   // one entry per def / judgment
  bool all_ok = false;                 // parsed and every declaration typechecks
  std::string first_rule;              // rule of the first type error, if any
  nlohmann::json to_json() const;
};

QlogFileReport checkQlogFile(const std::string& path);

// Sorted paths in dir with the given extension (".qlog", ".deriv.json", ...).
std::vector<std::string> corpus_files(const std::string& dir, const std::string& ext);

// ---------------------------------------------------------------- acceptance criteria

struct SuiteOptions {
  std::string corpus_dir;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool ok = false;
  double seconds = 0;
  nlohmann::json detail;
  nlohmann::json to_json() const;
};

inline constexpr int kCriteria = 12;

CriterionResult runCriterion(int id, const SuiteOptions& opt);
std::vector<CriterionResult> runSuite(const SuiteOptions& opt, const std::set<int>& only = {});

}  // namespace qlog
