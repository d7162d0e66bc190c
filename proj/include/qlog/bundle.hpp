#pragma once

#include "qlog/logic.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>

namespace qlog {

/// A derivation file: the tree itself plus optional top-level keys
///   "program": path of a .qlog file (relative to the derivation file),
///   "enums":   inline EnumSpec,
///   "envs":    number of environments for the semantic check (default 64).
struct ProofBundle {
  std::string path;
  nlohmann::json tree;
  std::shared_ptr<Program> program;
  std::shared_ptr<EnumSpec> enums;
  std::size_t max_envs = 64;
};

ProofBundle load_proof_bundle(const std::string& path);
ProofBundle proof_bundle_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

struct ProofReport {
  DerivationReport structural;
  SemanticReport semantic;
  std::size_t envs = 0;
  bool semantic_run = false;
  bool ok = false;
  nlohmann::json to_json() const;
};

/// checkDerivation, then (when semantic) checkSemantic of the root judgment.
ProofReport checkProofBundle(const ProofBundle& b, bool semantic, EvalOptions opt = {}, std::uint64_t seed = 1);

std::string read_file(const std::string& path);

}  // namespace qlog
