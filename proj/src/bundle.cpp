#include "qlog/bundle.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace qlog {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ProofBundle proof_bundle_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw LogicError("derivation file must hold a JSON object");
  ProofBundle b;
  b.tree = j;
  if (j.contains("program")) {
    fs::path p = fs::path(base_dir) / j["program"].get<std::string>();
    b.program = std::make_shared<Program>(parse_program(read_file(p.string())));
  }
  if (j.contains("enums")) b.enums = std::make_shared<EnumSpec>(EnumSpec::from_json(j["enums"], b.program.get()));
  b.max_envs = j.value("envs", std::size_t{64});
  return b;
}

ProofBundle load_proof_bundle(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw LogicError(path + ": " + e.what());
  }
  ProofBundle b = proof_bundle_from_json(j, fs::path(path).parent_path().string());
  b.path = path;
  return b;
}

json ProofReport::to_json() const {
  json j = structural.to_json();
  if (semantic_run) {
    j["envs"] = envs;
    j["semantic"] = semantic.to_json();
    j["margins"] = j["semantic"]["margins"];
  }
  j["status"] = ok ? "ok" : "rejected";
  return j;
}

ProofReport checkProofBundle(const ProofBundle& b, bool semantic, EvalOptions opt, std::uint64_t seed) {
  ProofReport r;
  r.structural = checkDerivation(b.tree, b.program.get());
  r.ok = r.structural.ok;
  if (!semantic) return r;
  r.semantic_run = true;
  LogicJudgment j = parse_judgment(b.tree.at("judgment").get<std::string>(), b.program.get());
  if (b.enums) opt.enums = b.enums.get();
  try {
    auto envs = sample_envs(j.delta, b.enums.get(), b.max_envs, seed);
    r.envs = envs.size();
    r.semantic = checkSemantic(j, envs, opt);
  } catch (const std::exception& e) {
    r.semantic.ok = false;
    r.semantic.error = e.what();
  }
  r.ok = r.ok && r.semantic.ok;
  return r;
}

}  // namespace qlog
