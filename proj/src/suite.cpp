#include "qlog/suite.hpp"

#include "qlog/bundle.hpp"
#include "qlog/casestudies.hpp"
#include "qlog/evaluator.hpp"
#include "qlog/hoare.hpp"
#include "qlog/measures.hpp"
#include "qlog/processes.hpp"
#include "qlog/transport.hpp"
#include "qlog/typecheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <regex>

namespace qlog {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- corpus files

json QlogFileReport::to_json() const {
  json j{{"path", path}, {"parsed", parsed}, {"ok", all_ok}, {"decls", decls}};
  if (!parse_error.empty()) j["parse_error"] = parse_error;
  if (expect) j["expect"] = *expect;
  if (!first_rule.empty()) j["rule"] = first_rule;
  return j;
}

QlogFileReport checkQlogFile(const std::string& path) {
  QlogFileReport r;
  r.path = path;
  std::string text = read_file(path);
  std::smatch m;
  static const std::regex expect_re(R"(--\s*expect:\s*([A-Za-z-]+))");
  if (std::regex_search(text, m, expect_re)) r.expect = m[1].str();
  Program p;
  try {
    p = parse_program(text);
  } catch (const ParseError& e) {
    r.parse_error = e.what();
    return r;
  }
  r.parsed = true;
  r.all_ok = true;
  for (const auto& d : check_program(p)) {
    json j{{"name", d.name}, {"kind", d.kind}, {"ok", d.result.ok}};
    if (d.result.ok) {
      if (d.result.type) j["type"] = print_type(d.result.type);
      j["usage"] = print_usage(d.result.usage);
    } else {
      j["rule"] = d.result.error->rule;
      j["error"] = d.result.error->text();
      if (r.first_rule.empty()) r.first_rule = d.result.error->rule;
      r.all_ok = false;
    }
    r.decls.push_back(std::move(j));
  }
  return r;
}

std::vector<std::string> corpus_files(const std::string& dir, const std::string& ext) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > ext.size() && name.compare(name.size() - ext.size(), ext.size(), ext) == 0)
      out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------- criteria

json CriterionResult::to_json() const {
  return {{"id", id}, {"name", name}, {"ok", ok}, {"seconds", seconds}, {"detail", detail}};
}

namespace {

using Clock = std::chrono::steady_clock;

// 1. exact rational transport against the float solver and, for the discrete
// metric, against total variation.
CriterionResult transport_criterion(const SuiteOptions& opt) {
  CriterionResult r{1, "transport: exact vs float", true, 0, {}};
  std::mt19937_64 rng(opt.seed + 101);
  std::uniform_int_distribution<int> size(1, 5), w(1, 12), c(0, 8);
  double worst = 0;
  int instances = 0, tv_checked = 0;
  for (int k = 0; k < 200; ++k) {
    int m = size(rng), n = size(rng);
    auto weights = [&](int len) {
      std::vector<long long> raw(len);
      long long total = 0;
      for (auto& x : raw) total += (x = w(rng));
      std::vector<Rational> out;
      for (auto x : raw) out.push_back(Rational(x, total));
      return out;
    };
    auto a = weights(m), b = weights(n);
    bool discrete = k % 4 == 0;
    std::vector<std::vector<Rational>> cost(m, std::vector<Rational>(n));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) cost[i][j] = discrete ? Rational(i == j ? 0 : 1) : Rational(c(rng), 8);
    Rational exact = transport::solve<Rational>(a, b, cost).cost;
    std::vector<double> ad, bd;
    std::vector<std::vector<double>> cd(m, std::vector<double>(n));
    for (auto& x : a) ad.push_back(rational_to_double(x));
    for (auto& x : b) bd.push_back(rational_to_double(x));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) cd[i][j] = rational_to_double(cost[i][j]);
    double approx = transport::solve<double>(ad, bd, cd).cost;
    worst = std::max(worst, std::abs(approx - rational_to_double(exact)));
    if (discrete) {
      // TV = sum of positive parts of a - b
      Rational tv = 0;
      for (int i = 0; i < std::max(m, n); ++i) {
        Rational d = (i < m ? a[i] : Rational(0)) - (i < n ? b[i] : Rational(0));
        if (d > 0) tv += d;
      }
      if (tv != exact) r.ok = false;
      ++tv_checked;
    }
    ++instances;
  }
  r.ok = r.ok && worst <= 1e-7;
  r.detail = {{"instances", instances}, {"tv_checked", tv_checked}, {"max_float_error", worst}, {"tol", 1e-7}};
  return r;
}

// 2. geo at fuel 30
CriterionResult geo_criterion(const SuiteOptions& opt) {
  CriterionResult r{2, "geo: weights 2^-(k+1), residual 2^-30", false, 0, {}};
  Program p = parse_program(read_file(opt.corpus_dir + "/geo.qlog"));
  const Definition* d = p.find("geo");
  EvalOptions eo;
  eo.fuel = 30;
  Approx v = eval_closed(d->body, d->type, eo);
  const DistV& mu = *v.value->dist;
  bool ok = mu.size() == 30;
  for (int k = 0; k < 30 && ok; ++k) ok = mu.weight(v_nat(static_cast<unsigned long long>(k))) == std::ldexp(1.0, -(k + 1));
  ok = ok && mu.residual() == std::ldexp(1.0, -30);
  r.ok = ok;
  r.detail = {{"support", mu.size()}, {"residual", mu.residual()}, {"expected_residual", std::ldexp(1.0, -30)}};
  return r;
}

CriterionResult markov_criterion(const SuiteOptions&) {
  CriterionResult r{3, "markov: d(m, n) <= 1/4", false, 0, {}};
  MarkovReport m = markovCheck(1e-4);
  r.ok = m.ok;
  r.detail = m.to_json();
  return r;
}

CriterionResult coin_criterion(const SuiteOptions&) {
  CriterionResult r{4, "coin: c eps / (1 - c + c eps) at c = 1/2, eps = 1/4", false, 0, {}};
  auto t0 = Clock::now();
  CoinReport c = coinCheck(Grade::ratio(1, 2), Grade::ratio(1, 4), 1e-6, 1e-3);
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  r.ok = c.ok && secs < 10.0;
  r.detail = c.to_json();
  r.detail["under_10s"] = secs < 10.0;
  return r;
}

struct ProcGroup {
  Grade c;
  std::vector<std::pair<std::string, ProcRef>> procs;
};

// Closed process-valued definitions (or pairs of them) with discount c < 1.
void collect_procs(const Program& p, const std::string& file,
                   std::map<std::string, ProcGroup>& groups) {
  for (const auto& d : p.defs) {
    if (!d.ctx.empty() || !d.type) continue;
    std::vector<std::pair<std::string, TypePtr>> parts;
    bool pair = d.type->kind == TypeKind::Prod || d.type->kind == TypeKind::Tensor;
    if (pair) parts = {{".1", d.type->a}, {".2", d.type->b}};
    else parts = {{"", d.type}};
    bool any = false;
    for (auto& [suffix, t] : parts) any = any || (t->kind == TypeKind::Proc && t->r < Grade(1));
    if (!any) continue;
    Approx v = eval_closed(d.body, d.type);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const TypePtr& t = parts[i].second;
      if (t->kind != TypeKind::Proc || !(t->r < Grade(1))) continue;
      ValuePtr pv = pair ? (i == 0 ? v.value->a : v.value->b) : v.value;
      ProcGroup& g = groups[print_type(t)];
      g.c = t->r;
      g.procs.push_back({file + ":" + d.name + parts[i].first, pv->proc});
    }
  }
}

CriterionResult bisim_criterion(const SuiteOptions& opt) {
  CriterionResult r{5, "bisimilarity distance = behavioral distance (c < 1)", true, 0, {}};
  const double tol = 1e-6;
  std::map<std::string, ProcGroup> groups;
  for (const auto& f : corpus_files(opt.corpus_dir, ".qlog"))
    collect_procs(parse_program(read_file(f)), fs::path(f).filename().string(), groups);
  json pairs = json::array();
  double worst = 0;
  for (auto& [ty, group] : groups) {
    const Grade& c = group.c;
    const auto& procs = group.procs;
    for (std::size_t i = 0; i < procs.size(); ++i)
      for (std::size_t k = i + 1; k < procs.size(); ++k) {
        ProcDistance b = behavioralDistance(procs[i].second, procs[k].second, c, tol);
        ProcDistance s = bisimilarityDistance(procs[i].second, procs[k].second, c, tol);
        double gap = std::abs(b.value - s.value);
        worst = std::max(worst, gap);
        bool ok = gap <= 2 * tol;
        r.ok = r.ok && ok;
        pairs.push_back({{"left", procs[i].first}, {"right", procs[k].first}, {"behavioral", b.value},
                         {"bisimilarity", s.value}, {"ok", ok}});
      }
  }
  r.ok = r.ok && !pairs.empty();
  r.detail = {{"pairs", pairs}, {"max_gap", worst}, {"tol", 2 * tol}};
  return r;
}

CriterionResult td_criterion(const SuiteOptions& opt) {
  CriterionResult r{6, "TD: Kantorovich(TD^n V, TD^n W) <= k^n d(V, W)", true, 0, {}};
  std::size_t runs = 0, failures = 0;
  double worst = -1;
  json params = json::array();
  for (auto [a, g] : {std::pair{Grade::ratio(1, 2), Grade::ratio(1, 2)}, {Grade::ratio(1, 2), Grade::ratio(4, 5)}}) {
    params.push_back({a.str(), g.str()});
    for (int seed = 0; seed < 50; ++seed) {
      std::mt19937_64 rng(opt.seed * 1000 + static_cast<std::uint64_t>(seed));
      MDP m = MDP::random(2, 2, a, g, rng);
      std::uniform_int_distribution<int> eighth(0, 8);
      ValueVec v(m.states), w(m.states);
      for (auto& x : v) x = eighth(rng) / 8.0;
      for (auto& x : w) x = eighth(rng) / 8.0;
      for (int n = 1; n <= 6; ++n) {
        TdReport t = tdContractionCheck(m, v, w, n, 1e-6);
        ++runs;
        if (!t.ok) ++failures;
        double best = t.lp >= 0 ? std::min(t.lp, t.coupling_cost) : t.coupling_cost;
        worst = std::max(worst, best - t.bound);
      }
    }
  }
  r.ok = failures == 0;
  r.detail = {{"runs", runs}, {"failures", failures}, {"max_excess", worst}, {"params", params}, {"tol", 1e-6}};
  return r;
}

CriterionResult hypercube_criterion(const SuiteOptions&) {
  CriterionResult r{7, "hypercube: hwalk contracts by (N-1)/(N+1)", true, 0, json::array()};
  for (int n : {2, 3, 4}) {
    HypercubeReport h = hypercubeContractionCheck(n);
    r.ok = r.ok && h.ok;
    r.detail.push_back(h.to_json());
  }
  return r;
}

// total variation of two finite distributions, straight from the atoms
double tv(const DistV& mu, const DistV& nu) {
  double s = 0;
  for (const auto& [v, w] : mu.atoms()) s += std::max(0.0, w - nu.weight(v));
  for (const auto& [v, w] : nu.atoms()) s += std::max(0.0, w - mu.weight(v));
  return s / 2;
}

CriterionResult kant_criterion(const SuiteOptions& opt) {
  CriterionResult r{8, "internal kant matches total variation", true, 0, {}};
  std::mt19937_64 rng(opt.seed + 808);
  std::uniform_int_distribution<int> support(1, 5), point(0, 4), w(1, 10);
  auto random_dist = [&]() {
    std::vector<DistV::Atom> atoms;
    std::vector<int> raw;
    int total = 0;
    int k = support(rng);
    for (int i = 0; i < k; ++i) total += raw.emplace_back(w(rng));
    for (int i = 0; i < k; ++i) atoms.push_back({v_nat(point(rng)), static_cast<double>(raw[i]) / total});
    return DistV::from_atoms(std::move(atoms));
  };
  TypeCtx delta{{"mu", Grade::infinity(), Type::dist(Type::nat())}, {"nu", Grade::infinity(), Type::dist(Type::nat())}};
  TermPtr k = parse_term("kant(mu, nu)");
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    DistV mu = random_dist(), nu = random_dist();
    Env env = env_bind(env_bind(nullptr, "mu", {v_dist(mu), 0}), "nu", {v_dist(nu), 0});
    double internal = evalProp(delta, env, k).value->prop;
    worst = std::max(worst, std::abs(internal - tv(mu, nu)));
  }
  r.ok = worst <= 1e-7;
  r.detail = {{"pairs", 100}, {"max_error", worst}, {"tol", 1e-7}};
  return r;
}

CriterionResult hoare_criterion(const SuiteOptions&) {
  CriterionResult r{9, "hoare: a.s. termination mass 1 - 2^-n", true, 0, json::array()};
  for (const auto& row : hoare::asTerminationCheck(20)) {
    r.ok = r.ok && row.ok;
    r.detail.push_back({{"n", row.n}, {"mass", row.mass}, {"triple", row.triple}, {"ok", row.ok}});
  }
  return r;
}

CriterionResult prp_criterion(const SuiteOptions&) {
  CriterionResult r{10, "PRP/PRF switching at L = 3", true, 0, json::array()};
  for (int n : {4, 8}) {
    hoare::PrpReport p = hoare::prpPrfCheck(3, n, 3);
    r.ok = r.ok && p.ok;
    r.detail.push_back(p.to_json());
  }
  return r;
}

CriterionResult logic_criterion(const SuiteOptions& opt) {
  CriterionResult r{11, "derivations: structural and semantic checks", true, 0, {}};
  std::set<std::string> rules;
  json files = json::array();
  auto paths = corpus_files(opt.corpus_dir, ".deriv.json");
  std::set<std::string> names;
  EvalOptions eo;
  eo.jobs = opt.jobs;
  for (const auto& f : paths) {
    ProofBundle b = load_proof_bundle(f);
    ProofReport rep = checkProofBundle(b, true, eo, opt.seed + 1);
    bool ok = rep.ok && rep.envs >= 20;
    r.ok = r.ok && ok;
    rules.insert(rep.structural.rules.begin(), rep.structural.rules.end());
    std::string name = fs::path(f).filename().string();
    names.insert(name);
    json e{{"file", name}, {"ok", ok}, {"nodes", rep.structural.nodes}, {"envs", rep.envs}};
    if (!rep.structural.ok) e["violations"] = rep.structural.to_json()["violations"];
    if (!rep.semantic.error.empty()) e["error"] = rep.semantic.error;
    files.push_back(e);
  }
  json missing = json::array();
  for (const auto& n : rule_names())
    if (!rules.count(n)) missing.push_back(n);
  json required = json::array();
  for (const char* n : {"transitivity.deriv.json", "symmetry.deriv.json", "congruence.deriv.json",
                        "markov_bound.deriv.json"})
    if (!names.count(n)) required.push_back(n);
  r.ok = r.ok && paths.size() >= 25 && missing.empty() && required.empty();
  r.detail = {{"files", files},
              {"count", paths.size()},
              {"rules_covered", rules.size()},
              {"missing_rules", missing},
              {"missing_files", required}};
  return r;
}

CriterionResult typecheck_criterion(const SuiteOptions& opt) {
  CriterionResult r{12, "corpus accepted, mutants rejected by the expected rule", true, 0, {}};
  json accepted = json::array(), mutants = json::array();
  for (const auto& f : corpus_files(opt.corpus_dir, ".qlog")) {
    QlogFileReport q = checkQlogFile(f);
    r.ok = r.ok && q.all_ok;
    accepted.push_back({{"file", fs::path(f).filename().string()}, {"ok", q.all_ok}});
  }
  auto muts = corpus_files(opt.corpus_dir + "/mutants", ".qlog");
  for (const auto& f : muts) {
    QlogFileReport q = checkQlogFile(f);
    bool ok = q.parsed && !q.all_ok && q.expect && *q.expect == q.first_rule;
    r.ok = r.ok && ok;
    mutants.push_back({{"file", fs::path(f).filename().string()},
                       {"expect", q.expect.value_or("")},
                       {"rule", q.first_rule},
                       {"ok", ok}});
  }
  r.ok = r.ok && muts.size() >= 10 && !accepted.empty();
  r.detail = {{"accepted", accepted}, {"mutants", mutants}};
  return r;
}

}  // namespace

CriterionResult runCriterion(int id, const SuiteOptions& opt) {
  using Fn = CriterionResult (*)(const SuiteOptions&);
  static const Fn table[kCriteria] = {transport_criterion, geo_criterion,       markov_criterion, coin_criterion,
                                      bisim_criterion,     td_criterion,        hypercube_criterion,
                                      kant_criterion,      hoare_criterion,     prp_criterion,
                                      logic_criterion,     typecheck_criterion};
  if (id < 1 || id > kCriteria) throw std::out_of_range("no criterion " + std::to_string(id));
  auto t0 = Clock::now();
  CriterionResult r;
  try {
    r = table[id - 1](opt);
  } catch (const std::exception& e) {
    r.id = id;
    r.ok = false;
    r.detail = {{"error", e.what()}};
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

std::vector<CriterionResult> runSuite(const SuiteOptions& opt, const std::set<int>& only) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriteria; ++id)
    if (only.empty() || only.count(id)) out.push_back(runCriterion(id, opt));
  return out;
}

}  // namespace qlog
