#include "qlog/bundle.hpp"
#include "qlog/casestudies.hpp"
#include "qlog/evaluator.hpp"
#include "qlog/hoare.hpp"
#include "qlog/logic.hpp"
#include "qlog/processes.hpp"
#include "qlog/suite.hpp"
#include "qlog/typecheck.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <random>

#ifndef QLOG_CORPUS_DIR
#define QLOG_CORPUS_DIR "corpus"
#endif

using namespace qlog;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Raised for bad input (exit 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  int fuel = 30;
  double tol = 1e-6;
  std::size_t max_iter = 10000;
  std::string enums_path;
  std::string format = "json";
  std::uint64_t seed = 0;
  unsigned jobs = 0;

  std::shared_ptr<EnumSpec> enums;

  EvalOptions eval() const {
    EvalOptions o;
    o.fuel = fuel;
    o.proc_tol = tol;
    o.enums = enums.get();
    o.jobs = jobs;
    return o;
  }

  void load_enums(const Program* env) {
    if (enums_path.empty()) return;
    json j;
    try {
      j = json::parse(read_file(enums_path));
    } catch (const json::parse_error& e) {
      throw UsageError(enums_path + ": " + e.what());
    }
    enums = std::make_shared<EnumSpec>(EnumSpec::from_json(j, env));
  }
};

Globals G;

Program load_qlog(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("no such file: " + path);
  return parse_program(read_file(path));
}

// --------------------------------------------------------------- output

void print_text(const json& j, const std::string& indent = "") {
  for (const auto& [k, v] : j.items()) {
    if (v.is_object()) {
      std::cout << indent << k << ":\n";
      print_text(v, indent + "  ");
    } else if (v.is_array() && !v.empty() && v[0].is_object()) {
      std::cout << indent << k << ":\n";
      for (const auto& e : v) {
        std::cout << indent << "  -\n";
        print_text(e, indent + "    ");
      }
    } else {
      std::cout << indent << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
    }
  }
}

int emit(const std::string& command, json body, bool ok) {
  json out{{"schema", "qlog/1"}, {"command", command}};
  for (auto& [k, v] : body.items()) out[k] = v;
  out["ok"] = ok;
  if (G.format == "text") print_text(out);
  else std::cout << out.dump(2) << "\n";
  return ok ? 0 : 1;
}

// --------------------------------------------------------------- check

int cmd_check(const std::vector<std::string>& files) {
  json reports = json::array();
  bool ok = true, parse_failed = false;
  for (const auto& f : files) {
    if (!fs::exists(f)) throw UsageError("no such file: " + f);
    if (fs::path(f).extension() == ".imp") {
      json r{{"path", f}};
      try {
        hoare::Program p = hoare::parse_program(read_file(f));
        r["ok"] = true;
        r["locations"] = p.layout.order;
      } catch (const hoare::HoareError& e) {
        r["ok"] = false;
        r["error"] = e.what();
        ok = false;
      }
      reports.push_back(r);
      continue;
    }
    QlogFileReport q = checkQlogFile(f);
    if (!q.parsed) parse_failed = true;
    ok = ok && q.all_ok;
    reports.push_back(q.to_json());
  }
  int code = emit("check", {{"files", reports}}, ok);
  return parse_failed ? 2 : code;
}

// --------------------------------------------------------------- eval / distance

json tree_json(const UnfoldTree& t) {
  json kids = json::array();
  for (const auto& [w, c] : t.children) kids.push_back({{"p", w}, {"next", tree_json(c)}});
  json j{{"label", t.label}};
  if (!kids.empty()) j["steps"] = kids;
  return j;
}

// name=label binds a process variable to a process emitting label forever.
Env bind_context(const Definition& d, const std::vector<std::string>& binds) {
  std::map<std::string, std::string> given;
  for (const auto& b : binds) {
    auto eq = b.find('=');
    if (eq == std::string::npos) throw UsageError("--bind expects name=label, got " + b);
    given[b.substr(0, eq)] = b.substr(eq + 1);
  }
  Env env;
  for (const auto& x : d.ctx) {
    auto it = given.find(x.name);
    if (it == given.end()) throw UsageError(d.name + " needs --bind " + x.name + "=LABEL");
    if (x.type->kind != TypeKind::Proc) throw UsageError("--bind supports process variables only");
    const auto& labels = x.type->a->labels;
    auto l = std::find(labels.begin(), labels.end(), it->second);
    if (l == labels.end()) throw UsageError("unknown label " + it->second + " for " + x.name);
    // one node per binding, shared by both sides of a distance
    static std::map<std::string, ProcRef> made;
    ProcRef& node = made[x.name + "=" + *l];
    if (!node) node = make_chain({v_label(static_cast<int>(l - labels.begin()), *l)}, {{{0, 1.0}}})[0];
    env = env_bind(env, x.name, Approx{v_proc(node), 0.0});
  }
  return env;
}

struct Evaluated {
  TypePtr type;
  Approx value;
};

Evaluated eval_def(const Program& p, const std::string& spec, const std::vector<std::string>& binds) {
  std::string name = spec;
  int component = 0;
  if (spec.size() > 2 && spec[spec.size() - 2] == '.' && (spec.back() == '1' || spec.back() == '2')) {
    name = spec.substr(0, spec.size() - 2);
    component = spec.back() - '0';
  }
  const Definition* d = p.find(name);
  if (!d) throw UsageError("no definition named " + name);
  CheckResult cr = check(d->ctx, d->body, d->type);
  if (!cr.ok) throw std::runtime_error(name + ": " + cr.error->text());
  Evaluated e{cr.type, eval(bind_context(*d, binds), cr.elaborated, G.eval())};
  if (component) {
    if (e.type->kind != TypeKind::Prod && e.type->kind != TypeKind::Tensor)
      throw UsageError(name + " is not a pair");
    e.type = component == 1 ? e.type->a : e.type->b;
    e.value.value = component == 1 ? e.value.value->a : e.value.value->b;
  }
  return e;
}

int cmd_eval(const std::string& file, const std::string& def, const std::string& term, int unfold,
             const std::vector<std::string>& binds) {
  Program p;
  if (!file.empty()) p = load_qlog(file);
  G.load_enums(&p);
  Evaluated e;
  json body;
  if (!def.empty()) {
    e = eval_def(p, def, binds);
    body["def"] = def;
  } else if (!term.empty()) {
    TermPtr t = parse_term(term, &p);
    CheckResult cr = check({}, t, nullptr);
    if (!cr.ok) throw std::runtime_error(cr.error->text());
    e = {cr.type, eval(nullptr, cr.elaborated, G.eval())};
    body["term"] = term;
  } else {
    throw UsageError("eval needs --def or --term");
  }
  body["type"] = print_type(e.type);
  body["value"] = approx_to_json(e.value);
  if (e.value.value->kind == VKind::Proc && unfold > 0) {
    Unfolding u = unfoldProcess(e.value.value->proc, unfold);
    body["unfolding"] = {{"depth", unfold}, {"tree", tree_json(u.tree)}, {"residual", u.residual}};
  }
  return emit("eval", body, true);
}

int cmd_distance(const std::string& file, const std::string& a, std::string b, const std::string& c_text,
                 const std::vector<std::string>& binds, bool bisim) {
  Program p = load_qlog(file);
  G.load_enums(&p);
  std::string left = a, right = b;
  if (right.empty()) {
    left = a + ".1";
    right = a + ".2";
  }
  Evaluated x = eval_def(p, left, binds), y = eval_def(p, right, binds);
  if (!type_equal(x.type, y.type))
    throw UsageError("types differ: " + print_type(x.type) + " vs " + print_type(y.type));
  json body{{"left", left}, {"right", right}, {"type", print_type(x.type)}};
  if (x.type->kind == TypeKind::Proc) {
    Grade c = c_text.empty() ? x.type->r : Grade::parse(c_text);
    ProcDistance d = behavioralDistance(x.value.value->proc, y.value.value->proc, c, G.tol);
    body["c"] = c.str();
    body["distance"] = d.value;
    body["radius"] = d.radius;
    body["iterations"] = d.iterations;
    body["pairs"] = d.pairs;
    if (bisim) {
      ProcDistance s = bisimilarityDistance(x.value.value->proc, y.value.value->proc, c, G.tol);
      body["bisimilarity"] = {{"distance", s.value}, {"radius", s.radius}};
    }
  } else {
    Distance d = distanceAt(x.type, x.value.value, y.value.value, G.eval());
    body["distance"] = d.value;
    body["radius"] = d.radius + x.value.radius + y.value.radius;
    body["lower_bound"] = d.lower_bound;
  }
  return emit("distance", body, true);
}

// --------------------------------------------------------------- prove / judge

int cmd_prove(const std::string& file, const std::string& program, bool semantic, std::size_t envs) {
  if (!fs::exists(file)) throw UsageError("no such file: " + file);
  ProofBundle b;
  try {
    b = load_proof_bundle(file);
  } catch (const LogicError& e) {
    throw UsageError(e.what());
  }
  if (!program.empty()) b.program = std::make_shared<Program>(load_qlog(program));
  if (!G.enums_path.empty()) {
    G.load_enums(b.program.get());
    b.enums = G.enums;
  }
  if (envs) b.max_envs = envs;
  ProofReport r = checkProofBundle(b, semantic, G.eval(), G.seed + 1);
  json body = r.to_json();
  body["file"] = file;
  if (semantic) {
    // margins are long; keep the worst one
    json worst;
    for (const auto& m : body["margins"])
      if (worst.is_null() || m["margin"].get<double>() < worst["margin"].get<double>()) worst = m;
    body.erase("margins");
    body["semantic"].erase("margins");
    body["semantic"]["worst"] = worst;
  }
  return emit("prove", body, r.ok);
}

int cmd_judge(const std::string& file, const std::string& name, const std::string& text, std::size_t envs) {
  Program p;
  if (!file.empty()) p = load_qlog(file);
  G.load_enums(&p);
  std::vector<std::pair<std::string, LogicJudgment>> todo;
  if (!text.empty()) todo.push_back({"<command line>", parse_judgment(text, &p)});
  for (const auto& j : p.judgments)
    if (text.empty() && (name.empty() || j.name == name)) todo.push_back({j.name, j.judgment});
  if (todo.empty()) throw UsageError("no judgment to check");
  json out = json::array();
  bool ok = true;
  for (auto& [n, j] : todo) {
    auto samples = sample_envs(j.delta, G.enums.get(), envs, G.seed + 1);
    SemanticReport r = checkSemantic(j, samples, G.eval());
    json e{{"name", n}, {"judgment", print_judgment(j)}, {"envs", samples.size()}, {"status", r.ok ? "ok" : "fail"},
           {"one_sided", r.one_sided}};
    if (!r.error.empty()) e["error"] = r.error;
    json worst;
    for (const auto& m : r.to_json()["margins"])
      if (worst.is_null() || m["margin"].get<double>() < worst["margin"].get<double>()) worst = m;
    e["worst"] = worst;
    ok = ok && r.ok;
    out.push_back(e);
  }
  return emit("judge", {{"judgments", out}}, ok);
}

// --------------------------------------------------------------- case studies

struct CaseOpts {
  std::string which;
  int n = 3;
  std::string c = "1/2", eps = "1/4";
  int seeds = 50, steps = 6, states = 2;
  std::string alpha = "1/2", gamma = "1/2";
  int L = 3, N = 4, max_q = 3;
  int iters = 20;
};

int cmd_casestudy(const CaseOpts& o) {
  if (o.which == "markov") {
    MarkovReport r = markovCheck(std::min(G.tol, 1e-4));
    return emit("casestudy", {{"study", "markov"}, {"report", r.to_json()}}, r.ok);
  }
  if (o.which == "coin") {
    CoinReport r = coinCheck(Grade::parse(o.c), Grade::parse(o.eps), G.tol);
    return emit("casestudy", {{"study", "coin"}, {"report", r.to_json()}}, r.ok);
  }
  if (o.which == "td") {
    Grade a = Grade::parse(o.alpha), g = Grade::parse(o.gamma);
    json runs = json::array();
    bool ok = true;
    for (int s = 0; s < o.seeds; ++s) {
      std::mt19937_64 rng(G.seed * 1000 + static_cast<std::uint64_t>(s));
      MDP m = MDP::random(static_cast<std::size_t>(o.states), 2, a, g, rng);
      std::uniform_int_distribution<int> eighth(0, 8);
      ValueVec v(m.states), w(m.states);
      for (auto& x : v) x = eighth(rng) / 8.0;
      for (auto& x : w) x = eighth(rng) / 8.0;
      for (int n = 1; n <= o.steps; ++n) {
        TdReport t = tdContractionCheck(m, v, w, n, G.tol);
        ok = ok && t.ok;
        json j = t.to_json();
        j["seed"] = s;
        runs.push_back(j);
      }
    }
    return emit("casestudy", {{"study", "td"}, {"alpha", a.str()}, {"gamma", g.str()}, {"runs", runs}}, ok);
  }
  if (o.which == "hypercube") {
    if (o.n < 1 || o.n > 8) throw UsageError("--n must lie in 1..8");
    HypercubeReport r = hypercubeContractionCheck(o.n);
    return emit("casestudy", {{"study", "hypercube"}, {"report", r.to_json()}}, r.ok);
  }
  if (o.which == "hoare-ast") {
    json rows = json::array();
    bool ok = true;
    for (const auto& r : hoare::asTerminationCheck(o.iters)) {
      ok = ok && r.ok;
      rows.push_back({{"n", r.n}, {"mass", r.mass}, {"triple", r.triple}, {"radius", r.radius}, {"ok", r.ok}});
    }
    return emit("casestudy", {{"study", "hoare-ast"}, {"rows", rows}}, ok);
  }
  if (o.which == "prp") {
    hoare::PrpReport r = hoare::prpPrfCheck(o.L, o.N, o.max_q);
    return emit("casestudy", {{"study", "prp"}, {"report", r.to_json()}}, r.ok);
  }
  throw UsageError("unknown case study " + o.which);
}

// --------------------------------------------------------------- hoare

int cmd_hoare(const std::string& lfile, const std::string& rfile, const std::string& pre, const std::string& post,
              const std::string& mode, double bound) {
  for (const auto& f : {lfile, rfile})
    if (!fs::exists(f)) throw UsageError("no such file: " + f);
  hoare::Program l = hoare::parse_program(read_file(lfile));
  hoare::Program r = hoare::parse_program(read_file(rfile));
  hoare::Layout lay = l.layout;
  lay.merge(r.layout);
  hoare::PredPtr phi = hoare::parse_pred(pre), psi = hoare::parse_pred(post);
  hoare::Lift lift = mode == "leq" ? hoare::Lift::Leq : hoare::Lift::Eq;
  std::vector<std::pair<hoare::Store, hoare::Store>> pairs;
  auto stores = lay.universe();
  for (const auto& s : stores)
    for (const auto& t : stores)
      if (hoare::evalPred(lay, phi, s, t) < 1.0) pairs.push_back({s, t});
  hoare::EvalOpts eo;
  eo.max_iter = G.max_iter;
  hoare::TripleResult tr = hoare::tripleValue(lay, phi, l.body, r.body, psi, lift, pairs, eo);
  json body{{"left", lfile}, {"right", rfile}, {"pre", pre}, {"post", post}, {"mode", mode},
            {"result", tr.to_json()}};
  bool ok = true;
  if (bound >= 0) {
    body["bound"] = bound;
    ok = tr.value <= bound + G.tol;
  }
  return emit("hoare", body, ok);
}

// --------------------------------------------------------------- suite

int cmd_suite(const std::string& corpus, const std::vector<int>& only) {
  SuiteOptions so;
  so.corpus_dir = corpus;
  so.seed = G.seed;
  so.jobs = G.jobs;
  if (!fs::is_directory(corpus)) throw UsageError("no corpus directory " + corpus);
  auto results = runSuite(so, std::set<int>(only.begin(), only.end()));
  json crit = json::array();
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.ok;
    json j = r.to_json();
    j.erase("seconds");
    crit.push_back(j);
  }
  if (G.format == "text") {
    for (const auto& r : results)
      std::cout << (r.ok ? "PASS" : "FAIL") << "  " << r.id << ". " << r.name << "\n";
    std::cout << (ok ? "all criteria pass" : "some criteria fail") << "\n";
    return ok ? 0 : 1;
  }
  return emit("suite", {{"corpus", corpus}, {"criteria", crit}}, ok);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qlog: graded type checking, quantitative logic and probabilistic case studies"};
  app.require_subcommand(1);
  auto global = [&](CLI::App* sub) {
    sub->add_option("--fuel", G.fuel, "fixed-point iterations")->check(CLI::NonNegativeNumber);
    sub->add_option("--tol", G.tol, "numerical tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", G.max_iter, "loop iteration cap for imperative programs");
    sub->add_option("--enums", G.enums_path, "enumeration spec (JSON)");
    sub->add_option("--format", G.format, "json or text")->check(CLI::IsMember({"json", "text"}));
    sub->add_option("--seed", G.seed, "random seed");
    sub->add_option("--jobs", G.jobs, "worker threads, 0 = all cores");
  };

  std::vector<std::string> check_files;
  auto* check = app.add_subcommand("check", "typecheck .qlog (or .imp) files");
  check->add_option("files", check_files)->required();

  std::string eval_file, eval_def, eval_term;
  int eval_unfold = 0;
  std::vector<std::string> eval_binds;
  auto* evalc = app.add_subcommand("eval", "evaluate a definition or closed term");
  evalc->add_option("file", eval_file);
  evalc->add_option("--def", eval_def, "definition (name, name.1 or name.2)");
  evalc->add_option("--term", eval_term, "closed term");
  evalc->add_option("--unfold", eval_unfold, "unfold a process to this depth");
  evalc->add_option("--bind", eval_binds, "bind a process variable: name=label");

  std::string dist_file, dist_a, dist_b, dist_c;
  std::vector<std::string> dist_binds;
  bool dist_bisim = false;
  auto* distance = app.add_subcommand("distance", "distance between two definitions");
  distance->add_option("file", dist_file)->required();
  distance->add_option("left", dist_a)->required();
  distance->add_option("right", dist_b, "omit to compare the components of a pair");
  distance->add_option("--c", dist_c, "discount for process distances (default: from the type)");
  distance->add_option("--bind", dist_binds, "bind a process variable: name=label");
  distance->add_flag("--bisim", dist_bisim, "also compute the bisimilarity fixed point");

  std::string prove_file, prove_program;
  bool prove_semantic = false;
  std::size_t prove_envs = 0;
  auto* prove = app.add_subcommand("prove", "check a derivation file");
  prove->add_option("file", prove_file)->required();
  prove->add_option("--program", prove_program, "program the judgments refer to");
  prove->add_flag("--semantic", prove_semantic, "also check the root judgment on sampled environments");
  prove->add_option("--envs", prove_envs, "number of environments");

  std::string judge_file, judge_name, judge_text;
  std::size_t judge_envs = 64;
  auto* judge = app.add_subcommand("judge", "check judgments semantically");
  judge->add_option("file", judge_file);
  judge->add_option("--name", judge_name, "only this judgment");
  judge->add_option("--judgment", judge_text, "judgment text");
  judge->add_option("--envs", judge_envs, "number of environments");

  CaseOpts co;
  auto* cs = app.add_subcommand("casestudy", "reproduce a case study");
  cs->add_option("study", co.which)
      ->required()
      ->check(CLI::IsMember({"markov", "coin", "td", "hypercube", "hoare-ast", "prp"}));
  cs->add_option("--n", co.n, "hypercube dimension");
  cs->add_option("--c", co.c, "coin discount");
  cs->add_option("--eps", co.eps, "coin bias");
  cs->add_option("--seeds", co.seeds, "TD: random MDPs");
  cs->add_option("--steps", co.steps, "TD: iterations");
  cs->add_option("--states", co.states, "TD: states per MDP");
  cs->add_option("--alpha", co.alpha, "TD learning rate");
  cs->add_option("--gamma", co.gamma, "TD discount");
  cs->add_option("--L", co.L, "PRP: queries");
  cs->add_option("--N", co.N, "PRP: range size");
  cs->add_option("--max-q", co.max_q, "PRP: largest Q");
  cs->add_option("--iters", co.iters, "hoare-ast: largest iteration count");

  std::string h_left, h_right, h_pre = "tt", h_post = "tt", h_mode = "eq";
  double h_bound = -1;
  auto* hoare_cmd = app.add_subcommand("hoare", "value of a relational triple {pre} left ~ right {post}");
  hoare_cmd->add_option("left", h_left)->required();
  hoare_cmd->add_option("right", h_right)->required();
  hoare_cmd->add_option("--pre", h_pre, "store-pair predicate");
  hoare_cmd->add_option("--post", h_post, "store-pair predicate");
  hoare_cmd->add_option("--mode", h_mode, "eq or leq")->check(CLI::IsMember({"eq", "leq"}));
  hoare_cmd->add_option("--bound", h_bound, "fail when the value exceeds this");

  std::string suite_corpus = QLOG_CORPUS_DIR;
  std::vector<int> suite_only;
  auto* suite = app.add_subcommand("suite", "run every acceptance criterion");
  suite->add_option("--corpus", suite_corpus, "corpus directory");
  suite->add_option("--only", suite_only, "criterion ids")->delimiter(',');

  for (auto* s : {check, evalc, distance, prove, judge, cs, hoare_cmd, suite}) global(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*check) return cmd_check(check_files);
    if (*evalc) return cmd_eval(eval_file, eval_def, eval_term, eval_unfold, eval_binds);
    if (*distance) return cmd_distance(dist_file, dist_a, dist_b, dist_c, dist_binds, dist_bisim);
    if (*prove) return cmd_prove(prove_file, prove_program, prove_semantic, prove_envs);
    if (*judge) return cmd_judge(judge_file, judge_name, judge_text, judge_envs);
    if (*cs) return cmd_casestudy(co);
    if (*hoare_cmd) return cmd_hoare(h_left, h_right, h_pre, h_post, h_mode, h_bound);
    if (*suite) return cmd_suite(suite_corpus, suite_only);
  } catch (const UsageError& e) {
    std::cerr << "qlog: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "qlog: parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "qlog: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
