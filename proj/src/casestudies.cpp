#include "qlog/casestudies.hpp"

#include "qlog/evaluator.hpp"
#include "qlog/transport.hpp"
#include "qlog/typecheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace qlog {

// ---------------------------------------------------------------- Markov processes

const char* const kMarkovProgram = R"(labels L = {a, b};
def m [z : Proc(L,1)] : Proc(L,1) = fix m. fold(a, delta(m) (+ 1/3) delta(z));
def n [z : Proc(L,1)] : Proc(L,1) = fix n. fold(a, delta(n) (+ 1/2) delta(z));
)";

namespace {

nlohmann::json proc_json(const ProcDistance& d) {
  return {{"value", d.value}, {"radius", d.radius}, {"iterations", d.iterations}, {"pairs", d.pairs}, {"kappa", d.kappa}};
}

ProcRef eval_proc(const Program& p, const std::string& name, const Env& env) {
  const Definition* d = p.find(name);
  CheckResult cr = check(d->ctx, d->body, d->type);
  if (!cr.ok) throw std::runtime_error(name + ": " + cr.error->text());
  Approx v = eval(env, cr.elaborated);
  if (v.value->kind != VKind::Proc) throw std::runtime_error(name + " is not a process");
  return v.value->proc;
}

}  // namespace

nlohmann::json MarkovReport::to_json() const {
  return {{"distance", proc_json(distance)}, {"bound", bound}, {"ok", ok}};
}

MarkovReport markovCheck(double tol) {
  Program p = parse_program(kMarkovProgram);
  // z: a process that emits b forever
  std::vector<ProcRef> z = make_chain({v_label(1, "b")}, {{{0, 1.0}}});
  Env env = env_bind(nullptr, "z", Approx{v_proc(z[0]), 0.0});
  MarkovReport rep;
  rep.distance = behavioralDistance(eval_proc(p, "m", env), eval_proc(p, "n", env), Grade(1), tol);
  rep.ok = rep.distance.value <= rep.bound + tol;
  return rep;
}

std::string coinProgram(const Grade& c, const Grade& eps) {
  Grade w = Grade::ratio(1, 2) - eps;
  if (!(eps < Grade::ratio(1, 2))) throw std::invalid_argument("eps must be below 1/2");
  std::string proc = "Proc(Coin," + c.str() + ")";
  auto coin = [&](const std::string& name, const std::string& weight) {
    std::string flip = "delta(pi1(x)) (+ " + weight + ") delta(pi2(x))";
    return "def " + name + " : " + proc + " * " + proc + " = fix x. <fold(Hd, " + flip + "), fold(Tl, " + flip +
           ")>;\n";
  };
  return "labels Coin = {Hd, Tl};\n" + coin("fair", "1/2") + coin("biased", w.str());
}

nlohmann::json CoinReport::to_json() const {
  return {{"c", c}, {"eps", eps}, {"distance", proc_json(distance)}, {"bisimilarity", proc_json(bisim)},
          {"expected", expected}, {"ok", ok}};
}

CoinReport coinCheck(const Grade& c, const Grade& eps, double tol, double slack) {
  if (!(Grade(0) < c) || !(c < Grade(1))) throw std::invalid_argument("coin discount must lie in (0,1)");
  Program p = parse_program(coinProgram(c, eps));
  auto hd = [&](const std::string& name) {
    const Definition* d = p.find(name);
    Approx v = eval_closed(d->body, d->type);
    return v.value->a->proc;
  };
  CoinReport rep;
  rep.c = c.str();
  rep.eps = eps.str();
  ProcRef f = hd("fair"), b = hd("biased");
  rep.distance = behavioralDistance(f, b, c, tol);
  rep.bisim = bisimilarityDistance(f, b, c, tol);
  double cd = c.to_double(), ed = eps.to_double();
  rep.expected = cd * ed / (1 - cd + cd * ed);
  rep.ok = std::abs(rep.distance.value - rep.expected) <= slack &&
           std::abs(rep.distance.value - rep.bisim.value) <= 2 * tol + rep.distance.radius + rep.bisim.radius;
  return rep;
}

// ---------------------------------------------------------------- MDPs

void MDP::validate() const {
  auto check_dist = [](double total, const char* what) {
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument(std::string(what) + " weights must sum to 1");
  };
  if (trans.size() != states || reward.size() != states || policy.size() != states)
    throw std::invalid_argument("MDP tables must have one entry per state");
  for (std::size_t i = 0; i < states; ++i) {
    if (trans[i].size() != actions || reward[i].size() != actions)
      throw std::invalid_argument("MDP tables must have one entry per action");
    double pt = 0;
    for (auto [a, w] : policy[i]) {
      if (a >= actions) throw std::invalid_argument("policy action out of range");
      pt += w;
    }
    check_dist(pt, "policy");
    for (std::size_t a = 0; a < actions; ++a) {
      double t = 0, r = 0;
      for (auto [j, w] : trans[i][a]) {
        if (j >= states) throw std::invalid_argument("transition target out of range");
        t += w;
      }
      for (auto [x, w] : reward[i][a]) {
        if (x < 0 || x > 1) throw std::invalid_argument("rewards must lie in [0,1]");
        r += w;
      }
      check_dist(t, "transition");
      check_dist(r, "reward");
    }
  }
  if (!(alpha < Grade(1)) || !(gamma < Grade(1))) throw std::invalid_argument("alpha and gamma must be below 1");
}

namespace {

// Random distribution over {0..n-1} with the given support size; weights in eighths.
std::vector<std::pair<std::size_t, double>> random_support(std::size_t n, std::size_t support, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  support = std::min(support, n);
  std::vector<int> w(support);
  int total = 0;
  for (auto& x : w) total += (x = std::uniform_int_distribution<int>(1, 8)(rng));
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t k = 0; k < support; ++k) out.push_back({idx[k], static_cast<double>(w[k]) / total});
  return out;
}

}  // namespace

MDP MDP::random(std::size_t states, std::size_t actions, Grade alpha, Grade gamma, std::mt19937_64& rng) {
  MDP m;
  m.states = states;
  m.actions = actions;
  m.alpha = alpha;
  m.gamma = gamma;
  m.trans.resize(states);
  m.reward.resize(states);
  for (std::size_t i = 0; i < states; ++i) {
    m.policy.push_back(random_support(actions, actions, rng));
    for (std::size_t a = 0; a < actions; ++a) {
      m.trans[i].push_back(random_support(states, 1, rng));
      double r = std::uniform_int_distribution<int>(0, 4)(rng) / 4.0;
      m.reward[i].push_back({{r, 1.0}});
    }
  }
  return m;
}

double td_update(const MDP& m, double vi, double r, double vj) {
  double a = m.alpha.to_double(), g = m.gamma.to_double();
  double inner = std::min(1.0, r + std::min(1.0, g * vj));
  return std::min(1.0, std::min(1.0, (1 - a) * vi) + std::min(1.0, a * inner));
}

SubDist<double> tdBranch(const MDP& m, const ValueVec& v, std::size_t i) {
  std::vector<SubDist<double>::Atom> atoms;
  for (auto [a, pa] : m.policy.at(i))
    for (auto [r, pr] : m.reward[i][a])
      for (auto [j, pj] : m.trans[i][a]) atoms.push_back({td_update(m, v[i], r, v[j]), pa * pr * pj});
  return SubDist<double>::from_atoms(std::move(atoms));
}

VecDist tdStep(const MDP& m, const ValueVec& v, const TdOptions& opt) {
  if (v.size() != m.states) throw std::invalid_argument("value vector has the wrong dimension");
  std::vector<VecDist::Atom> acc{{ValueVec{}, 1.0}};
  for (std::size_t i = 0; i < m.states; ++i) {
    SubDist<double> b = tdBranch(m, v, i);
    std::vector<VecDist::Atom> next;
    for (const auto& [vec, w] : acc)
      for (const auto& [x, wx] : b.atoms()) {
        ValueVec e = vec;
        e.push_back(x);
        next.push_back({std::move(e), w * wx});
      }
    if (next.size() > opt.support_cap) throw std::length_error("tdStep: support exceeds the configured cap");
    acc = std::move(next);
  }
  return VecDist::from_atoms(std::move(acc));
}

VecDist tdIterate(const MDP& m, const ValueVec& v, int n, const TdOptions& opt) {
  VecDist cur = VecDist::dirac(v);
  for (int k = 0; k < n; ++k) {
    std::vector<VecDist::Atom> atoms;
    for (const auto& [vec, w] : cur.atoms()) {
      VecDist step = tdStep(m, vec, opt);
      for (const auto& [x, wx] : step.atoms()) atoms.push_back({x, w * wx});
    }
    if (atoms.size() > opt.support_cap) throw std::length_error("tdIterate: support exceeds the configured cap");
    cur = VecDist::from_atoms(std::move(atoms));
  }
  return cur;
}

double dmax(const ValueVec& a, const ValueVec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

nlohmann::json TdReport::to_json() const {
  nlohmann::json j{{"n", n},           {"k", k},         {"initial", initial}, {"bound", bound},
                   {"coupling", coupling_cost}, {"pruned", pruned}, {"ok", ok}};
  if (lp >= 0) j["lp"] = lp;
  return j;
}

TdReport tdContractionCheck(const MDP& m, const ValueVec& v, const ValueVec& w, int n, double tol,
                            const TdOptions& opt, std::size_t lp_cap) {
  m.validate();
  TdReport rep;
  rep.n = n;
  rep.k = m.k().to_double();
  rep.initial = dmax(v, w);
  rep.bound = std::pow(rep.k, n) * rep.initial;

  // Synchronous coupling: both runs share action, reward and transition draws.
  using PairVec = std::pair<ValueVec, ValueVec>;
  std::map<PairVec, double> cur{{{v, w}, 1.0}};
  for (int step = 0; step < n; ++step) {
    std::map<PairVec, double> next;
    for (const auto& [vw, wt] : cur) {
      std::vector<std::pair<PairVec, double>> acc{{{ValueVec{}, ValueVec{}}, wt}};
      for (std::size_t i = 0; i < m.states; ++i) {
        std::vector<std::pair<PairVec, double>> grown;
        for (auto [a, pa] : m.policy[i])
          for (auto [r, pr] : m.reward[i][a])
            for (auto [j, pj] : m.trans[i][a]) {
              double x = td_update(m, vw.first[i], r, vw.first[j]);
              double y = td_update(m, vw.second[i], r, vw.second[j]);
              for (const auto& [p, pw] : acc) {
                PairVec e = p;
                e.first.push_back(x);
                e.second.push_back(y);
                grown.push_back({std::move(e), pw * pa * pr * pj});
              }
            }
        acc = std::move(grown);
      }
      for (auto& [p, pw] : acc) next[p] += pw;
      if (next.size() > opt.support_cap) throw std::length_error("tdContractionCheck: coupling support exceeds cap");
    }
    cur = std::move(next);
  }
  for (const auto& [vw, wt] : cur) rep.coupling_cost += wt * dmax(vw.first, vw.second);

  VecDist dv = tdIterate(m, v, n, opt), dw = tdIterate(m, w, n, opt);
  if (dv.size() <= lp_cap && dw.size() <= lp_cap) {
    std::vector<double> a, b;
    for (const auto& at : dv.atoms()) a.push_back(at.second);
    for (const auto& at : dw.atoms()) b.push_back(at.second);
    std::vector<std::vector<double>> c(a.size(), std::vector<double>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) c[i][j] = dmax(dv.atoms()[i].first, dw.atoms()[j].first);
    rep.lp = transport::solve<double>(a, b, c).cost;
  }
  double best = rep.lp >= 0 ? std::min(rep.lp, rep.coupling_cost) : rep.coupling_cost;
  rep.ok = best <= rep.bound + tol + rep.pruned && (rep.lp < 0 || rep.lp <= rep.coupling_cost + 1e-9);
  return rep;
}

// ---------------------------------------------------------------- hypercube

Pos flip(Pos p, int i) { return i == 0 ? p : p ^ (Pos(1) << (i - 1)); }

SubDist<Pos> hwalk(int n, Pos p) {
  std::vector<SubDist<Pos>::Atom> atoms;
  for (int i = 0; i <= n; ++i) atoms.push_back({flip(p, i), 1.0 / (n + 1)});
  return SubDist<Pos>::from_atoms(std::move(atoms));
}

Rational hamming(int n, Pos p, Pos q) {
  return Rational(static_cast<long long>(__builtin_popcount(p ^ q)), n);
}

std::vector<int> hypercubeSigma(int n, Pos p, Pos q) {
  std::vector<int> sigma(n + 1);
  for (int i = 0; i <= n; ++i) sigma[i] = i;
  std::vector<int> diff;
  for (int i = 1; i <= n; ++i)
    if ((p ^ q) >> (i - 1) & 1) diff.push_back(i);
  if (diff.size() == 1) {
    sigma[0] = diff[0];
    sigma[diff[0]] = 0;
  } else if (diff.size() > 1) {
    for (std::size_t k = 0; k < diff.size(); ++k) sigma[diff[k]] = diff[(k + 1) % diff.size()];
  }
  return sigma;
}

nlohmann::json HypercubeReport::to_json() const {
  return {{"n", n},
          {"pairs", pairs},
          {"max_ratio", max_ratio},
          {"factor", factor},
          {"marginals_ok", marginals_ok},
          {"closed_form_ok", closed_form_ok},
          {"lp_below_sigma", lp_below_sigma},
          {"ok", ok}};
}

HypercubeReport hypercubeContractionCheck(int n, double tol) {
  if (n < 1 || n > 12) throw std::invalid_argument("hypercube dimension must be in 1..12");
  HypercubeReport rep;
  rep.n = n;
  Rational factor(n - 1, n + 1);
  rep.factor = rational_to_double(factor);
  bool bound_ok = true;
  Pos count = Pos(1) << n;
  for (Pos p = 0; p < count; ++p) {
    SubDist<Pos> wp = hwalk(n, p);
    for (Pos q = 0; q < count; ++q) {
      ++rep.pairs;
      SubDist<Pos> wq = hwalk(n, q);
      std::vector<int> sigma = hypercubeSigma(n, p, q);

      // sigma must be a permutation, and the coupling's marginals the two walks
      std::vector<int> seen(n + 1, 0);
      for (int s : sigma) ++seen.at(s);
      std::map<Pos, long long> left, right;
      Rational cost(0);
      for (int i = 0; i <= n; ++i) {
        ++left[flip(p, i)];
        ++right[flip(q, sigma[i])];
        cost += hamming(n, flip(p, i), flip(q, sigma[i]));
      }
      cost /= (n + 1);
      auto matches = [&](const std::map<Pos, long long>& counts, const SubDist<Pos>& walk) {
        if (counts.size() != walk.size()) return false;
        for (const auto& [x, c] : counts)
          if (std::abs(walk.weight(x) - static_cast<double>(c) / (n + 1)) > 1e-15) return false;
        return true;
      };
      if (std::count(seen.begin(), seen.end(), 1) != n + 1 || !matches(left, wp) || !matches(right, wq))
        rep.marginals_ok = false;

      int diff = __builtin_popcount(p ^ q);
      Rational d = hamming(n, p, q);
      if (diff >= 1 && cost != Rational((n - 1) * diff, n) / (n + 1)) rep.closed_form_ok = false;
      if (diff == 0 && cost != 0) rep.closed_form_ok = false;
      if (cost > factor * d) bound_ok = false;

      std::vector<double> a, b;
      for (const auto& at : wp.atoms()) a.push_back(at.second);
      for (const auto& at : wq.atoms()) b.push_back(at.second);
      std::vector<std::vector<double>> c(a.size(), std::vector<double>(b.size()));
      for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
          c[i][j] = rational_to_double(hamming(n, wp.atoms()[i].first, wq.atoms()[j].first));
      double lp = transport::solve<double>(a, b, c).cost;
      if (lp > rational_to_double(cost) + tol) rep.lp_below_sigma = false;
      if (diff > 0) {
        double ratio = lp / rational_to_double(d);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        if (ratio > rep.factor + tol) bound_ok = false;
      } else if (lp > tol) {
        bound_ok = false;
      }
    }
  }
  rep.ok = bound_ok && rep.marginals_ok && rep.closed_form_ok && rep.lp_below_sigma;
  return rep;
}

}  // namespace qlog
