#pragma once

#include "qlog/measures.hpp"
#include "qlog/processes.hpp"
#include "qlog/quantale.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <random>
#include <vector>

namespace qlog {

// ---------------------------------------------------------------- Markov processes

// m = fix m. fold(a, delta(m) (+ 1/3) delta(z)), n likewise with 1/2, z a b-labelled loop.
extern const char* const kMarkovProgram;

struct MarkovReport {
  ProcDistance distance;
  double bound = 0.25;
  bool ok = false;
  nlohmann::json to_json() const;
};
MarkovReport markovCheck(double tol = 1e-4);

// Fair coin against the coin biased by eps, both in Proc(L, c); compares with c eps / (1 - c + c eps).
struct CoinReport {
  std::string c, eps;
  ProcDistance distance, bisim;
  double expected = 0;
  bool ok = false;
  nlohmann::json to_json() const;
};
std::string coinProgram(const Grade& c, const Grade& eps);
CoinReport coinCheck(const Grade& c, const Grade& eps, double tol = 1e-6, double slack = 1e-3);

// ---------------------------------------------------------------- temporal difference

using ValueVec = std::vector<double>;
using VecDist = SubDist<ValueVec>;

struct MDP {
  std::size_t states = 0, actions = 0;
  // trans[i][a]: next-state distribution, reward[i][a]: reward distribution on [0,1],
  // policy[i]: action distribution.
  std::vector<std::vector<std::vector<std::pair<std::size_t, double>>>> trans;
  std::vector<std::vector<std::vector<std::pair<double, double>>>> reward;
  std::vector<std::vector<std::pair<std::size_t, double>>> policy;
  Grade alpha, gamma;

  void validate() const;
  Grade k() const { return Grade(1) - alpha + gamma * alpha; }
  static MDP random(std::size_t states, std::size_t actions, Grade alpha, Grade gamma, std::mt19937_64& rng);
};

// The per-state update (1-a)V(i) * a(r * g V(j)) in the truth quantale.
double td_update(const MDP& m, double vi, double r, double vj);

// Distribution of the updated value at one state.
SubDist<double> tdBranch(const MDP& m, const ValueVec& v, std::size_t i);

struct TdOptions {
  std::size_t support_cap = 1 << 20;
  double prune = 1e-12;
};

/// Exact product over states of the per-state update distributions.
VecDist tdStep(const MDP& m, const ValueVec& v, const TdOptions& opt = {});
VecDist tdIterate(const MDP& m, const ValueVec& v, int n, const TdOptions& opt = {});

double dmax(const ValueVec& a, const ValueVec& b);

struct TdReport {
  int n = 0;
  double k = 0, initial = 0, bound = 0;
  double coupling_cost = 0;          // synchronous coupling: certified upper bound
  double lp = -1;                    // exact Kantorovich when the supports are small, else -1
  double pruned = 0;
  bool ok = false;
  nlohmann::json to_json() const;
};

/// Checks Kantorovich(TD V n, TD W n) <= k^n d(V, W) + tol.
TdReport tdContractionCheck(const MDP& m, const ValueVec& v, const ValueVec& w, int n, double tol = 1e-6,
                            const TdOptions& opt = {}, std::size_t lp_cap = 400);

// ---------------------------------------------------------------- hypercube

using Pos = std::uint32_t;  // bit i-1 is coordinate i

Pos flip(Pos p, int i);  // i = 0 leaves p unchanged
SubDist<Pos> hwalk(int n, Pos p);
Rational hamming(int n, Pos p, Pos q);  // normalised
std::vector<int> hypercubeSigma(int n, Pos p, Pos q);

struct HypercubeReport {
  int n = 0;
  std::size_t pairs = 0;
  double max_ratio = 0;       // LP distance / d(p, q) over distinct pairs
  double factor = 0;          // (N-1)/(N+1)
  bool marginals_ok = true;
  bool closed_form_ok = true;
  bool lp_below_sigma = true;
  bool ok = false;
  nlohmann::json to_json() const;
};

HypercubeReport hypercubeContractionCheck(int n, double tol = 1e-9);

}  // namespace qlog
