// One PASS/FAIL line per acceptance criterion. Each line combines the library's own
// criterion run with, where one exists, a brute-force reference computed here.

#include "qlog/casestudies.hpp"
#include "qlog/logic.hpp"
#include "qlog/suite.hpp"
#include "qlog/transport.hpp"

#include "../common/oracles.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <string>

using namespace qlog;

namespace {

constexpr double kTransportTol = 1e-7;
constexpr double kMarkovTol = 1e-4;
constexpr double kCoinTol = 1e-6;
constexpr double kKantTol = 1e-7;

struct Extra {
  bool ok = true;
  std::string note;
};

// Random instances: the exact solver and the float solver against vertex enumeration.
Extra transport_oracle() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> w(1, 9), cost(0, 12), size(1, 4);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int m = size(rng), n = std::min(size(rng), 3);
    std::vector<Rational> a(m), b(n);
    Rational ta = 0, tb = 0;
    for (auto& x : a) ta += (x = w(rng));
    for (auto& x : b) tb += (x = w(rng));
    for (auto& x : a) x /= ta;
    for (auto& x : b) x /= tb;
    std::vector<std::vector<Rational>> c(m, std::vector<Rational>(n));
    std::vector<std::vector<double>> cd(m, std::vector<double>(n));
    std::vector<double> ad, bd;
    for (auto& x : a) ad.push_back(rational_to_double(x));
    for (auto& x : b) bd.push_back(rational_to_double(x));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) cd[i][j] = rational_to_double(c[i][j] = Rational(cost(rng), 12));
    Rational ref = oracle::transport_vertices(a, b, c);
    if (kantorovich_exact(a, b, c) != ref) return {false, "exact solver differs at trial " + std::to_string(trial)};
    worst = std::max(worst, std::abs(transport::solve<double>(ad, bd, cd).cost - rational_to_double(ref)));
  }
  return {worst <= kTransportTol, "vertex oracle gap " + std::to_string(worst)};
}

// m stays with 1/3, n with 1/2, both otherwise move to a b-labelled loop z.
Extra markov_oracle(const CriterionResult& r) {
  oracle::Chain ch{{0, 0, 1}, {{1.0 / 3, 0, 2.0 / 3}, {0, 0.5, 0.5}, {0, 0, 1}}};
  double ref = oracle::chain_distance(ch, 0, 1, 1.0, 2000);
  double lib = r.detail.value("distance", nlohmann::json::object()).value("value", -1.0);
  bool ok = ref <= 0.25 + kMarkovTol && std::abs(ref - lib) <= kMarkovTol;
  return {ok, "oracle " + std::to_string(ref) + " library " + std::to_string(lib)};
}

Extra coin_oracle() {
  double e = 0.25, c = 0.5;
  oracle::Chain ch{{0, 1, 0, 1},
                   {{0.5, 0.5, 0, 0}, {0.5, 0.5, 0, 0}, {0, 0, 0.5 + e, 0.5 - e}, {0, 0, 0.5 + e, 0.5 - e}}};
  double ref = oracle::chain_distance(ch, 0, 2, c);
  double closed = c * e / (1 - c + c * e);
  auto lib = coinCheck(Grade::ratio(1, 2), Grade::ratio(1, 4));
  bool ok = std::abs(ref - closed) <= kCoinTol && std::abs(lib.distance.value - ref) <= kCoinTol;
  return {ok, "oracle " + std::to_string(ref) + " closed form " + std::to_string(closed)};
}

// Internal Kantorovich at the discrete metric against vertex-enumerated transport.
Extra kant_oracle() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> w(0, 5);
  TypeCtx dl{{"mu", Grade::infinity(), parse_type("D(Nat)")}, {"nu", Grade::infinity(), parse_type("D(Nat)")}};
  auto phi = parse_term("kant(mu, nu)");
  double worst = 0;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Rational> a(3), b(3);
    Rational ta = 0, tb = 0;
    while (ta == 0)
      for (auto& x : a) ta += (x = w(rng));
    while (tb == 0)
      for (auto& x : b) tb += (x = w(rng));
    std::vector<DistV::Atom> ma, mb;
    for (int k = 0; k < 3; ++k) {
      a[k] /= ta, b[k] /= tb;
      if (a[k] > 0) ma.push_back({v_nat(k), rational_to_double(a[k])});
      if (b[k] > 0) mb.push_back({v_nat(k), rational_to_double(b[k])});
    }
    std::vector<std::vector<Rational>> c(3, std::vector<Rational>(3, 1));
    for (int k = 0; k < 3; ++k) c[k][k] = 0;
    Rational ref = oracle::transport_vertices(a, b, c);
    if (ref != oracle::total_variation(a, b)) return {false, "oracle disagrees with total variation"};
    Env env = env_bind(env_bind(nullptr, "mu", {v_dist(DistV::from_atoms(ma)), 0}), "nu",
                       {v_dist(DistV::from_atoms(mb)), 0});
    double got = evalProp(dl, env, phi).value->prop;
    worst = std::max(worst, std::abs(got - rational_to_double(ref)));
  }
  return {worst <= kKantTol, "vertex oracle gap " + std::to_string(worst)};
}

}  // namespace

int main(int argc, char** argv) {
  SuiteOptions opt;
  opt.corpus_dir = argc > 1 ? argv[1] : QLOG_CORPUS_DIR;
  int failed = 0;
  for (int id = 1; id <= kCriteria; ++id) {
    auto r = runCriterion(id, opt);
    Extra extra;
    switch (id) {
      case 1: extra = transport_oracle(); break;
      case 3: extra = markov_oracle(r); break;
      case 4: extra = coin_oracle(); break;
      case 8: extra = kant_oracle(); break;
      default: break;
    }
    bool ok = r.ok && extra.ok;
    if (!ok) ++failed;
    std::printf("%s %2d %-28s %6.2fs%s%s\n", ok ? "PASS" : "FAIL", id, r.name.c_str(), r.seconds,
                extra.note.empty() ? "" : "  ", extra.note.c_str());
    if (!r.ok) std::cout << "     detail: " << r.detail.dump() << "\n";
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", kCriteria - failed, kCriteria);
  return failed == 0 ? 0 : 1;
}
