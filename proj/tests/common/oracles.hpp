#pragma once
// Brute-force reference computations shared by the unit and acceptance tests.
// Nothing here calls into the library's solvers.

#include "qlog/quantale.hpp"

#include <cstddef>
#include <algorithm>
#include <numeric>
#include <optional>
#include <type_traits>
#include <vector>

namespace oracle {

using qlog::Rational;

// Optimal transport by enumerating every basic solution: each spanning tree of the
// bipartite m x n cell graph gives one vertex of the transport polytope.
template <class S>
S transport_vertices(const std::vector<S>& a, const std::vector<S>& b, const std::vector<std::vector<S>>& c) {
  const std::size_t m = a.size(), n = b.size(), cells = m * n, k = m + n - 1;
  std::optional<S> best;
  std::vector<std::size_t> pick(k);
  std::iota(pick.begin(), pick.end(), 0);
  for (;;) {
    // union-find over rows 0..m-1 and columns m..m+n-1
    std::vector<std::size_t> parent(m + n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    bool tree = true;
    for (std::size_t idx : pick) {
      std::size_t r = find(idx / n), s = find(m + idx % n);
      if (r == s) { tree = false; break; }
      parent[r] = s;
    }
    if (tree) {
      std::vector<S> sup = a, dem = b;
      std::vector<bool> done(k, false);
      std::vector<S> flow(k);
      for (std::size_t step = 0; step < k; ++step) {
        // a row or column touched by exactly one open cell fixes that cell's flow
        bool found = false;
        for (std::size_t node = 0; node < m + n && !found; ++node) {
          std::size_t count = 0, which = 0;
          for (std::size_t t = 0; t < k; ++t) {
            if (done[t]) continue;
            bool touches = node < m ? pick[t] / n == node : pick[t] % n == node - m;
            if (touches) ++count, which = t;
          }
          if (count != 1) continue;
          std::size_t i = pick[which] / n, j = pick[which] % n;
          flow[which] = node < m ? sup[i] : dem[j];
          sup[i] -= flow[which];
          dem[j] -= flow[which];
          done[which] = true;
          found = true;
        }
        if (!found) break;
      }
      bool feasible = true;
      S slack = 0;
      if constexpr (std::is_floating_point_v<S>) slack = -1e-12;
      S cost = 0;
      for (std::size_t t = 0; t < k; ++t) {
        if (!done[t] || flow[t] < slack) feasible = false;
        cost += flow[t] * c[pick[t] / n][pick[t] % n];
      }
      if (feasible && (!best || cost < *best)) best = cost;
    }
    // next k-subset of cells
    std::size_t p = k;
    while (p > 0 && pick[p - 1] == cells - k + p - 1) --p;
    if (p == 0) break;
    ++pick[p - 1];
    for (std::size_t q = p; q < k; ++q) pick[q] = pick[q - 1] + 1;
  }
  return *best;
}

// Behavioral distance of two states of a finite labelled chain by value iteration,
// with each Kantorovich step done by vertex enumeration.
struct Chain {
  std::vector<int> label;
  std::vector<std::vector<double>> next;  // dense transition rows
};

inline double chain_distance(const Chain& m, std::size_t s, std::size_t t, double c, int iters = 400) {
  const std::size_t n = m.label.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (int it = 0; it < iters; ++it) {
    auto nd = d;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (m.label[i] != m.label[j]) { nd[i][j] = 1; continue; }
        std::vector<double> a, b;
        std::vector<std::size_t> ia, jb;
        for (std::size_t k = 0; k < n; ++k) {
          if (m.next[i][k] > 0) a.push_back(m.next[i][k]), ia.push_back(k);
          if (m.next[j][k] > 0) b.push_back(m.next[j][k]), jb.push_back(k);
        }
        std::vector<std::vector<double>> cost(a.size(), std::vector<double>(b.size()));
        for (std::size_t x = 0; x < a.size(); ++x)
          for (std::size_t y = 0; y < b.size(); ++y) cost[x][y] = d[ia[x]][jb[y]];
        nd[i][j] = std::min(1.0, c * transport_vertices(a, b, cost));
      }
    d = nd;
  }
  return d[s][t];
}

// Total variation of two weight vectors over the same indexed support.
inline Rational total_variation(const std::vector<Rational>& a, const std::vector<Rational>& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
  return s / 2;
}

}  // namespace oracle
