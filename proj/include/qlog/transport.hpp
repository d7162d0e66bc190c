#pragma once

// Transportation-problem solver (network simplex on the bipartite support graph).
// Templated on the scalar so the same code runs on doubles and exact rationals.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <type_traits>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qlog::transport {

template <class Scalar>
struct Plan {
  Scalar cost{};
  std::vector<std::vector<Scalar>> flow;  // flow[i][j], rows = supply, cols = demand
  std::size_t pivots = 0;
};

template <class Scalar>
struct Tolerance {
  static Scalar eps() { return Scalar(0); }
};
template <>
struct Tolerance<double> {
  static double eps() { return 1e-13; }
};

namespace detail {

template <class Scalar>
class Solver {
public:
  Solver(std::vector<Scalar> supply, std::vector<Scalar> demand,
         const std::vector<std::vector<Scalar>>& cost)
      : m_(supply.size()), n_(demand.size()), supply_(std::move(supply)),
        demand_(std::move(demand)), cost_(cost), eps_(Tolerance<Scalar>::eps()) {}

  Plan<Scalar> run(std::size_t max_pivots) {
    initial_basis();
    std::vector<Scalar> u(m_), v(n_);
    std::size_t degenerate_run = 0;
    bool bland = false;
    Plan<Scalar> out;
    for (;;) {
      potentials(u, v);
      std::size_t ei = 0, ej = 0;
      if (!entering(u, v, bland, ei, ej)) break;
      if (++out.pivots > max_pivots) throw std::runtime_error("transport: pivot limit exceeded");
      bool degenerate = pivot(ei, ej, bland);
      degenerate_run = degenerate ? degenerate_run + 1 : 0;
      // Bland's rule from then on rules out cycling.
      if (degenerate_run > m_ + n_) bland = true;
    }
    out.flow.assign(m_, std::vector<Scalar>(n_, Scalar(0)));
    out.cost = Scalar(0);
    for (const Cell& c : basis_) {
      Scalar x = flow_[c.i * n_ + c.j];
      if (x < Scalar(0)) x = Scalar(0);
      out.flow[c.i][c.j] = x;
      out.cost += x * cost_[c.i][c.j];
    }
    return out;
  }

private:
  struct Cell {
    std::size_t i, j;
  };

  void initial_basis() {
    // Northwest corner rule; always yields m+n-1 basic cells forming a spanning tree.
    flow_.assign(m_ * n_, Scalar(0));
    basic_.assign(m_ * n_, false);
    std::vector<Scalar> s = supply_, d = demand_;
    std::size_t i = 0, j = 0;
    for (;;) {
      Scalar x = s[i] < d[j] ? s[i] : d[j];
      if (x < Scalar(0)) x = Scalar(0);
      add_basic(i, j, x);
      s[i] -= x;
      d[j] -= x;
      if (i + 1 == m_ && j + 1 == n_) break;
      if (j + 1 == n_ || (i + 1 < m_ && !(s[i] > eps_))) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void add_basic(std::size_t i, std::size_t j, const Scalar& x) {
    basic_[i * n_ + j] = true;
    flow_[i * n_ + j] = x;
    basis_.push_back({i, j});
  }

  // Nodes 0..m-1 are rows, m..m+n-1 columns.
  void adjacency(std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& adj) const {
    adj.assign(m_ + n_, {});
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      adj[basis_[k].i].push_back({m_ + basis_[k].j, k});
      adj[m_ + basis_[k].j].push_back({basis_[k].i, k});
    }
  }

  void potentials(std::vector<Scalar>& u, std::vector<Scalar>& v) const {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj;
    adjacency(adj);
    std::vector<bool> seen(m_ + n_, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    u[0] = Scalar(0);
    while (!stack.empty()) {
      std::size_t a = stack.back();
      stack.pop_back();
      for (auto [b, k] : adj[a]) {
        if (seen[b]) continue;
        seen[b] = true;
        const Cell& c = basis_[k];
        if (b >= m_) v[c.j] = cost_[c.i][c.j] - u[c.i];
        else u[c.i] = cost_[c.i][c.j] - v[c.j];
        stack.push_back(b);
      }
    }
  }

  bool entering(const std::vector<Scalar>& u, const std::vector<Scalar>& v, bool bland,
                std::size_t& ei, std::size_t& ej) const {
    bool found = false;
    Scalar best(0);
    Scalar threshold = -eps_;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (basic_[i * n_ + j]) continue;
        Scalar r = cost_[i][j] - u[i] - v[j];
        if (r < threshold && (!found || r < best)) {
          found = true;
          best = r;
          ei = i;
          ej = j;
          if (bland) return true;
        }
      }
    }
    return found;
  }

  // Returns true when the pivot moved zero flow.
  bool pivot(std::size_t ei, std::size_t ej, bool bland) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj;
    adjacency(adj);
    // Tree path from column node ej to row node ei.
    std::size_t src = m_ + ej, dst = ei;
    std::vector<std::size_t> parent(m_ + n_, SIZE_MAX), via(m_ + n_, SIZE_MAX);
    std::vector<std::size_t> queue{src};
    parent[src] = src;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      std::size_t a = queue[h];
      if (a == dst) break;
      for (auto [b, k] : adj[a]) {
        if (parent[b] != SIZE_MAX) continue;
        parent[b] = a;
        via[b] = k;
        queue.push_back(b);
      }
    }
    if (parent[dst] == SIZE_MAX) throw std::logic_error("transport: basis is not a spanning tree");
    std::vector<std::size_t> path;  // basis indices from dst back to src
    for (std::size_t a = dst; a != src; a = parent[a]) path.push_back(via[a]);
    std::reverse(path.begin(), path.end());  // path[0] touches column ej
    // Alternating signs along the cycle: entering +, path[0] -, path[1] +, ...
    std::size_t leave = SIZE_MAX;
    Scalar theta(0);
    for (std::size_t t = 0; t < path.size(); t += 2) {
      const Cell& c = basis_[path[t]];
      const Scalar& x = flow_[c.i * n_ + c.j];
      bool better = leave == SIZE_MAX || x < theta;
      if (!better && !(theta < x) && bland) {
        const Cell& l = basis_[path[leave]];
        better = (c.i * n_ + c.j) < (l.i * n_ + l.j);
      }
      if (better) {
        leave = t;
        theta = x;
      }
    }
    if (theta < Scalar(0)) theta = Scalar(0);
    for (std::size_t t = 0; t < path.size(); ++t) {
      const Cell& c = basis_[path[t]];
      Scalar& x = flow_[c.i * n_ + c.j];
      if (t % 2 == 0) x -= theta;
      else x += theta;
    }
    std::size_t k = path[leave];
    basic_[basis_[k].i * n_ + basis_[k].j] = false;
    flow_[basis_[k].i * n_ + basis_[k].j] = Scalar(0);
    basis_[k] = {ei, ej};
    basic_[ei * n_ + ej] = true;
    flow_[ei * n_ + ej] = theta;
    return !(theta > eps_);
  }

  std::size_t m_, n_;
  std::vector<Scalar> supply_, demand_;
  const std::vector<std::vector<Scalar>>& cost_;
  Scalar eps_;
  std::vector<Scalar> flow_;
  std::vector<bool> basic_;
  std::vector<Cell> basis_;
};

}  // namespace detail

/// Minimum-cost transport plan between supply and demand (equal totals) under cost.
template <class Scalar>
Plan<Scalar> solve(const std::vector<Scalar>& supply, const std::vector<Scalar>& demand,
                   const std::vector<std::vector<Scalar>>& cost,
                   std::size_t max_pivots = 1000000) {
  if (supply.empty() || demand.empty()) throw std::invalid_argument("transport: empty side");
  if (cost.size() != supply.size()) throw std::invalid_argument("transport: cost rows mismatch");
  for (const auto& row : cost)
    if (row.size() != demand.size()) throw std::invalid_argument("transport: cost cols mismatch");
  std::vector<Scalar> s = supply, d = demand;
  // Float inputs: absorb rounding drift in the last demand entry.
  if constexpr (std::is_floating_point_v<Scalar>) {
    Scalar ts = 0, td = 0;
    for (auto x : s) ts += x;
    for (auto x : d) td += x;
    d.back() += ts - td;
    if (d.back() < 0) d.back() = 0;
  } else {
    Scalar ts(0), td(0);
    for (const auto& x : s) ts += x;
    for (const auto& x : d) td += x;
    if (ts != td) throw std::invalid_argument("transport: unbalanced exact problem");
  }
  return detail::Solver<Scalar>(std::move(s), std::move(d), cost).run(max_pivots);
}

}  // namespace qlog::transport
