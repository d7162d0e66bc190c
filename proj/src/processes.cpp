#include "qlog/processes.hpp"

#include "qlog/transport.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace qlog {

namespace {

struct Succ {
  std::vector<ProcNode*> nodes;  // support, nullptr = residual (bottom)
  std::vector<double> weights;
};

Succ successors(ProcNode* n) {
  Succ s;
  const DistV& d = n->step();
  for (const auto& at : d.atoms()) {
    if (at.first->kind != VKind::Proc) throw std::runtime_error("process step has a non-process atom");
    s.nodes.push_back(at.first->proc->deref());
    s.weights.push_back(at.second);
  }
  if (d.residual() > 0) {
    s.nodes.push_back(nullptr);
    s.weights.push_back(d.residual());
  }
  return s;
}

class PairTable {
public:
  enum class State { Zero, One, Open };

  std::size_t index(ProcNode* a, ProcNode* b) {
    auto key = std::make_pair(a, b);
    auto it = idx_.find(key);
    if (it != idx_.end()) return it->second;
    std::size_t i = pairs.size();
    idx_.emplace(key, i);
    pairs.push_back(key);
    State st;
    if (a == b) st = State::Zero;
    else if (!a || !b) st = State::One;
    else if (!value_equal(a->get_label(), b->get_label())) st = State::One;
    else st = State::Open;
    state.push_back(st);
    return i;
  }

  std::vector<std::pair<ProcNode*, ProcNode*>> pairs;
  std::vector<State> state;

private:
  std::map<std::pair<ProcNode*, ProcNode*>, std::size_t> idx_;
};

struct OpenPair {
  std::size_t self;
  std::vector<double> supply, demand;
  std::vector<std::vector<std::size_t>> cell;  // pair index per coupling cell
};

double sc(const Grade& c, double x) {
  if (x <= 0) return 0;
  return c.is_infinite() ? 1.0 : std::min(1.0, c.to_double() * x);
}

// Jacobi value iteration of D <- min(d_label + c K(D), 1) over the open pairs.
ProcDistance iterate(PairTable& tab, std::vector<OpenPair>& open, std::size_t root, const Grade& c,
                     double kappa, double tol, std::size_t max_iter) {
  std::vector<double> d(tab.pairs.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (tab.state[i] == PairTable::State::One) d[i] = 1.0;
  ProcDistance out;
  out.pairs = tab.pairs.size();
  out.kappa = kappa;
  double radius = 1.0;
  std::size_t k = 0;
  if (tab.state[root] != PairTable::State::Open) {
    out.value = d[root];
    out.radius = 0.0;
    return out;
  }
  while (radius > tol && k < max_iter) {
    std::vector<double> next = d;
    for (const OpenPair& op : open) {
      std::vector<std::vector<double>> cost(op.supply.size(), std::vector<double>(op.demand.size()));
      for (std::size_t i = 0; i < op.supply.size(); ++i)
        for (std::size_t j = 0; j < op.demand.size(); ++j) cost[i][j] = d[op.cell[i][j]];
      double k_cost = transport::solve<double>(op.supply, op.demand, cost).cost;
      next[op.self] = std::min(1.0, sc(c, k_cost));
    }
    d = std::move(next);
    ++k;
    radius = kappa == 0.0 ? 0.0 : std::pow(kappa, static_cast<double>(k));
  }
  out.value = d[root];
  out.radius = radius;
  out.iterations = k;
  return out;
}

void explore(PairTable& tab, std::vector<OpenPair>& open, std::size_t root) {
  std::vector<bool> seen;
  std::vector<std::size_t> work{root};
  while (!work.empty()) {
    std::size_t i = work.back();
    work.pop_back();
    if (seen.size() <= i) seen.resize(tab.pairs.size() + 1, false);
    if (seen[i]) continue;
    seen[i] = true;
    if (tab.state[i] != PairTable::State::Open) continue;
    auto [a, b] = tab.pairs[i];
    Succ sa = successors(a), sb = successors(b);
    OpenPair op;
    op.self = i;
    op.supply = sa.weights;
    op.demand = sb.weights;
    op.cell.assign(sa.nodes.size(), std::vector<std::size_t>(sb.nodes.size()));
    for (std::size_t x = 0; x < sa.nodes.size(); ++x) {
      for (std::size_t y = 0; y < sb.nodes.size(); ++y) {
        std::size_t j = tab.index(sa.nodes[x], sb.nodes[y]);
        op.cell[x][y] = j;
        if (seen.size() <= j) seen.resize(tab.pairs.size() + 1, false);
        if (!seen[j]) work.push_back(j);
      }
    }
    open.push_back(std::move(op));
  }
}

// Largest mass any coupling can put on open cells, maximized over open pairs.
double open_mass(const PairTable& tab, const std::vector<OpenPair>& open) {
  double worst = 0.0;
  for (const OpenPair& op : open) {
    std::vector<std::vector<double>> cost(op.supply.size(), std::vector<double>(op.demand.size()));
    for (std::size_t i = 0; i < op.supply.size(); ++i)
      for (std::size_t j = 0; j < op.demand.size(); ++j)
        cost[i][j] = tab.state[op.cell[i][j]] == PairTable::State::Open ? 0.0 : 1.0;
    double closed = transport::solve<double>(op.supply, op.demand, cost).cost;
    worst = std::max(worst, 1.0 - closed);
  }
  return std::clamp(worst, 0.0, 1.0);
}

}  // namespace

ProcDistance behavioralDistance(const ProcRef& p, const ProcRef& q, const Grade& c, double tol,
                                std::size_t max_iter) {
  PairTable tab;
  std::size_t root = tab.index(p->deref(), q->deref());
  std::vector<OpenPair> open;
  explore(tab, open, root);
  double cd = c.is_infinite() ? INFINITY : c.to_double();
  double kappa = open.empty() ? 0.0 : cd * open_mass(tab, open);
  if (kappa > 1.0 - 1e-12) throw std::runtime_error("behavioral distance: recursion does not contract");
  return iterate(tab, open, root, c, kappa, tol, max_iter);
}

ProcDistance bisimilarityDistance(const ProcRef& p, const ProcRef& q, const Grade& c, double tol,
                                  std::size_t max_iter) {
  if (!(c < Grade(1))) throw std::invalid_argument("bisimilarity distance needs c < 1");
  // Every pair of reachable nodes, not only those reachable as pairs.
  std::vector<ProcNode*> left, right;
  auto reach = [](ProcNode* start, std::vector<ProcNode*>& out) {
    std::map<ProcNode*, bool> seen;
    std::vector<ProcNode*> work{start};
    while (!work.empty()) {
      ProcNode* n = work.back();
      work.pop_back();
      if (seen[n]) continue;
      seen[n] = true;
      out.push_back(n);
      if (!n) continue;
      for (ProcNode* s : successors(n).nodes) work.push_back(s);
    }
  };
  reach(p->deref(), left);
  reach(q->deref(), right);
  PairTable tab;
  std::size_t root = tab.index(p->deref(), q->deref());
  for (ProcNode* a : left)
    for (ProcNode* b : right) tab.index(a, b);
  std::vector<OpenPair> open;
  for (std::size_t i = 0; i < tab.pairs.size(); ++i) {
    if (tab.state[i] != PairTable::State::Open) continue;
    auto [a, b] = tab.pairs[i];
    Succ sa = successors(a), sb = successors(b);
    OpenPair op;
    op.self = i;
    op.supply = sa.weights;
    op.demand = sb.weights;
    op.cell.assign(sa.nodes.size(), std::vector<std::size_t>(sb.nodes.size()));
    for (std::size_t x = 0; x < sa.nodes.size(); ++x)
      for (std::size_t y = 0; y < sb.nodes.size(); ++y) op.cell[x][y] = tab.index(sa.nodes[x], sb.nodes[y]);
    open.push_back(std::move(op));
  }
  return iterate(tab, open, root, c, c.to_double(), tol, max_iter);
}

namespace {

UnfoldTree build_tree(ProcNode* n, int depth) {
  UnfoldTree t;
  t.label = print_value(n->get_label());
  if (depth <= 0) return t;
  Succ s = successors(n);
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    if (!s.nodes[i]) {
      UnfoldTree bot;
      bot.label = "_|_";
      t.children.push_back({s.weights[i], std::move(bot)});
    } else {
      t.children.push_back({s.weights[i], build_tree(s.nodes[i], depth - 1)});
    }
  }
  return t;
}

}  // namespace

Unfolding unfoldProcess(const ProcRef& p, int depth) {
  Unfolding u;
  ProcNode* root = p->deref();
  u.tree = build_tree(root, depth);

  // Nodes in the strongly connected component of the root.
  std::map<ProcNode*, std::vector<ProcNode*>> edges;
  std::vector<ProcNode*> order{root};
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& e = edges[order[i]];
    for (ProcNode* s : successors(order[i]).nodes) {
      if (!s) continue;
      e.push_back(s);
      if (!edges.count(s) && std::find(order.begin(), order.end(), s) == order.end()) order.push_back(s);
    }
  }
  std::map<ProcNode*, bool> back{{root, true}};
  for (bool changed = true; changed;) {
    changed = false;
    for (ProcNode* n : order) {
      if (back[n]) continue;
      for (ProcNode* s : edges[n])
        if (back[s]) {
          back[n] = true;
          changed = true;
          break;
        }
    }
  }

  std::map<ProcNode*, double> mass{{root, 1.0}};
  for (int k = 0; k < depth; ++k) {
    std::map<ProcNode*, double> next;
    for (auto [n, w] : mass) {
      Succ s = successors(n);
      for (std::size_t i = 0; i < s.nodes.size(); ++i)
        if (s.nodes[i] && back[s.nodes[i]]) next[s.nodes[i]] += w * s.weights[i];
    }
    mass = std::move(next);
  }
  for (auto [n, w] : mass) u.residual += w;
  return u;
}

std::vector<ProcRef> make_chain(const std::vector<ValuePtr>& labels,
                                const std::vector<std::vector<std::pair<std::size_t, double>>>& rows) {
  if (labels.size() != rows.size()) throw std::invalid_argument("make_chain: one row per label");
  auto nodes = std::make_shared<std::vector<ProcRef>>();
  for (const auto& l : labels) nodes->push_back(make_proc_node(l, nullptr));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [j, w] : rows[i])
      if (j >= labels.size() || w < 0) throw std::invalid_argument("make_chain: bad transition");
    auto row = rows[i];
    (*nodes)[i]->thunk = [nodes, row]() {
      std::vector<DistV::Atom> atoms;
      double total = 0;
      for (const auto& [j, w] : row) {
        atoms.push_back({v_proc((*nodes)[j]), w});
        total += w;
      }
      return DistV::from_atoms(std::move(atoms), std::max(0.0, 1.0 - total), ResidualKind::Truncation);
    };
  }
  return *nodes;
}

}  // namespace qlog
