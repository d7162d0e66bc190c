#pragma once

#include "qlog/value.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace qlog {

using ProcRef = std::shared_ptr<ProcNode>;

struct ProcDistance {
  double value = 0.0;
  double radius = 1.0;         // certified bound on |value - true distance|
  std::size_t iterations = 0;
  std::size_t pairs = 0;       // reachable node pairs explored
  double kappa = 0.0;          // contraction factor used for the certificate
};

/// Behavioral distance in Proc_c by value iteration from 0 on the reachable pairs.
/// Throws std::runtime_error when the iteration cannot be certified (kappa >= 1).
ProcDistance behavioralDistance(const ProcRef& p, const ProcRef& q, const Grade& c, double tol,
                                std::size_t max_iter = 1000000);

/// Guarded fixed point of the bisimulation functional
///   R(x, y) = (label x == label y) * c (exists rho. coupling of R between the steps),
/// by Banach iteration from the constant-0 relation. Requires c < 1.
ProcDistance bisimilarityDistance(const ProcRef& p, const ProcRef& q, const Grade& c, double tol,
                                  std::size_t max_iter = 1000000);

struct UnfoldTree {
  std::string label;
  std::vector<std::pair<double, UnfoldTree>> children;  // empty at the depth cutoff
};

struct Unfolding {
  UnfoldTree tree;
  // Probability of reaching the cutoff through paths that revisit an already
  // expanded node (recursive mass).
  double residual = 0.0;
};

Unfolding unfoldProcess(const ProcRef& p, int depth);

// Builds a process node from an explicit finite chain: labels[i] and transition rows.
std::vector<ProcRef> make_chain(const std::vector<ValuePtr>& labels,
                                const std::vector<std::vector<std::pair<std::size_t, double>>>& rows);

}  // namespace qlog
