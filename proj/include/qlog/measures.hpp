#pragma once

#include "qlog/quantale.hpp"
#include "qlog/transport.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qlog {

// Mass slack tolerated when checking that weights sum to 1.
inline double mass_slack(std::size_t n) { return kTau + 1e-12 * static_cast<double>(n); }

enum class ResidualKind { Truncation, Divergence };

/// Finitely supported (sub)probability measure in canonical form: atoms sorted by
/// Less, equivalent atoms merged, weights strictly positive.
template <class T, class Less = std::less<T>>
class SubDist {
public:
  using Atom = std::pair<T, double>;

  SubDist() = default;

  static SubDist dirac(T v) {
    SubDist d;
    d.atoms_.push_back({std::move(v), 1.0});
    return d;
  }
  // Everything is residual: the fully unknown element.
  static SubDist bottom(ResidualKind kind) {
    SubDist d;
    d.residual_ = 1.0;
    d.kind_ = kind;
    return d;
  }
  static SubDist from_atoms(std::vector<Atom> atoms, double residual = 0.0,
                            ResidualKind kind = ResidualKind::Truncation) {
    SubDist d;
    d.atoms_ = std::move(atoms);
    d.residual_ = residual;
    d.kind_ = kind;
    d.canonicalize();
    return d;
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  double residual() const { return residual_; }
  ResidualKind residual_kind() const { return kind_; }
  bool is_total() const { return residual_ <= mass_slack(atoms_.size()); }
  double support_mass() const {
    double s = 0;
    for (const auto& a : atoms_) s += a.second;
    return s;
  }
  double weight(const T& v) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), v,
                               [](const Atom& a, const T& x) { return Less{}(a.first, x); });
    if (it != atoms_.end() && !Less{}(v, it->first)) return it->second;
    return 0.0;
  }

  // Drops atoms lighter than threshold, moving their mass to the residual.
  double prune(double threshold) {
    double dropped = 0;
    std::vector<Atom> kept;
    for (auto& a : atoms_) {
      if (a.second < threshold) dropped += a.second;
      else kept.push_back(std::move(a));
    }
    atoms_ = std::move(kept);
    residual_ += dropped;
    return dropped;
  }

  friend bool operator==(const SubDist& a, const SubDist& b) {
    if (a.atoms_.size() != b.atoms_.size()) return false;
    for (std::size_t i = 0; i < a.atoms_.size(); ++i) {
      if (Less{}(a.atoms_[i].first, b.atoms_[i].first) ||
          Less{}(b.atoms_[i].first, a.atoms_[i].first))
        return false;
      if (a.atoms_[i].second != b.atoms_[i].second) return false;
    }
    return a.residual_ == b.residual_;
  }

private:
  void canonicalize() {
    std::vector<Atom> kept;
    kept.reserve(atoms_.size());
    for (auto& a : atoms_) {
      if (!(a.second >= 0)) throw std::invalid_argument("negative weight");
      if (a.second > 0) kept.push_back(std::move(a));
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const Atom& x, const Atom& y) { return Less{}(x.first, y.first); });
    atoms_.clear();
    for (auto& a : kept) {
      if (!atoms_.empty() && !Less{}(atoms_.back().first, a.first)) atoms_.back().second += a.second;
      else atoms_.push_back(std::move(a));
    }
    if (residual_ < 0) residual_ = 0;
    double total = support_mass() + residual_;
    if (total > 1 + mass_slack(atoms_.size()))
      throw std::invalid_argument("measure has mass above 1");
  }

  std::vector<Atom> atoms_;
  double residual_ = 0.0;
  ResidualKind kind_ = ResidualKind::Truncation;
};

/// Probability measure: a SubDist whose residual is zero.
template <class T, class Less = std::less<T>>
class Dist {
public:
  using Atom = std::pair<T, double>;
  Dist() = default;
  static Dist dirac(T v) { return Dist(SubDist<T, Less>::dirac(std::move(v))); }
  static Dist from_atoms(std::vector<Atom> atoms) {
    return Dist(SubDist<T, Less>::from_atoms(std::move(atoms)));
  }
  explicit Dist(SubDist<T, Less> s) : s_(std::move(s)) {
    double m = s_.support_mass();
    if (std::abs(m - 1.0) > mass_slack(s_.size()) || s_.residual() > mass_slack(s_.size()))
      throw std::invalid_argument("distribution weights must sum to 1");
  }
  const std::vector<Atom>& atoms() const { return s_.atoms(); }
  std::size_t size() const { return s_.size(); }
  double weight(const T& v) const { return s_.weight(v); }
  const SubDist<T, Less>& sub() const { return s_; }
  friend bool operator==(const Dist& a, const Dist& b) { return a.s_ == b.s_; }

private:
  SubDist<T, Less> s_;
};

template <class T, class Less>
SubDist<T, Less> convex(double p, const SubDist<T, Less>& mu, const SubDist<T, Less>& nu) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("convex: p must lie in (0,1)");
  std::vector<typename SubDist<T, Less>::Atom> atoms;
  for (const auto& a : mu.atoms()) atoms.push_back({a.first, p * a.second});
  for (const auto& a : nu.atoms()) atoms.push_back({a.first, (1 - p) * a.second});
  ResidualKind k = mu.residual_kind() == nu.residual_kind() ? mu.residual_kind()
                                                            : ResidualKind::Truncation;
  return SubDist<T, Less>::from_atoms(std::move(atoms),
                                      p * mu.residual() + (1 - p) * nu.residual(), k);
}

template <class T, class Less>
Dist<T, Less> convex(double p, const Dist<T, Less>& mu, const Dist<T, Less>& nu) {
  return Dist<T, Less>(convex(p, mu.sub(), nu.sub()));
}

// Monad bind; residual mass of mu and of every f(x) propagates.
template <class T, class LT, class U, class LU, class F>
SubDist<U, LU> bind(const SubDist<T, LT>& mu, F&& f) {
  std::vector<typename SubDist<U, LU>::Atom> atoms;
  double residual = mu.residual();
  ResidualKind kind = mu.residual_kind();
  bool any_residual = mu.residual() > 0;
  for (const auto& a : mu.atoms()) {
    SubDist<U, LU> img = f(a.first);
    for (const auto& b : img.atoms()) atoms.push_back({b.first, a.second * b.second});
    if (img.residual() > 0) {
      if (any_residual && img.residual_kind() != kind) kind = ResidualKind::Truncation;
      else kind = img.residual_kind();
      any_residual = true;
    }
    residual += a.second * img.residual();
  }
  return SubDist<U, LU>::from_atoms(std::move(atoms), residual, kind);
}

template <class T, class LT, class U, class LU, class F>
Dist<U, LU> bind(const Dist<T, LT>& mu, F&& f) {
  return Dist<U, LU>(bind<T, LT, U, LU>(mu.sub(), [&](const T& x) { return f(x).sub(); }));
}

template <class U, class LU = std::less<U>, class T, class LT, class F>
Dist<U, LU> pushforward(F&& f, const Dist<T, LT>& mu) {
  std::vector<typename Dist<U, LU>::Atom> atoms;
  for (const auto& a : mu.atoms()) atoms.push_back({f(a.first), a.second});
  return Dist<U, LU>::from_atoms(std::move(atoms));
}

template <class U, class LU = std::less<U>, class T, class LT, class F>
SubDist<U, LU> pushforward(F&& f, const SubDist<T, LT>& mu) {
  std::vector<typename SubDist<U, LU>::Atom> atoms;
  for (const auto& a : mu.atoms()) atoms.push_back({f(a.first), a.second});
  return SubDist<U, LU>::from_atoms(std::move(atoms), mu.residual(), mu.residual_kind());
}

// Bind into the PropVal IB algebra: truncated weighted sum.
template <class T, class LT, class F>
PropVal mean(const Dist<T, LT>& mu, F&& phi) {
  double s = 0;
  for (const auto& a : mu.atoms()) s += a.second * static_cast<double>(phi(a.first));
  return std::min(s, 1.0);
}

/// Coupling with cached marginals.
template <class T, class Less = std::less<T>>
struct Coupling {
  struct PairLess {
    bool operator()(const std::pair<T, T>& a, const std::pair<T, T>& b) const {
      if (Less{}(a.first, b.first)) return true;
      if (Less{}(b.first, a.first)) return false;
      return Less{}(a.second, b.second);
    }
  };
  Dist<std::pair<T, T>, PairLess> joint;
  Dist<T, Less> left, right;
  double cost = 0.0;

  static Coupling from_joint(Dist<std::pair<T, T>, PairLess> j) {
    Coupling c;
    c.left = pushforward<T, Less>([](const std::pair<T, T>& p) { return p.first; }, j);
    c.right = pushforward<T, Less>([](const std::pair<T, T>& p) { return p.second; }, j);
    c.joint = std::move(j);
    return c;
  }
};

template <class T, class Less, class Metric>
std::vector<std::vector<double>> cost_matrix(Metric&& d, const std::vector<T>& xs,
                                             const std::vector<T>& ys) {
  std::vector<std::vector<double>> c(xs.size(), std::vector<double>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) c[i][j] = static_cast<double>(d(xs[i], ys[j]));
  return c;
}

template <class T, class Less, class Metric>
Coupling<T, Less> optimalCoupling(Metric&& d, const Dist<T, Less>& mu, const Dist<T, Less>& nu) {
  std::vector<T> xs, ys;
  std::vector<double> a, b;
  for (const auto& at : mu.atoms()) xs.push_back(at.first), a.push_back(at.second);
  for (const auto& at : nu.atoms()) ys.push_back(at.first), b.push_back(at.second);
  auto c = cost_matrix<T, Less>(d, xs, ys);
  auto plan = transport::solve<double>(a, b, c);
  std::vector<std::pair<std::pair<T, T>, double>> atoms;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      if (plan.flow[i][j] > 0) atoms.push_back({{xs[i], ys[j]}, plan.flow[i][j]});
  using Joint = Dist<std::pair<T, T>, typename Coupling<T, Less>::PairLess>;
  auto out = Coupling<T, Less>::from_joint(Joint::from_atoms(std::move(atoms)));
  out.cost = std::clamp(plan.cost, 0.0, 1.0);
  return out;
}

template <class T, class Less, class Metric>
PropVal kantorovich(Metric&& d, const Dist<T, Less>& mu, const Dist<T, Less>& nu) {
  std::vector<T> xs, ys;
  std::vector<double> a, b;
  for (const auto& at : mu.atoms()) xs.push_back(at.first), a.push_back(at.second);
  for (const auto& at : nu.atoms()) ys.push_back(at.first), b.push_back(at.second);
  auto c = cost_matrix<T, Less>(d, xs, ys);
  return std::clamp(transport::solve<double>(a, b, c).cost, 0.0, 1.0);
}

/// Exact transport optimum on rational weights and costs.
Rational kantorovich_exact(const std::vector<Rational>& mu, const std::vector<Rational>& nu,
                           const std::vector<std::vector<Rational>>& cost);

// Total variation = Kantorovich under the discrete metric.
template <class T, class Less>
double total_variation(const Dist<T, Less>& mu, const Dist<T, Less>& nu) {
  double s = 0;
  std::size_t i = 0, j = 0;
  const auto& a = mu.atoms();
  const auto& b = nu.atoms();
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && Less{}(a[i].first, b[j].first))) s += a[i++].second;
    else if (i == a.size() || Less{}(b[j].first, a[i].first)) s += b[j++].second;
    else s += std::abs(a[i++].second - b[j++].second);
  }
  return std::min(s / 2, 1.0);
}

}  // namespace qlog
