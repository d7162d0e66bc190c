#include "qlog/measures.hpp"

namespace qlog {

Rational kantorovich_exact(const std::vector<Rational>& mu, const std::vector<Rational>& nu,
                           const std::vector<std::vector<Rational>>& cost) {
  return transport::solve<Rational>(mu, nu, cost).cost;
}

}  // namespace qlog
