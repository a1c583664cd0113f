#pragma once

#include <vector>

namespace swgauge {

/// Nodes and weights of a one-dimensional quadrature rule.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule mapped to (0, 1); weights sum to 1.
QuadratureRule gauss_legendre_unit(int order);

/// Gauss-Hermite rule for E[f(Z)], Z ~ N(0, 1); weights sum to 1.
QuadratureRule gauss_hermite_normal(int order);

/// Cached versions of the above; the returned references stay valid for the
/// lifetime of the process. Thread safe.
const QuadratureRule& cached_gauss_legendre_unit(int order);
const QuadratureRule& cached_gauss_hermite_normal(int order);

}  // namespace swgauge
