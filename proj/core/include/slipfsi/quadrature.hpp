#pragma once

#include <vector>

namespace slipfsi {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with n points on [lo, hi]; exact for polynomials of degree 2n-1.
Rule1D gauss_legendre(int n, double lo = -1.0, double hi = 1.0);

/// Barycentric weights for Lagrange interpolation through `nodes`.
std::vector<double> barycentric_weights(const std::vector<double>& nodes);

/// Lagrange basis values at x (size nodes.size()); exact delta when x hits a node.
void lagrange_basis(const std::vector<double>& nodes, const std::vector<double>& bary, double x,
                    std::vector<double>& out);

}  // namespace slipfsi
