#pragma once

#include <vector>

namespace phbvm {

/// Gauss-Legendre rule on [0,1]. Nodes ascending, weights sum to one.
struct QuadratureRule {
  int k = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Largest supported node count for gauss_rule().
inline constexpr int kMaxGaussNodes = 32;

/// Orthonormal shifted Legendre polynomial P_j on [0,1], i.e.
/// sqrt(2j+1) * L_j(2c-1) with L_j the classical Legendre polynomial.
double eval_legendre(int j, double c);

/// Values P_0(c), ..., P_n(c) from a single recurrence sweep.
std::vector<double> eval_legendre_all(int n, double c);

/// Integral of P_j over [0, c].
///
/// Uses the classical identity (2j+1) L_j = (L_{j+1} - L_{j-1})' so the
/// result is exact up to rounding; no quadrature is involved.
double eval_legendre_antiderivative(int j, double c);

/// k-point Gauss-Legendre rule on [0,1] (order 2k).
///
/// Nodes are the roots of P_k, refined by Newton's method and then
/// symmetrized so that c_{k-i+1} == 1 - c_i holds bit-for-bit.
/// Throws std::out_of_range for k outside [1, kMaxGaussNodes].
QuadratureRule gauss_rule(int k);

}  // namespace phbvm
