#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "phbvm/legendre.hpp"

namespace phbvm {

/// Precomputed discretization data for a (k, s) method.
///
/// Row i of P and I corresponds to quadrature node c_{i+1}; column j to the
/// Legendre polynomial P_j. The tableau is immutable once built and may be
/// shared between concurrent integrations.
struct MethodTableau {
  int k = 0;
  int s = 0;
  QuadratureRule rule;
  Eigen::MatrixXd P;     // k x s, P(i,j) = P_j(c_i)
  Eigen::MatrixXd I;     // k x s, I(i,j) = int_0^{c_i} P_j
  Eigen::MatrixXd X;     // s x s, P^T Omega I
  Eigen::MatrixXd Xinv;  // s x s
  double lambda_s = 0.0; // min |eig(X)|

  Eigen::VectorXd weights() const;
  Eigen::VectorXd nodes() const;
  /// P^T Omega (s x k); maps node values to Legendre coefficients.
  Eigen::MatrixXd projector() const;
};

/// Closed form of X_s: xi_0 in the corner, +-xi_i on the sub/super diagonal,
/// xi_i = 1 / (2 sqrt(|4 i^2 - 1|)).
Eigen::MatrixXd legendre_integration_matrix(int s);

/// Throws std::invalid_argument unless 1 <= s <= k <= kMaxGaussNodes.
MethodTableau build_tableau(int k, int s);

/// Full spectrum of a small dense matrix (Hessenberg reduction followed by
/// Francis double-shift QR).
std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& A);

/// min |lambda| over the spectrum of X. Throws std::domain_error if X is
/// (numerically) singular.
double min_modulus_eigenvalue(const Eigen::MatrixXd& X);

}  // namespace phbvm
