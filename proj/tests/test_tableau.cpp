#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "phbvm/tableau.hpp"

using namespace phbvm;

TEST_CASE("orthonormality and integration identities hold for 1 <= s <= k <= 12") {
  for (int k = 1; k <= 12; ++k) {
    for (int s = 1; s <= k; ++s) {
      const auto tab = build_tableau(k, s);
      const Eigen::MatrixXd Omega = tab.weights().asDiagonal();
      const Eigen::MatrixXd gram = tab.P.transpose() * Omega * tab.P;
      CHECK((gram - Eigen::MatrixXd::Identity(s, s)).cwiseAbs().maxCoeff() < 1e-12);
      const Eigen::MatrixXd X = tab.P.transpose() * Omega * tab.I;
      CHECK((X - legendre_integration_matrix(s)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((tab.X * tab.Xinv - Eigen::MatrixXd::Identity(s, s)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("closed-form X has the expected corner and off-diagonals") {
  const auto X = legendre_integration_matrix(4);
  CHECK(X(0, 0) == doctest::Approx(0.5));
  CHECK(X(1, 0) == doctest::Approx(1.0 / (2.0 * std::sqrt(3.0))));
  CHECK(X(0, 1) == doctest::Approx(-1.0 / (2.0 * std::sqrt(3.0))));
  CHECK(X(2, 1) == doctest::Approx(1.0 / (2.0 * std::sqrt(15.0))));
  CHECK(X(3, 2) == doctest::Approx(1.0 / (2.0 * std::sqrt(35.0))));
  CHECK(X(2, 0) == 0.0);
  CHECK(X(1, 1) == 0.0);
}

TEST_CASE("lambda for s = 2 is sqrt(1/12)") {
  // X_2 = [[1/2, -x], [x, 0]] with x^2 = 1/12: eigenvalues have product 1/12
  // and are complex, so both have modulus sqrt(1/12).
  const auto tab = build_tableau(2, 2);
  CHECK(tab.lambda_s == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-14));
  CHECK(build_tableau(4, 1).lambda_s == doctest::Approx(0.5));
}

TEST_CASE("eigenvalues agree with a general-purpose eigensolver") {
  for (int s = 1; s <= 10; ++s) {
    const auto X = legendre_integration_matrix(s);
    Eigen::EigenSolver<Eigen::MatrixXd> ref(X);
    const auto mine = eigenvalues(X);
    REQUIRE(static_cast<int>(mine.size()) == s);
    double ref_min = 1e300;
    for (int i = 0; i < s; ++i) {
      ref_min = std::min(ref_min, std::abs(ref.eigenvalues()[i]));
      double best = 1e300;
      for (const auto& z : mine) best = std::min(best, std::abs(z - ref.eigenvalues()[i]));
      CHECK(best < 1e-12);
    }
    CHECK(min_modulus_eigenvalue(X) == doctest::Approx(ref_min).epsilon(1e-12));
  }
}

TEST_CASE("eigenvalues of a non-symmetric matrix with real and complex spectrum") {
  Eigen::MatrixXd A(4, 4);
  A << 4, 1, -2, 2, 1, 2, 0, 1, -2, 0, 3, -2, 2, 1, -2, -1;
  A(0, 3) += 3.0;  // break symmetry
  Eigen::EigenSolver<Eigen::MatrixXd> ref(A);
  const auto mine = eigenvalues(A);
  for (int i = 0; i < 4; ++i) {
    double best = 1e300;
    for (const auto& z : mine) best = std::min(best, std::abs(z - ref.eigenvalues()[i]));
    CHECK(best < 1e-10);
  }
}

TEST_CASE("singular matrices are rejected by the minimum-modulus routine") {
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(2, 2);
  Z(0, 1) = 1.0;
  CHECK_THROWS_AS(min_modulus_eigenvalue(Z), std::domain_error);
}

TEST_CASE("projector maps node values to Legendre coefficients") {
  const auto tab = build_tableau(6, 3);
  // Samples of P_1 are mapped to the unit vector e_1.
  const Eigen::VectorXd coeffs = tab.projector() * tab.P.col(1);
  CHECK(std::abs(coeffs[0]) < 1e-14);
  CHECK(coeffs[1] == doctest::Approx(1.0));
  CHECK(std::abs(coeffs[2]) < 1e-14);
}

TEST_CASE("invalid (k, s) combinations are rejected") {
  CHECK_THROWS_AS(build_tableau(2, 3), std::invalid_argument);
  CHECK_THROWS_AS(build_tableau(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_tableau(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_tableau(kMaxGaussNodes + 1, 1), std::invalid_argument);
}
