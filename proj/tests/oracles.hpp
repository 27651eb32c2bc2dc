#pragma once

// Independent reference computations used only by the tests. None of them
// call into the library's quadrature or tableau code.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Coefficients (in the monomial basis on [0,1]) of the first n+1
/// orthonormal polynomials, by Gram-Schmidt with exact moments 1/(a+b+1).
inline std::vector<std::vector<long double>> gram_schmidt_polys(int n) {
  auto inner = [](const std::vector<long double>& p, const std::vector<long double>& q) {
    long double sum = 0.0L;
    for (std::size_t a = 0; a < p.size(); ++a)
      for (std::size_t b = 0; b < q.size(); ++b) sum += p[a] * q[b] / (a + b + 1.0L);
    return sum;
  };
  std::vector<std::vector<long double>> basis;
  for (int j = 0; j <= n; ++j) {
    std::vector<long double> p(j + 1, 0.0L);
    p[j] = 1.0L;
    for (const auto& q : basis) {
      const long double c = inner(p, q);
      for (std::size_t a = 0; a < q.size(); ++a) p[a] -= c * q[a];
    }
    const long double norm = std::sqrt(inner(p, p));
    for (auto& v : p) v /= norm;
    basis.push_back(p);
  }
  return basis;
}

inline double poly_eval(const std::vector<long double>& p, double x) {
  long double acc = 0.0L;
  for (std::size_t a = p.size(); a-- > 0;) acc = acc * x + p[a];
  return static_cast<double>(acc);
}

inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, eps / 2, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, eps / 2, depth - 1);
}

/// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double eps = 1e-14) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, eps, 50);
}

/// s-stage Gauss collocation step for y' = f(y), built from the nodes alone:
/// a_ij = int_0^{c_i} l_j with Lagrange basis l_j, solved through a
/// Vandermonde system; stages by fixed-point iteration.
inline Eigen::VectorXd gauss_collocation_step(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& y0,
    double h, const std::vector<double>& c) {
  const int s = static_cast<int>(c.size());
  Eigen::MatrixXd V(s, s);  // V(q, j) = c_j^q
  for (int q = 0; q < s; ++q)
    for (int j = 0; j < s; ++j) V(q, j) = std::pow(c[j], q);
  Eigen::MatrixXd A(s, s), rhs(s, s);
  Eigen::VectorXd b(s);
  // sum_j a_ij c_j^q = c_i^{q+1} / (q+1)
  for (int i = 0; i < s; ++i) {
    Eigen::VectorXd r(s);
    for (int q = 0; q < s; ++q) r[q] = std::pow(c[i], q + 1) / (q + 1);
    A.row(i) = V.fullPivLu().solve(r).transpose();
  }
  {
    Eigen::VectorXd r(s);
    for (int q = 0; q < s; ++q) r[q] = 1.0 / (q + 1);
    b = V.fullPivLu().solve(r);
  }
  const Eigen::Index m = y0.size();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, s);
  for (int it = 0; it < 500; ++it) {
    Eigen::MatrixXd Kn(m, s);
    for (int i = 0; i < s; ++i) {
      Eigen::VectorXd Yi = y0;
      for (int j = 0; j < s; ++j) Yi += h * A(i, j) * K.col(j);
      Kn.col(i) = f(Yi);
    }
    const double diff = (Kn - K).cwiseAbs().maxCoeff();
    K = Kn;
    if (diff == 0.0) break;
  }
  Eigen::VectorXd y1 = y0;
  for (int j = 0; j < s; ++j) y1 += h * b[j] * K.col(j);
  return y1;
}

}  // namespace oracle

namespace oracle {

struct Rule {
  std::vector<double> c, b;
};

/// Golub-Welsch: Gauss-Legendre nodes and weights on [0,1] from the
/// eigen-decomposition of the Jacobi matrix.
inline Rule golub_welsch(int k) {
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
  for (int j = 1; j < k; ++j) {
    const double beta = j / std::sqrt(4.0 * j * j - 1.0);
    T(j, j - 1) = T(j - 1, j) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  Rule r;
  for (int i = 0; i < k; ++i) {
    r.c.push_back(0.5 * (es.eigenvalues()[i] + 1.0));
    const double v0 = es.eigenvectors()(0, i);
    r.b.push_back(v0 * v0);
  }
  return r;
}

/// Matrix form of a (k, s) line-integral step for y' = B(y) grad H(y):
/// materializes rho_ij = sum_l b_l P_i P_j B(Y_l) and gamma_i =
/// sum_l b_l P_i grad H(Y_l), iterates phi_j = sum_i rho_ji gamma_i by plain
/// fixed point, and returns y0 + h phi_0. Basis and integrals come from the
/// Gram-Schmidt polynomials above.
inline Eigen::VectorXd matrix_form_step(
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& B,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradH,
    const Eigen::VectorXd& y0, double h, int k, int s) {
  const Rule rule = golub_welsch(k);
  const auto polys = gram_schmidt_polys(s - 1);
  Eigen::MatrixXd P(k, s), I(k, s);
  for (int l = 0; l < k; ++l) {
    for (int j = 0; j < s; ++j) {
      P(l, j) = poly_eval(polys[j], rule.c[l]);
      std::vector<long double> prim(polys[j].size() + 1, 0.0L);
      for (std::size_t a = 0; a < polys[j].size(); ++a) prim[a + 1] = polys[j][a] / (a + 1.0L);
      I(l, j) = poly_eval(prim, rule.c[l]);
    }
  }
  const Eigen::Index m = y0.size();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(m, s);
  for (int it = 0; it < 1000; ++it) {
    std::vector<Eigen::MatrixXd> Bl(k);
    std::vector<Eigen::VectorXd> gl(k);
    for (int l = 0; l < k; ++l) {
      Eigen::VectorXd Y = y0;
      for (int j = 0; j < s; ++j) Y += h * I(l, j) * phi.col(j);
      Bl[l] = B(Y);
      gl[l] = gradH(Y);
    }
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(m, s);
    for (int j = 0; j < s; ++j) {
      for (int i = 0; i < s; ++i) {
        Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(m, m);
        Eigen::VectorXd gamma = Eigen::VectorXd::Zero(m);
        for (int l = 0; l < k; ++l) {
          rho += rule.b[l] * P(l, j) * P(l, i) * Bl[l];
          gamma += rule.b[l] * P(l, i) * gl[l];
        }
        next.col(j) += rho * gamma;
      }
    }
    const double diff = (next - phi).cwiseAbs().maxCoeff();
    phi = next;
    if (diff < 1e-17) break;
  }
  return y0 + h * phi.col(0);
}

}  // namespace oracle
