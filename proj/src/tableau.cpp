#include "phbvm/tableau.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace phbvm {

Eigen::VectorXd MethodTableau::weights() const {
  return Eigen::Map<const Eigen::VectorXd>(rule.weights.data(), k);
}

Eigen::VectorXd MethodTableau::nodes() const {
  return Eigen::Map<const Eigen::VectorXd>(rule.nodes.data(), k);
}

Eigen::MatrixXd MethodTableau::projector() const {
  return P.transpose() * weights().asDiagonal();
}

Eigen::MatrixXd legendre_integration_matrix(int s) {
  if (s < 1) throw std::invalid_argument("legendre_integration_matrix: s must be positive");
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(s, s);
  auto xi = [](int i) { return 1.0 / (2.0 * std::sqrt(std::abs(4.0 * i * i - 1.0))); };
  X(0, 0) = xi(0);
  for (int i = 1; i < s; ++i) {
    X(i, i - 1) = xi(i);
    X(i - 1, i) = -xi(i);
  }
  return X;
}

MethodTableau build_tableau(int k, int s) {
  if (s < 1 || k < 1 || k > kMaxGaussNodes) {
    throw std::invalid_argument("build_tableau: need 1 <= s <= k <= " +
                                std::to_string(kMaxGaussNodes));
  }
  if (s > k) {
    throw std::invalid_argument("build_tableau: s = " + std::to_string(s) +
                                " exceeds k = " + std::to_string(k));
  }
  MethodTableau tab;
  tab.k = k;
  tab.s = s;
  tab.rule = gauss_rule(k);
  tab.P.resize(k, s);
  tab.I.resize(k, s);
  for (int i = 0; i < k; ++i) {
    const double c = tab.rule.nodes[i];
    const auto p = eval_legendre_all(s - 1, c);
    for (int j = 0; j < s; ++j) {
      tab.P(i, j) = p[j];
      tab.I(i, j) = eval_legendre_antiderivative(j, c);
    }
  }
  tab.X = legendre_integration_matrix(s);

  const Eigen::MatrixXd assembled = tab.projector() * tab.I;
  const double mismatch = (assembled - tab.X).cwiseAbs().maxCoeff();
  if (mismatch > 1e-11) {
    throw std::logic_error("build_tableau: P^T Omega I deviates from X_s by " +
                           std::to_string(mismatch));
  }

  tab.Xinv = tab.X.partialPivLu().inverse();
  tab.lambda_s = min_modulus_eigenvalue(tab.X);
  return tab;
}

namespace {

// Reduction to upper Hessenberg form by stabilized elementary similarity
// transformations.
void reduce_to_hessenberg(Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  for (int m = 1; m < n - 1; ++m) {
    double x = 0.0;
    int piv = m;
    for (int j = m; j < n; ++j) {
      if (std::abs(a(j, m - 1)) > std::abs(x)) {
        x = a(j, m - 1);
        piv = j;
      }
    }
    if (piv != m) {
      a.row(piv).swap(a.row(m));
      a.col(piv).swap(a.col(m));
    }
    if (x != 0.0) {
      for (int i = m + 1; i < n; ++i) {
        double y = a(i, m - 1);
        if (y != 0.0) {
          y /= x;
          a(i, m - 1) = 0.0;
          for (int j = m; j < n; ++j) a(i, j) -= y * a(m, j);
          for (int j = 0; j < n; ++j) a(j, m) += y * a(j, i);
        }
      }
    }
  }
  for (int i = 2; i < n; ++i)
    for (int j = 0; j < i - 1; ++j) a(i, j) = 0.0;
}

double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

// Francis double-shift QR on an upper Hessenberg matrix; destroys `a`.
std::vector<std::complex<double>> hessenberg_qr(Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<std::complex<double>> w(n);
  const double eps = std::numeric_limits<double>::epsilon();
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

  int nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l > 0; --l) {
        double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) <= eps * s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      double x = a(nn, nn);
      if (l == nn) {
        w[nn--] = x + t;
      } else {
        double y = a(nn - 1, nn - 1);
        double ww = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          const double p = 0.5 * (y - x);
          const double q = p * p + ww;
          double z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign_of(z, p);
            w[nn - 1] = w[nn] = x + z;
            if (z != 0.0) w[nn] = x - ww / z;
          } else {
            w[nn] = {x + p, -z};
            w[nn - 1] = std::conj(w[nn]);
          }
          nn -= 2;
        } else {
          if (its == 60) throw std::runtime_error("eigenvalues: QR iteration did not converge");
          if (its == 10 || its == 20) {
            // exceptional shift
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            ww = -0.4375 * s * s;
          }
          ++its;
          int m = nn - 2;
          double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
          for (; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            double s = y - z;
            p = (r * s - ww) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) +
                                            std::abs(a(m + 1, m + 1)));
            if (u <= eps * v) break;
          }
          for (int i = m; i < nn - 1; ++i) {
            a(i + 2, i) = 0.0;
            if (i != m) a(i + 2, i - 1) = 0.0;
          }
          for (int kk = m; kk < nn; ++kk) {
            if (kk != m) {
              p = a(kk, kk - 1);
              q = a(kk + 1, kk - 1);
              r = 0.0;
              if (kk + 1 != nn) r = a(kk + 2, kk - 1);
              x = std::abs(p) + std::abs(q) + std::abs(r);
              if (x != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s != 0.0) {
              if (kk == m) {
                if (l != m) a(kk, kk - 1) = -a(kk, kk - 1);
              } else {
                a(kk, kk - 1) = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = kk; j <= nn; ++j) {
                p = a(kk, j) + q * a(kk + 1, j);
                if (kk + 1 != nn) {
                  p += r * a(kk + 2, j);
                  a(kk + 2, j) -= p * z;
                }
                a(kk + 1, j) -= p * y;
                a(kk, j) -= p * x;
              }
              const int mmin = nn < kk + 3 ? nn : kk + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a(i, kk) + y * a(i, kk + 1);
                if (kk + 1 != nn) {
                  p += z * a(i, kk + 2);
                  a(i, kk + 2) -= p * r;
                }
                a(i, kk + 1) -= p * q;
                a(i, kk) -= p;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  return w;
}

}  // namespace

std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("eigenvalues: matrix must be square");
  if (A.rows() == 0) return {};
  Eigen::MatrixXd a = A;
  reduce_to_hessenberg(a);
  return hessenberg_qr(a);
}

double min_modulus_eigenvalue(const Eigen::MatrixXd& X) {
  const auto ev = eigenvalues(X);
  if (ev.empty()) throw std::invalid_argument("min_modulus_eigenvalue: empty matrix");
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& z : ev) lo = std::min(lo, std::abs(z));
  const double scale = X.cwiseAbs().maxCoeff();
  if (!(lo > 1e-14 * scale)) {
    throw std::domain_error("min_modulus_eigenvalue: matrix is singular");
  }
  return lo;
}

}  // namespace phbvm
