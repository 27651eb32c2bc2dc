#include "phbvm/legendre.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace phbvm {

namespace {

// Classical Legendre L_n(t) and L_{n-1}(t) on [-1,1].
void legendre_pair(int n, double t, double& ln, double& lnm1) {
  double p0 = 1.0;
  double p1 = t;
  if (n == 0) {
    ln = 1.0;
    lnm1 = 0.0;
    return;
  }
  for (int j = 1; j < n; ++j) {
    const double p2 = ((2.0 * j + 1.0) * t * p1 - j * p0) / (j + 1.0);
    p0 = p1;
    p1 = p2;
  }
  ln = p1;
  lnm1 = p0;
}

}  // namespace

double eval_legendre(int j, double c) {
  double lj = 0.0;
  double ljm1 = 0.0;
  legendre_pair(j, 2.0 * c - 1.0, lj, ljm1);
  return std::sqrt(2.0 * j + 1.0) * lj;
}

std::vector<double> eval_legendre_all(int n, double c) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  const double t = 2.0 * c - 1.0;
  double p0 = 1.0;
  double p1 = t;
  out[0] = 1.0;
  if (n >= 1) out[1] = std::sqrt(3.0) * t;
  for (int j = 1; j < n; ++j) {
    const double p2 = ((2.0 * j + 1.0) * t * p1 - j * p0) / (j + 1.0);
    p0 = p1;
    p1 = p2;
    out[j + 1] = std::sqrt(2.0 * j + 3.0) * p2;
  }
  return out;
}

double eval_legendre_antiderivative(int j, double c) {
  if (j == 0) return c;
  // int_0^c P_j = sqrt(2j+1)/2 * int_{-1}^{t} L_j = (L_{j+1}(t) - L_{j-1}(t)) / (2 sqrt(2j+1))
  const double t = 2.0 * c - 1.0;
  double ljm1 = 0.0;
  double lj = 0.0;
  legendre_pair(j, t, lj, ljm1);
  const double ljp1 = ((2.0 * j + 1.0) * t * lj - j * ljm1) / (j + 1.0);
  return (ljp1 - ljm1) / (2.0 * std::sqrt(2.0 * j + 1.0));
}

QuadratureRule gauss_rule(int k) {
  if (k < 1 || k > kMaxGaussNodes) {
    throw std::out_of_range("gauss_rule: node count " + std::to_string(k) +
                            " outside [1, " + std::to_string(kMaxGaussNodes) + "]");
  }
  QuadratureRule rule;
  rule.k = k;
  rule.nodes.assign(k, 0.0);
  rule.weights.assign(k, 0.0);

  // Roots on [-1,1] in ascending order; only the lower half is computed and
  // the upper half mirrored.
  const int half = (k + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double t = -std::cos(std::numbers::pi * (i + 0.75) / (k + 0.5));
    double lk = 0.0;
    double lkm1 = 0.0;
    double dlk = 0.0;
    for (int it = 0; it < 100; ++it) {
      legendre_pair(k, t, lk, lkm1);
      dlk = k * (t * lk - lkm1) / (t * t - 1.0);
      const double dt = lk / dlk;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    legendre_pair(k, t, lk, lkm1);
    dlk = k * (t * lk - lkm1) / (t * t - 1.0);
    const double w = 1.0 / ((1.0 - t * t) * dlk * dlk);  // half of the [-1,1] weight

    const double c = 0.5 * (1.0 + t);
    rule.nodes[i] = c;
    rule.weights[i] = w;
    rule.nodes[k - 1 - i] = 1.0 - c;
    rule.weights[k - 1 - i] = w;
  }
  if (k % 2 == 1) rule.nodes[k / 2] = 0.5;
  return rule;
}

}  // namespace phbvm
