#include "phbvm/casimir.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "iteration.hpp"

namespace phbvm {

std::vector<Matrix> casimir_fourier_coeffs(const PoissonSystem& sys, const MethodTableau& tab,
                                           const Matrix& Y) {
  const int r = sys.num_casimirs();
  if (r == 0) throw std::invalid_argument("casimir_fourier_coeffs: system has no Casimirs");
  const Eigen::Index m = Y.rows();
  std::vector<Matrix> pi(tab.s, Matrix::Zero(m, r));
  for (int l = 0; l < tab.k; ++l) {
    const Vector y = Y.col(l);
    for (int q = 0; q < r; ++q) {
      const Vector g = sys.casimirs[q].gradient(y);
      for (int i = 0; i < tab.s; ++i) pi[i].col(q) += tab.rule.weights[l] * tab.P(l, i) * g;
    }
  }
  return pi;
}

Matrix default_skew_matrix(int m, int index) {
  if (m < 2) throw std::invalid_argument("default_skew_matrix: dimension must be at least 2");
  const int pairs = m * (m - 1) / 2;
  if (index < 1 || index > pairs) {
    throw std::out_of_range("default_skew_matrix: index " + std::to_string(index) +
                            " outside [1, " + std::to_string(pairs) + "]");
  }
  int count = 0;
  for (int p = 0; p < m; ++p) {
    for (int q = p + 1; q < m; ++q) {
      if (++count == index) {
        Matrix S = Matrix::Zero(m, m);
        S(p, q) = 1.0;
        S(q, p) = -1.0;
        return S;
      }
    }
  }
  return Matrix::Zero(m, m);  // unreachable
}

std::vector<Matrix> default_skew_set(const PoissonSystem& sys, int offset) {
  const int pairs = sys.m * (sys.m - 1) / 2;
  std::vector<Matrix> out;
  for (int q = 0; q < sys.num_casimirs(); ++q)
    out.push_back(default_skew_matrix(sys.m, (q + offset) % pairs + 1));
  return out;
}

Matrix casimir_coupling_matrix(const Matrix& pi0, const Vector& gamma0,
                               const std::vector<Matrix>& Btilde) {
  const Eigen::Index r = static_cast<Eigen::Index>(Btilde.size());
  Matrix M(r, r);
  for (Eigen::Index l = 0; l < r; ++l) M.col(l) = pi0.transpose() * (Btilde[l] * gamma0);
  return M;
}

Vector alpha_update(const std::vector<Matrix>& pi_hat, const Matrix& phi, const Vector& gamma0,
                    const std::vector<Matrix>& Btilde) {
  const Eigen::Index r = static_cast<Eigen::Index>(Btilde.size());
  if (pi_hat.empty() || pi_hat[0].cols() != r) {
    throw std::invalid_argument("alpha_update: Casimir count mismatch");
  }
  Vector numerator = Vector::Zero(r);
  for (std::size_t i = 0; i < pi_hat.size(); ++i)
    numerator.noalias() += pi_hat[i].transpose() * phi.col(static_cast<Eigen::Index>(i));
  if (numerator.isZero(0.0)) return Vector::Zero(r);

  const Matrix& pi0 = pi_hat[0];
  const Matrix M = casimir_coupling_matrix(pi0, gamma0, Btilde);
  const double gnorm = gamma0.norm();
  double scale = 1.0;
  for (Eigen::Index q = 0; q < r; ++q) scale *= pi0.col(q).norm() * gnorm;
  const double threshold = 1e-10 * scale;

  if (r == 1) {
    if (!(std::abs(M(0, 0)) >= threshold) || M(0, 0) == 0.0) {
      std::ostringstream msg;
      msg << "Casimir 0: pi_0^T Btilde gamma_0 = " << M(0, 0) << " is degenerate";
      throw DegenerateCasimirDirection(msg.str(), 0);
    }
    return Vector::Constant(1, numerator[0] / M(0, 0));
  }
  const double det = M.determinant();
  if (!(std::abs(det) >= threshold) || det == 0.0) {
    // Blame the Casimir whose coupling column is weakest relative to its scale.
    int worst = 0;
    double weakest = std::numeric_limits<double>::infinity();
    for (Eigen::Index q = 0; q < r; ++q) {
      const double rel = M.col(q).norm() / (pi0.col(q).norm() * gnorm + 1e-300);
      if (rel < weakest) {
        weakest = rel;
        worst = static_cast<int>(q);
      }
    }
    std::ostringstream msg;
    msg << "Casimir " << worst << ": coupling matrix is degenerate (det = " << det << ")";
    throw DegenerateCasimirDirection(msg.str(), worst);
  }
  return M.partialPivLu().solve(numerator);
}

namespace {

Vector skew_shift(const Vector& alpha, const std::vector<Matrix>& Btilde, const Vector& gamma0) {
  Vector d = Vector::Zero(gamma0.size());
  for (std::size_t q = 0; q < Btilde.size(); ++q)
    if (alpha[static_cast<Eigen::Index>(q)] != 0.0)
      d.noalias() += alpha[static_cast<Eigen::Index>(q)] * (Btilde[q] * gamma0);
  return d;
}

StepResult casimir_step_with(const PoissonSystem& sys, const MethodTableau& tab,
                             const Vector& y0, double h, const SolverConfig& cfg,
                             const Matrix* phi_start, const CasimirStepOptions& opts,
                             const std::vector<Matrix>& Btilde) {
  const int r = sys.num_casimirs();
  const detail::UpdateRule rule(sys, tab, y0, h, cfg);
  detail::ConvergenceMonitor monitor(cfg, y0);

  Matrix phi = phi_start ? *phi_start : Matrix::Zero(y0.size(), tab.s);
  Vector alpha = Vector::Zero(r);
  Vector shift = Vector::Zero(y0.size());
  bool shifted = false;  // an all-zero shift is passed as empty to keep the plain path exact

  while (true) {
    const auto ev = detail::evaluate_nodes(sys, tab, y0, h, phi, shifted ? shift : Vector());
    const Matrix F = phi - ev.G;
    double res = F.cwiseAbs().maxCoeff();

    // alpha is taken from G = rho_hat gamma_hat at the current stages rather
    // than from the iterate phi; the two agree at the solution, but G does not
    // carry the iterate's error, which 1 / (pi_0^T Btilde gamma_0) amplifies.
    Vector alpha_next, shift_next;
    if (!opts.force_zero_alpha) {
      const Vector gamma0 = ev.gamma_hat.col(0);
      alpha_next = alpha_update(casimir_fourier_coeffs(sys, tab, ev.Y), ev.G, gamma0, Btilde);
      shift_next = skew_shift(alpha_next, Btilde, gamma0);
      res = std::max(res, (shift_next - shift).cwiseAbs().maxCoeff());
    }
    const bool done = monitor.observe(res);
    if (!done && monitor.exhausted()) break;
    phi = rule.next(phi, F);
    if (!opts.force_zero_alpha) {
      alpha = std::move(alpha_next);
      shift = std::move(shift_next);
      shifted = !shift.isZero(0.0);
    }
    if (done) break;
  }

  const SolveStats& st = monitor.stats();
  if (!st.converged) {
    std::ostringstream msg;
    msg << to_string(cfg.solver) << " solver (Casimir-corrected) did not converge: residual "
        << st.residual_norm << " after " << st.iterations << " iterations";
    throw SolverFailure(msg.str(), st);
  }
  StepResult out;
  out.y1 = y0 + h * (phi.col(0) - shift);
  out.phi = std::move(phi);
  out.alpha = alpha;
  out.iterations = st.iterations;
  out.residual_norm = st.residual_norm;
  out.tolerance = st.tolerance;
  out.converged = true;
  out.stagnated = st.stagnated;
  return out;
}

}  // namespace

StepResult step_with_casimir(const PoissonSystem& sys, const MethodTableau& tab,
                             const Vector& y0, double h, const SolverConfig& cfg,
                             const Matrix* phi_start, const CasimirStepOptions& opts) {
  if (sys.num_casimirs() == 0) {
    throw std::invalid_argument("step_with_casimir: system has no Casimirs");
  }
  if (!sys.casimir_skew.empty()) {
    if (static_cast<int>(sys.casimir_skew.size()) != sys.num_casimirs()) {
      throw std::invalid_argument("step_with_casimir: need one skew matrix per Casimir");
    }
    return casimir_step_with(sys, tab, y0, h, cfg, phi_start, opts, sys.casimir_skew);
  }
  try {
    return casimir_step_with(sys, tab, y0, h, cfg, phi_start, opts, default_skew_set(sys, 0));
  } catch (const DegenerateCasimirDirection&) {
    return casimir_step_with(sys, tab, y0, h, cfg, phi_start, opts, default_skew_set(sys, 1));
  }
}

}  // namespace phbvm
